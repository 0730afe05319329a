import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hadamard_ppa import (
    ConfigurationError,
    DomainError,
    EuclideanSpace,
    SpiderPoint,
    SpiderSpace,
    check_convexity_class,
    evaluate,
    make_objective,
    slope_estimate,
)
from hadamard_ppa import objectives as lib
from hadamard_ppa.objectives import ProbeOptions, recheck_witness

E1 = EuclideanSpace(1)
S3 = SpiderSpace(3)


def test_evaluate_examples():
    p = SpiderPoint(2, 1.5)
    assert evaluate(lib.squared_distance(S3, p), p) == 0.0
    assert evaluate(lib.gaussian_well(E1, E1.point(0.0)), E1.point(0.0)) == 0.0
    E2 = EuclideanSpace(2)
    f = lib.ball_indicator_plus(lib.distance(E2, E2.point([0, 0])), E2.point([0, 0]), 1.0)
    assert evaluate(f, E2.point([2.0, 0.0])) == math.inf
    with pytest.raises(DomainError):
        evaluate(f, np.array([1.0, 2.0, 3.0]))


def test_make_objective_examples():
    f = make_objective(E1, {"kind": "squared_distance", "center": [0.0]})
    assert f(E1.point(3.0)) == 9.0
    g = make_objective(E1, {"kind": "gaussian_well", "center": [0.0]})
    assert g(E1.point(0.0)) == 0.0
    assert E1.equal(g.known_minimizer, E1.point(0.0))
    assert g.weak_convexity_alpha == 1.0
    h = make_objective(S3, {"kind": "distance", "center": {"leg": 2, "r": 1.0}})
    assert h(SpiderPoint(1, 1.0)) == 2.0


@pytest.mark.parametrize("spec", [
    {"kind": "cubic"},
    {"kind": "squared_distance"},
    {"kind": "squared_distance", "center": [0.0], "sharpness": 2},
    {"kind": "ball_indicator_plus", "center": [0.0], "radius": 1.0},
    {"center": [0.0]},
])
def test_make_objective_rejects_malformed(spec):
    with pytest.raises(ConfigurationError):
        make_objective(E1, spec)


def test_make_objective_validate_accepts_library(space):
    c = space.sample(np.random.default_rng(3))
    for kind in ("squared_distance", "distance", "gaussian_well"):
        make_objective(space, {"kind": kind, "center": space.to_payload(c)}, validate=True)


def test_validate_rejects_false_declaration():
    # declared convex but the table has a bump
    spec = {"kind": "tabulated", "knots": [-2, 0, 1, 2], "values": [1, 0, 2, 1], "classes": ["convex"]}
    with pytest.raises(ConfigurationError):
        make_objective(E1, spec, validate=True)


# -- slope ------------------------------------------------------------------

def test_slope_examples():
    f = lib.distance(E1, E1.point(0.0))
    assert slope_estimate(E1, f, E1.point(2.0)).value == pytest.approx(1.0, abs=1e-6)
    assert slope_estimate(E1, f, E1.point(0.0)).value == 0.0
    g = lib.squared_distance(E1, E1.point(0.0))
    assert slope_estimate(E1, g, E1.point(3.0)).value == pytest.approx(6.0, abs=1e-3)


def test_slope_trend_reports_every_shell():
    g = lib.squared_distance(E1, E1.point(0.0))
    est = slope_estimate(E1, g, E1.point(3.0), ProbeOptions(shells=6))
    assert len(est.trend) == 7
    radii = [r for r, _ in est.trend]
    assert radii == sorted(radii, reverse=True)


def test_slope_outside_domain():
    E2 = EuclideanSpace(2)
    f = lib.ball_indicator_plus(lib.distance(E2, E2.point([0, 0])), E2.point([0, 0]), 1.0)
    with pytest.raises(DomainError):
        slope_estimate(E2, f, E2.point([3.0, 0.0]))


def test_slope_vanishes_at_known_minimizers(space, rng):
    c = space.sample(rng)
    for f in (lib.squared_distance(space, c), lib.distance(space, c), lib.gaussian_well(space, c)):
        assert slope_estimate(space, f, f.known_minimizer).value <= 1e-4


def test_slope_on_spider_gradient(rng):
    # d^2(., origin) on a leg: slope is 2r
    f = lib.squared_distance(S3, SpiderPoint(1, 0.0))
    for r in (0.5, 1.0, 4.0):
        assert slope_estimate(S3, f, SpiderPoint(2, r)).value == pytest.approx(2 * r, rel=1e-3)


@given(st.floats(-3, 3))
def test_gaussian_slope_matches_derivative(y):
    f = lib.gaussian_well(E1, E1.point(0.0))
    ref = abs(2 * y * math.exp(-y * y))
    assert slope_estimate(E1, f, E1.point(y)).value == pytest.approx(ref, abs=1e-3)


def test_small_slope_means_near_minimum(rng):
    # pseudo-convex objectives: approximate critical points have near-minimal value
    for f in (lib.squared_distance(E1, E1.point(0.0)), lib.gaussian_well(E1, E1.point(0.0))):
        for y in np.linspace(-1e-5, 1e-5, 7):
            x = E1.point(y)
            if slope_estimate(E1, f, x).value <= 1e-4:
                assert f(x) - f(f.known_minimizer) <= 1e-3


# -- convexity classes -----------------------------------------------------------

def test_squared_distance_strongly_convex_everywhere(space):
    f = lib.squared_distance(space, space.sample(np.random.default_rng(0)))
    for seed in range(3):
        v = check_convexity_class(space, f, "strongly-convex", 1.0, samples=300, seed=seed)
        assert v.passed, v.witness


def test_gaussian_not_convex_definition_witness():
    f = lib.gaussian_well(E1, E1.point(0.0))
    mid = f(E1.point(1.5))
    avg = 0.5 * (f(E1.point(1.0)) + f(E1.point(2.0)))
    assert mid == pytest.approx(0.8946, abs=1e-4)
    assert avg == pytest.approx(0.8069, abs=1e-4)
    assert mid - avg == pytest.approx(0.0877, abs=1e-4)


def test_gaussian_convex_verdict_has_recheckable_witness():
    f = lib.gaussian_well(E1, E1.point(0.0))
    v = check_convexity_class(E1, f, "convex", samples=1000, seed=0)
    assert not v.passed and v.status == "failed"
    assert recheck_witness(E1, f, v)


def test_gaussian_weakly_convex_with_alpha_one(space):
    f = lib.gaussian_well(space, space.sample(np.random.default_rng(1)))
    v = check_convexity_class(space, f, "weakly-convex", 1.0, samples=500, seed=0)
    assert v.passed, v.witness


def test_gaussian_quasi_and_pseudo_convex():
    f = lib.gaussian_well(E1, E1.point(0.0))
    assert check_convexity_class(E1, f, "quasi-convex", samples=1000, seed=0).passed
    assert check_convexity_class(E1, f, "pseudo-convex", samples=300, seed=0).passed


def test_distance_strictly_convex_fails_on_a_line():
    # |y| is affine on each half-line, so the strict inequality fails there
    f = lib.distance(E1, E1.point(0.0))
    v = check_convexity_class(E1, f, "strictly-convex", samples=1000, seed=0)
    assert not v.passed
    assert recheck_witness(E1, f, v)


def test_distance_squared_strongly_quasi_convex():
    f = lib.squared_distance(S3, SpiderPoint(1, 2.0))
    assert check_convexity_class(S3, f, "strongly-quasi-convex", 1.0, samples=500, seed=0).passed


def test_class_needs_alpha():
    with pytest.raises(ValueError):
        check_convexity_class(E1, lib.distance(E1, E1.point(0.0)), "weakly-convex")


def test_tabulated_interpolates():
    f = make_objective(E1, {"kind": "tabulated", "knots": [-1, 0, 2], "values": [1, 0, 4]})
    assert f(E1.point(1.0)) == 2.0
    assert f(E1.point(3.0)) == math.inf


def test_ball_indicator_minimizer_is_projection():
    E2 = EuclideanSpace(2)
    base = lib.squared_distance(E2, E2.point([4.0, 1.0]), 0.5)
    f = lib.ball_indicator_plus(base, E2.point([0.0, 0.0]), 1.0)
    np.testing.assert_allclose(f.known_minimizer, np.array([4.0, 1.0]) / math.hypot(4, 1), atol=1e-12)
