import math

import numpy as np
import pytest

from hadamard_ppa import (
    ConfigurationError,
    DomainError,
    EuclideanSpace,
    PoincareBall,
    SpiderPoint,
    SpiderSpace,
    conformance_report,
    make_space,
)


def test_make_space_examples():
    e = make_space({"kind": "euclidean", "dim": 2})
    assert e.distance(e.point([0, 0]), e.point([1, 1])) == pytest.approx(math.sqrt(2), rel=1e-15)
    s = make_space({"kind": "spider", "legs": 3})
    assert s.distance(s.point({"leg": 1, "r": 2}), s.point({"leg": 3, "r": 3})) == 5.0
    p = make_space({"kind": "product", "components": [{"kind": "euclidean", "dim": 1}, {"kind": "spider", "legs": 3}]})
    a = p.point([[0.0], {"leg": 1, "r": 1.0}])
    b = p.point([[3.0], {"leg": 1, "r": 1.0}])
    assert p.distance(a, b) == 3.0


@pytest.mark.parametrize("spec", [
    {"kind": "euclidean", "dim": 0},
    {"kind": "spider", "legs": 1},
    {"kind": "spider"},
    {"kind": "torus"},
    {"kind": "euclidean", "dim": 2, "curvature": 0},
    {"kind": "product", "components": []},
    "euclidean",
])
def test_make_space_rejects_malformed(spec):
    with pytest.raises(ConfigurationError):
        make_space(spec)


@pytest.mark.parametrize("space,tol", [
    (EuclideanSpace(3), 1e-9),
    (SpiderSpace(5), 1e-9),
    (PoincareBall(2), 1e-6),
])
def test_conformance_examples(space, tol):
    rep = conformance_report(space, samples=1000, seed=0, tolerance=tol)
    assert rep.passed, rep.failures
    assert max(rep.violations.values()) <= tol


def test_conformance_catches_a_non_cat0_metric():
    # the sup-norm plane is geodesic but not uniquely so; straight lines are
    # still geodesics, but the quadrilateral/Cauchy-Schwarz checks must fail
    class SupNorm(EuclideanSpace):
        def distance(self, a, b):
            return float(np.max(np.abs(self.check(a) - self.check(b))))

    rep = conformance_report(SupNorm(2), samples=500, seed=0)
    assert not rep.passed
    assert {"cauchy_schwarz", "cat0_convexity"} & set(rep.failures)


def test_poincare_samples_stay_inside(rng):
    b = PoincareBall(2)
    for _ in range(500):
        assert np.linalg.norm(b.sample(rng)) <= 0.9


def test_poincare_walk_moves_requested_distance(rng):
    b = PoincareBall(2)
    for _ in range(50):
        x = b.sample(rng)
        for u in b.directions(x, 8, rng):
            r = rng.uniform(1e-6, 2.0)
            assert b.distance(x, b.walk(x, u, r)) == pytest.approx(r, rel=1e-8)


def test_spider_walk_through_origin():
    s = SpiderSpace(3)
    assert s.walk(SpiderPoint(1, 1.0), 2, 3.0) == SpiderPoint(2, 2.0)
    assert s.walk(SpiderPoint(1, 1.0), 1, 3.0) == SpiderPoint(1, 4.0)


def test_spider_origin_is_one_point():
    s = SpiderSpace(4)
    assert s.equal(SpiderPoint(1, 0.0), SpiderPoint(3, 0.0))
    assert s.distance(SpiderPoint(1, 0.0), SpiderPoint(3, 0.0)) == 0.0


def test_product_rejects_bad_component():
    p = make_space({"kind": "product", "components": [{"kind": "poincare", "dim": 2}, {"kind": "spider", "legs": 3}]})
    with pytest.raises(DomainError):
        p.point([[1.0, 0.0], {"leg": 1, "r": 1.0}])


def test_product_distance_is_l2_of_components(rng):
    p = make_space({"kind": "product", "components": [{"kind": "poincare", "dim": 2}, {"kind": "spider", "legs": 3}]})
    for _ in range(100):
        a, b = p.sample(rng), p.sample(rng)
        ref = math.hypot(p.components[0].distance(a[0], b[0]), p.components[1].distance(a[1], b[1]))
        assert p.distance(a, b) == pytest.approx(ref, rel=1e-12)
