"""Objective functions, the slope estimator and sampled convexity-class checkers."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CapabilityError, ConfigurationError, DomainError
from .geodesic import GeodesicSpace, Point
from .spaces import EuclideanSpace

INF = math.inf

CLASSES = (
    "convex",
    "strictly-convex",
    "weakly-convex",
    "strongly-convex",
    "quasi-convex",
    "strongly-quasi-convex",
    "pseudo-convex",
)
_NEEDS_ALPHA = {"weakly-convex", "strongly-convex", "strongly-quasi-convex"}


@dataclass(frozen=True)
class RadialProfile:
    """``f = phi(d(., center))`` with ``phi`` nondecreasing on ``[0, inf)``.

    For such objectives the resolvent lies on the geodesic from ``x`` to
    ``center`` (projecting onto that segment shrinks both distances), which
    reduces the proximal problem to one dimension.
    """

    center: Point
    phi: Callable[[float], float]
    dphi: Optional[Callable[[float], float]] = None
    kind: str = "general"  # "squared" and "linear" have closed-form resolvents
    weight: float = 1.0


@dataclass(frozen=True)
class Objective:
    space: GeodesicSpace
    evaluator: Callable[[Point], float]
    weak_convexity_alpha: Optional[float] = None
    strong_qc_alpha: Optional[float] = None
    known_minimizer: Optional[Point] = None
    description: str = ""
    declared_classes: tuple = ()
    lower_bound: Optional[float] = None
    radial: Optional[RadialProfile] = None
    project_to_domain: Optional[Callable[[Point], Point]] = None
    spec: Optional[dict] = field(default=None, compare=False)

    def __call__(self, x) -> float:
        return self.evaluator(x)


def evaluate(f: Objective, x: Point) -> float:
    f.space.check(x)
    return float(f.evaluator(x))


# -- slope ------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeOptions:
    """Finite probe scheme standing in for the limsup in the slope.

    Shell radii are ``r0 * 2**-k`` for ``k = 0..shells`` with
    ``r0 = r0_factor * (1 + scale(x))``; the estimate is the largest descent
    ratio over the finest ``tail`` fraction of shells.
    """

    r0_factor: float = 1e-2
    shells: int = 10
    directions: int = 32
    tail: float = 0.5
    seed: Optional[int] = 0
    r0: Optional[float] = None


@dataclass(frozen=True)
class SlopeEstimate:
    value: float
    radii: tuple
    shell_values: tuple

    def __float__(self):
        return self.value

    @property
    def trend(self):
        """(radius, max ratio) per shell, coarse to fine."""
        return list(zip(self.radii, self.shell_values))


def slope_estimate(space: GeodesicSpace, f, x: Point, probe: ProbeOptions = ProbeOptions(),
                   project=None) -> SlopeEstimate:
    """Estimate ``|df|(x) = limsup_{y -> x} max(f(x) - f(y), 0) / d(x, y)``.

    ``project`` optionally maps probe points back into a convex domain; the
    ratio is still taken with the true distance to the projected point.
    """
    space.check(x)
    fx = f(x)
    if not fx < INF:
        raise DomainError("slope is only defined on D(f)")
    rng = None if probe.seed is None else np.random.default_rng(probe.seed)
    dirs = space.directions(x, probe.directions, rng)
    r0 = probe.r0 if probe.r0 is not None else probe.r0_factor * (1.0 + space.scale(x))
    radii, values = [], []
    for k in range(probe.shells + 1):
        r = r0 * 2.0**-k
        best = 0.0
        for u in dirs:
            try:
                y = space.walk(x, u, r)
            except DomainError:
                continue
            if project is not None:
                y = project(y)
            dy = space.distance(x, y)
            fy = f(y)
            if dy > 0.0 and fy < fx:
                best = max(best, (fx - fy) / dy)
        radii.append(r)
        values.append(best)
    first = min(int(math.floor(probe.shells * (1.0 - probe.tail))), probe.shells)
    return SlopeEstimate(max(values[first:]), tuple(radii), tuple(values))


# -- convexity classes ------------------------------------------------------


@dataclass(frozen=True)
class ConvexityVerdict:
    """Outcome of a sampled check of one convexity class.

    ``status`` is ``"passed"``, ``"failed"`` or ``"inconclusive"`` (the
    pseudo-convexity check can only confirm witnesses, never refute).
    """

    class_checked: str
    alpha: Optional[float]
    passed: bool
    status: str
    witness: Optional[dict] = None
    samples: int = 0


def class_inequality(space, f, cls, alpha, x, y, t):
    """``(lhs, rhs, strict)`` for ``z = (1 - t) x (+) t y``; the class holds iff lhs <= rhs."""
    z = space.geodesic(x, y, t)
    fx, fy, fz = f(x), f(y), f(z)
    d2 = space.squared_distance(x, y)
    w = t * (1.0 - t) * d2
    a = alpha or 0.0
    if cls in ("convex", "strictly-convex"):
        rhs = (1 - t) * fx + t * fy
    elif cls == "weakly-convex":
        rhs = (1 - t) * fx + t * fy + a * w
    elif cls == "strongly-convex":
        rhs = (1 - t) * fx + t * fy - a * w
    elif cls == "quasi-convex":
        rhs = max(fx, fy)
    elif cls == "strongly-quasi-convex":
        rhs = max(fx, fy) - a * w
    else:
        raise ValueError(cls)
    return fz, rhs, cls == "strictly-convex"


def _violation(lhs, rhs, strict, scale, tol):
    if not rhs < INF:
        return False
    if not lhs < INF:
        return True
    if strict:
        return lhs >= rhs
    return lhs - rhs > tol * scale


def recheck_witness(space, f, verdict: ConvexityVerdict, tol: Optional[float] = None) -> bool:
    """True iff the verdict's witness still violates the class inequality."""
    w = verdict.witness
    if w is None or verdict.class_checked == "pseudo-convex":
        return False
    tol = space.tolerance if tol is None else tol
    lhs, rhs, strict = class_inequality(space, f, verdict.class_checked, verdict.alpha, w["x"], w["y"], w["t"])
    scale = 1.0 + abs(f(w["x"])) + abs(f(w["y"])) + (verdict.alpha or 0.0) * space.squared_distance(w["x"], w["y"])
    return _violation(lhs, rhs, strict, scale, tol)


_BETA_GRID = np.logspace(-6, 2, 33)
_DELTAS = (1.0, 0.5, 0.25, 0.125)


def _pseudo_witness(space, f, x, y):
    """Search (beta, delta) with f(y) - f(t x (+) (1-t) y) >= t beta on (0, delta)."""
    fy = f(y)
    for delta in _DELTAS:
        ts = [delta * 2.0**-j for j in range(1, 13)] + [delta * k / 8 for k in range(1, 8)]
        beta_star = min((fy - f(space.geodesic(y, x, t))) / t for t in ts)
        ok = _BETA_GRID[_BETA_GRID <= beta_star]
        if ok.size:
            return float(ok[-1]), delta
    return None


def check_convexity_class(
    space: GeodesicSpace,
    f,
    cls: str,
    alpha: Optional[float] = None,
    samples: int = 1000,
    seed: int = 0,
    tol: Optional[float] = None,
) -> ConvexityVerdict:
    """Sample ``(x, y, t)`` and test the defining inequality of ``cls``.

    Samples are drawn identically for every class, so verdicts for
    different classes with the same seed see the same triples.
    """
    if cls not in CLASSES:
        raise ValueError(f"unknown convexity class {cls!r}")
    if cls in _NEEDS_ALPHA and (alpha is None or alpha < 0):
        raise ValueError(f"{cls} needs a nonnegative alpha")
    tol = space.tolerance if tol is None else tol
    rng = np.random.default_rng(seed)
    inconclusive = None
    for _ in range(max(int(samples), 1)):
        x, y = space.sample(rng), space.sample(rng)
        t = float(rng.uniform(1e-3, 1 - 1e-3))
        fx, fy = f(x), f(y)
        if cls == "pseudo-convex":
            if not (fx < INF and fy < INF):
                continue
            if fy < fx:
                x, y, fx, fy = y, x, fy, fx
            if fy <= fx + tol * (1 + abs(fx)):
                continue
            if _pseudo_witness(space, f, x, y) is None and inconclusive is None:
                inconclusive = {"x": x, "y": y, "t": None, "beta": None, "delta": None}
            continue
        if cls == "strictly-convex" and space.distance(x, y) <= tol:
            continue
        lhs, rhs, strict = class_inequality(space, f, cls, alpha, x, y, t)
        scale = 1.0 + abs(fx) + abs(fy) + (alpha or 0.0) * space.squared_distance(x, y)
        if _violation(lhs, rhs, strict, scale, tol):
            witness = {"x": x, "y": y, "t": t, "lhs": lhs, "rhs": rhs}
            return ConvexityVerdict(cls, alpha, False, "failed", witness, samples)
    if inconclusive is not None:
        return ConvexityVerdict(cls, alpha, False, "inconclusive", inconclusive, samples)
    return ConvexityVerdict(cls, alpha, True, "passed", None, samples)


# -- objective library -----------------------------------------------------


def squared_distance(space, center, weight=1.0) -> Objective:
    w = float(weight)
    return Objective(
        space,
        lambda x: w * space.squared_distance(x, center),
        weak_convexity_alpha=0.0,
        strong_qc_alpha=w,
        known_minimizer=center,
        description=f"{w:g} * d^2(., p)",
        declared_classes=(
            ("convex", None),
            ("strictly-convex", None),
            ("strongly-convex", w),
            ("quasi-convex", None),
            ("strongly-quasi-convex", w),
            ("pseudo-convex", None),
        ),
        lower_bound=0.0,
        radial=RadialProfile(center, lambda r: w * r * r, lambda r: 2.0 * w * r, "squared", w),
    )


def distance(space, center, weight=1.0) -> Objective:
    w = float(weight)
    return Objective(
        space,
        lambda x: w * space.distance(x, center),
        weak_convexity_alpha=0.0,
        known_minimizer=center,
        description=f"{w:g} * d(., p)",
        declared_classes=(("convex", None), ("quasi-convex", None), ("pseudo-convex", None)),
        lower_bound=0.0,
        radial=RadialProfile(center, lambda r: w * r, lambda r: w, "linear", w),
    )


def gaussian_well(space, center) -> Objective:
    """``1 - exp(-d^2(., p))``: quasi-convex, pseudo-convex, 1-weakly convex, not convex."""
    return Objective(
        space,
        lambda x: -math.expm1(-space.squared_distance(x, center)),
        weak_convexity_alpha=1.0,
        known_minimizer=center,
        description="1 - exp(-d^2(., p))",
        declared_classes=(("weakly-convex", 1.0), ("quasi-convex", None), ("pseudo-convex", None)),
        lower_bound=0.0,
        radial=RadialProfile(center, lambda r: -math.expm1(-r * r), lambda r: 2.0 * r * math.exp(-r * r)),
    )


def ball_indicator_plus(base: Objective, center, radius) -> Objective:
    """``base`` on the closed ball ``B(center, radius)``, ``+inf`` outside."""
    space = base.space
    radius = float(radius)
    if radius <= 0:
        raise ConfigurationError("ball radius must be positive")

    def project(x):
        D = space.distance(center, x)
        return x if D <= radius else space.geodesic(center, x, radius / D)

    def f(x):
        return base(x) if space.distance(x, center) <= radius else INF

    known = None
    if base.known_minimizer is not None and space.distance(base.known_minimizer, center) <= radius:
        known = base.known_minimizer
    elif base.radial is not None:
        # phi nondecreasing: the constrained minimizer is the projection of the center of the well
        known = project(base.radial.center)
    return Objective(
        space,
        f,
        weak_convexity_alpha=base.weak_convexity_alpha,
        strong_qc_alpha=base.strong_qc_alpha,
        known_minimizer=known,
        description=f"({base.description}) on ball of radius {radius:g}",
        declared_classes=base.declared_classes,
        lower_bound=base.lower_bound,
        project_to_domain=project,
    )


def tabulated(space, knots, values, weak_convexity_alpha=None, strong_qc_alpha=None,
              known_minimizer=None, classes=()) -> Objective:
    """Piecewise-linear interpolant on the real line, ``+inf`` outside the knot range."""
    if not (isinstance(space, EuclideanSpace) and space.dim == 1):
        raise CapabilityError("tabulated objectives live on the Euclidean line")
    xs = np.asarray(knots, dtype=float)
    ys = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2 or np.any(np.diff(xs) <= 0):
        raise ConfigurationError("tabulated objective needs >= 2 strictly increasing knots matching values")
    lo, hi = float(xs[0]), float(xs[-1])

    def f(x):
        v = float(x[0])
        return float(np.interp(v, xs, ys)) if lo <= v <= hi else INF

    if known_minimizer is None:
        known_minimizer = space.point([xs[int(np.argmin(ys))]])
    return Objective(
        space,
        f,
        weak_convexity_alpha=weak_convexity_alpha,
        strong_qc_alpha=strong_qc_alpha,
        known_minimizer=known_minimizer,
        description="tabulated 1-D function",
        declared_classes=tuple(classes),
        lower_bound=float(ys.min()),
        project_to_domain=lambda x: space.point([min(max(float(x[0]), lo), hi)]),
    )


_OBJECTIVE_KEYS = {
    "squared_distance": {"kind", "center", "weight"},
    "distance": {"kind", "center", "weight"},
    "gaussian_well": {"kind", "center"},
    "ball_indicator_plus": {"kind", "base", "center", "radius"},
    "tabulated": {"kind", "knots", "values", "weak_convexity_alpha", "strong_qc_alpha", "known_minimizer", "classes"},
}


def _parse_classes(raw):
    out = []
    for item in raw or ():
        if isinstance(item, str):
            out.append((item, None))
        else:
            out.append((item["class"], item.get("alpha")))
    for cls, _ in out:
        if cls not in CLASSES:
            raise ConfigurationError(f"unknown convexity class {cls!r}")
    return tuple(out)


def make_objective(space: GeodesicSpace, spec: dict, validate: bool = False) -> Objective:
    """Build a library objective from a config mapping.

    With ``validate`` every declared class is re-checked by sampling and a
    failed verdict raises ConfigurationError.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError(f"objective spec must be a mapping with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind not in _OBJECTIVE_KEYS:
        raise ConfigurationError(f"unknown objective kind {kind!r}; expected one of {sorted(_OBJECTIVE_KEYS)}")
    unknown = set(spec) - _OBJECTIVE_KEYS[kind]
    if unknown:
        raise ConfigurationError(f"unknown keys for {kind} objective: {sorted(unknown)}")

    def pt(key):
        if key not in spec:
            raise ConfigurationError(f"{kind} objective needs '{key}'")
        try:
            return space.point(spec[key])
        except DomainError as exc:
            raise ConfigurationError(f"{kind}.{key}: {exc}") from exc

    if kind == "squared_distance":
        f = squared_distance(space, pt("center"), spec.get("weight", 1.0))
    elif kind == "distance":
        f = distance(space, pt("center"), spec.get("weight", 1.0))
    elif kind == "gaussian_well":
        f = gaussian_well(space, pt("center"))
    elif kind == "ball_indicator_plus":
        if "radius" not in spec or "base" not in spec:
            raise ConfigurationError("ball_indicator_plus needs 'base' and 'radius'")
        f = ball_indicator_plus(make_objective(space, spec["base"]), pt("center"), spec["radius"])
    else:
        known = pt("known_minimizer") if "known_minimizer" in spec else None
        try:
            f = tabulated(
                space, spec.get("knots"), spec.get("values"),
                spec.get("weak_convexity_alpha"), spec.get("strong_qc_alpha"),
                known, _parse_classes(spec.get("classes")),
            )
        except CapabilityError as exc:
            raise ConfigurationError(str(exc)) from exc
    f = dataclasses.replace(f, spec=spec)
    if validate:
        problems = []
        for cls, alpha in f.declared_classes:
            v = check_convexity_class(space, f, cls, alpha, samples=300, seed=0)
            if v.status == "failed":
                problems.append(f"declared {cls}({alpha}) fails: {v.witness}")
        if problems:
            raise ConfigurationError(problems)
    return f
