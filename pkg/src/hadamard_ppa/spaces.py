"""Concrete CAT(0) model spaces: Euclidean, Poincare ball, k-leg spider, products."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError
from .geodesic import GeodesicSpace, _quasi_inner


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _unit_directions(dim: int, m: int, rng) -> list[np.ndarray]:
    if dim == 1:
        return [_frozen([1.0]), _frozen([-1.0])]
    if dim == 2:
        offset = 0.0 if rng is None else rng.uniform(0.0, 2 * math.pi / m)
        angles = offset + 2 * math.pi * np.arange(m) / m
        return [_frozen([math.cos(a), math.sin(a)]) for a in angles]
    rng = np.random.default_rng(0) if rng is None else rng
    dirs = []
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        dirs += [_frozen(e), _frozen(-e)]
    for v in rng.standard_normal((m, dim)):
        dirs.append(_frozen(v / np.linalg.norm(v)))
    return dirs


class _VectorSpace(GeodesicSpace):
    """Shared payload handling for spaces whose points are float vectors."""

    def __init__(self, dim: int):
        if not isinstance(dim, (int, np.integer)) or dim < 1:
            raise ConfigurationError(f"dimension must be an integer >= 1, got {dim!r}")
        self.dim = int(dim)

    def contains(self, p) -> bool:
        return (
            isinstance(p, np.ndarray)
            and p.shape == (self.dim,)
            and bool(np.all(np.isfinite(p)))
        )

    def point(self, payload):
        try:
            p = _frozen(np.atleast_1d(np.asarray(payload, dtype=float)))
        except (TypeError, ValueError) as exc:
            raise DomainError(f"cannot read a point of {self.description} from {payload!r}") from exc
        return self.check(p)

    def to_payload(self, p):
        return [float(v) for v in p]

    def directions(self, x, m=32, rng=None):
        return _unit_directions(self.dim, m, rng)

    def equal(self, a, b) -> bool:
        return bool(np.array_equal(a, b))

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self), self.dim))


class EuclideanSpace(_VectorSpace):
    tolerance = 1e-9

    @property
    def description(self):
        return f"Euclidean R^{self.dim}"

    def distance(self, a, b):
        return math.hypot(*(a - b))

    def squared_distance(self, a, b):
        diff = a - b
        return float(np.dot(diff, diff))

    def geodesic(self, x, y, t):
        if t == 0.0:
            return x
        if t == 1.0:
            return y
        return _frozen(x + t * (y - x))

    def walk(self, x, direction, r):
        return _frozen(x + r * direction)

    def sample(self, rng):
        return _frozen(rng.standard_normal(self.dim))

    def scale(self, x):
        return math.hypot(*x)


class PoincareBall(_VectorSpace):
    """Poincare ball model of hyperbolic n-space (curvature -1).

    Geodesics are evaluated on the hyperboloid and mapped back, so no Mobius
    arithmetic is involved. Points must satisfy ``|x| <= 1 - margin``.
    """

    tolerance = 1e-6

    def __init__(self, dim: int, margin: float = 1e-9):
        super().__init__(dim)
        if not 0.0 < margin < 1.0:
            raise ConfigurationError(f"boundary margin must lie in (0, 1), got {margin!r}")
        self.margin = float(margin)

    @property
    def description(self):
        return f"Poincare ball H^{self.dim}"

    def contains(self, p):
        return super().contains(p) and math.hypot(*p) <= 1.0 - self.margin

    def distance(self, a, b):
        num = math.hypot(*(a - b))
        if num == 0.0:
            return 0.0
        den = math.sqrt((1.0 - float(np.dot(a, a))) * (1.0 - float(np.dot(b, b))))
        return 2.0 * math.asinh(num / den)

    @staticmethod
    def _lift(b):
        nb = float(np.dot(b, b))
        s = 1.0 - nb
        return (1.0 + nb) / s, 2.0 * b / s

    def _drop(self, x0, xs):
        p = xs / (1.0 + x0)
        n = math.hypot(*p)
        limit = 1.0 - self.margin
        if n > limit:
            # rounding only; true geodesics between members stay inside
            if n > limit * (1 + 1e-12):
                raise DomainError(f"point with norm {n} left {self.description}")
            p = p * (limit / n)
        return _frozen(p)

    def geodesic(self, x, y, t):
        if t == 0.0:
            return x
        if t == 1.0:
            return y
        D = self.distance(x, y)
        if D == 0.0:
            return x
        x0, xs = self._lift(x)
        y0, ys = self._lift(y)
        sD = math.sinh(D)
        w1 = math.sinh((1.0 - t) * D) / sD
        w2 = math.sinh(t * D) / sD
        return self._drop(w1 * x0 + w2 * y0, w1 * xs + w2 * ys)

    def walk(self, x, direction, r):
        if r == 0.0:
            return x
        s = 1.0 - float(np.dot(x, x))
        bu = float(np.dot(x, direction))
        # pushforward of the Euclidean unit vector, rescaled to unit Lorentz norm
        v0 = 4.0 * bu / (s * s) * (s / 2.0)
        vs = (2.0 * direction / s + 4.0 * bu * x / (s * s)) * (s / 2.0)
        x0, xs = self._lift(x)
        ch, sh = math.cosh(r), math.sinh(r)
        p = (ch * xs + sh * vs) / (1.0 + ch * x0 + sh * v0)
        if math.hypot(*p) > 1.0 - self.margin:
            raise DomainError(f"walk of length {r} leaves {self.description}")
        return _frozen(p)

    def sample(self, rng):
        v = rng.standard_normal(self.dim)
        v /= np.linalg.norm(v)
        return _frozen(v * rng.uniform(0.0, 0.9))

    def scale(self, x):
        return 2.0 * math.atanh(min(math.hypot(*x), 1.0 - self.margin))

    def __hash__(self):
        return hash((type(self), self.dim, self.margin))


class SpiderPoint(NamedTuple):
    """A point ``r`` units out along leg ``leg`` (legs are numbered from 1)."""

    leg: int
    r: float


class SpiderSpace(GeodesicSpace):
    """k half-lines glued at a common origin: the simplest non-flat R-tree."""

    tolerance = 1e-9

    def __init__(self, legs: int):
        if not isinstance(legs, (int, np.integer)) or legs < 2:
            raise ConfigurationError(f"a spider needs an integer leg count >= 2, got {legs!r}")
        self.legs = int(legs)

    @property
    def description(self):
        return f"{self.legs}-leg spider"

    def contains(self, p):
        return (
            isinstance(p, SpiderPoint)
            and isinstance(p.leg, (int, np.integer))
            and 1 <= p.leg <= self.legs
            and isinstance(p.r, (int, float))
            and math.isfinite(p.r)
            and p.r >= 0.0
        )

    def point(self, payload):
        try:
            if isinstance(payload, dict):
                leg, r = payload["leg"], payload["r"]
            else:
                leg, r = payload
            p = SpiderPoint(int(leg), float(r))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"cannot read a spider point from {payload!r}") from exc
        return self.check(p)

    def to_payload(self, p):
        return {"leg": int(p.leg), "r": float(p.r)}

    def origin(self, leg: int = 1) -> SpiderPoint:
        return SpiderPoint(leg, 0.0)

    def distance(self, a, b):
        if a.leg == b.leg:
            return abs(a.r - b.r)
        return a.r + b.r

    def geodesic(self, x, y, t):
        if t == 0.0:
            return x
        if t == 1.0:
            return y
        if x.leg == y.leg or x.r == 0.0 or y.r == 0.0:
            leg = x.leg if x.r > 0.0 else y.leg
            r = x.r + t * (y.r - x.r)
            return SpiderPoint(x.leg if r == 0.0 else leg, r)
        s = t * (x.r + y.r)
        if s < x.r:
            return SpiderPoint(x.leg, x.r - s)
        if s == x.r:
            return SpiderPoint(x.leg, 0.0)
        return SpiderPoint(y.leg, s - x.r)

    def directions(self, x, m=32, rng=None):
        # direction j = head toward the far end of leg j
        return list(range(1, self.legs + 1))

    def walk(self, x, direction, r):
        if r == 0.0:
            return x
        if x.r == 0.0 or direction == x.leg:
            return SpiderPoint(direction, x.r + r)
        if r <= x.r:
            return SpiderPoint(x.leg, x.r - r)
        return SpiderPoint(direction, r - x.r)

    def sample(self, rng):
        return SpiderPoint(int(rng.integers(1, self.legs + 1)), float(rng.uniform(0.0, 10.0)))

    def scale(self, x):
        return x.r

    def equal(self, a, b):
        return a.r == b.r and (a.r == 0.0 or a.leg == b.leg)

    def __eq__(self, other):
        return isinstance(other, SpiderSpace) and other.legs == self.legs

    def __hash__(self):
        return hash((SpiderSpace, self.legs))


@dataclass(frozen=True)
class ProductDirection:
    weights: tuple
    parts: tuple


class ProductSpace(GeodesicSpace):
    """l2 product of CAT(0) spaces; points are tuples of component points."""

    def __init__(self, components):
        components = tuple(components)
        if len(components) < 1:
            raise ConfigurationError("a product needs at least one component")
        self.components = components
        self.tolerance = max(c.tolerance for c in components)

    @property
    def description(self):
        return " x ".join(f"({c.description})" for c in self.components)

    def contains(self, p):
        return (
            isinstance(p, tuple)
            and not isinstance(p, SpiderPoint)
            and len(p) == len(self.components)
            and all(c.contains(q) for c, q in zip(self.components, p))
        )

    def point(self, payload):
        if not isinstance(payload, (list, tuple)) or len(payload) != len(self.components):
            raise DomainError(f"product point needs {len(self.components)} parts, got {payload!r}")
        return tuple(c.point(q) for c, q in zip(self.components, payload))

    def to_payload(self, p):
        return [c.to_payload(q) for c, q in zip(self.components, p)]

    def distance(self, a, b):
        return math.sqrt(self.squared_distance(a, b))

    def squared_distance(self, a, b):
        return math.fsum(c.squared_distance(p, q) for c, p, q in zip(self.components, a, b))

    def geodesic(self, x, y, t):
        if t == 0.0:
            return x
        if t == 1.0:
            return y
        return tuple(c.geodesic(p, q, t) for c, p, q in zip(self.components, x, y))

    def directions(self, x, m=32, rng=None):
        k = len(self.components)
        per = [c.directions(p, m, rng) for c, p in zip(self.components, x)]
        dirs = []
        for i, ds in enumerate(per):
            w = tuple(1.0 if j == i else 0.0 for j in range(k))
            for d in ds:
                parts = tuple(d if j == i else per[j][0] for j in range(k))
                dirs.append(ProductDirection(w, parts))
        gen = np.random.default_rng(0) if rng is None else rng
        for _ in range(m if k > 1 else 0):
            w = np.abs(gen.standard_normal(k))
            w /= np.linalg.norm(w)
            parts = tuple(ds[gen.integers(len(ds))] for ds in per)
            dirs.append(ProductDirection(tuple(float(v) for v in w), parts))
        return dirs

    def walk(self, x, direction, r):
        return tuple(
            c.walk(p, d, r * w) if w > 0.0 else p
            for c, p, d, w in zip(self.components, x, direction.parts, direction.weights)
        )

    def sample(self, rng):
        return tuple(c.sample(rng) for c in self.components)

    def scale(self, x):
        return math.sqrt(sum(c.scale(p) ** 2 for c, p in zip(self.components, x)))

    def equal(self, a, b):
        return all(c.equal(p, q) for c, p, q in zip(self.components, a, b))

    def __eq__(self, other):
        return isinstance(other, ProductSpace) and other.components == self.components

    def __hash__(self):
        return hash((ProductSpace, self.components))


_SPACE_KEYS = {
    "euclidean": {"kind", "dim"},
    "poincare": {"kind", "dim", "margin"},
    "spider": {"kind", "legs"},
    "product": {"kind", "components"},
}


def make_space(spec) -> GeodesicSpace:
    """Build a space from a mapping such as ``{"kind": "spider", "legs": 3}``."""
    if isinstance(spec, GeodesicSpace):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError(f"space spec must be a mapping with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind not in _SPACE_KEYS:
        raise ConfigurationError(f"unknown space kind {kind!r}; expected one of {sorted(_SPACE_KEYS)}")
    unknown = set(spec) - _SPACE_KEYS[kind]
    if unknown:
        raise ConfigurationError(f"unknown keys for {kind} space: {sorted(unknown)}")
    if kind == "euclidean":
        return EuclideanSpace(spec.get("dim", 1))
    if kind == "poincare":
        return PoincareBall(spec.get("dim", 2), spec.get("margin", 1e-9))
    if kind == "spider":
        if "legs" not in spec:
            raise ConfigurationError("spider space needs 'legs'")
        return SpiderSpace(spec["legs"])
    comps = spec.get("components")
    if not isinstance(comps, list) or not comps:
        raise ConfigurationError("product space needs a nonempty 'components' list")
    return ProductSpace(make_space(c) for c in comps)


@dataclass
class ConformanceReport:
    """Worst normalized violation of each CAT(0) axiom over random samples."""

    space: str
    samples: int
    seed: int
    tolerance: float
    violations: dict = field(default_factory=dict)

    @property
    def failures(self) -> dict:
        return {k: v for k, v in self.violations.items() if v > self.tolerance}

    @property
    def passed(self) -> bool:
        return not self.failures


def conformance_report(space: GeodesicSpace, samples: int = 1000, seed: int = 0, tolerance: float | None = None):
    """Empirically check the metric, geodesic and CAT(0) properties of ``space``.

    Checks symmetry, identity, triangle inequality, the geodesic distance
    split, the Cauchy–Schwarz inequality for the quasi-linearization, and
    1-strong convexity of ``d^2(., w)`` along sampled geodesics.
    """
    rng = np.random.default_rng(seed)
    tol = space.tolerance if tolerance is None else tolerance
    d, sq = space.distance, space.squared_distance
    worst = dict.fromkeys(
        ["symmetry", "identity", "triangle", "geodesic", "membership", "cauchy_schwarz", "cat0_convexity"], 0.0
    )

    def note(key, value):
        if value > worst[key]:
            worst[key] = value

    for _ in range(max(int(samples), 1)):
        a, b, c, w = (space.sample(rng) for _ in range(4))
        t = float(rng.uniform())
        dab = d(a, b)
        note("symmetry", abs(dab - d(b, a)) / (1.0 + dab))
        note("identity", d(a, a) / (1.0 + space.scale(a)))
        note("triangle", max(0.0, d(a, c) - dab - d(b, c)) / (1.0 + dab + d(b, c)))

        z = space.geodesic(a, b, t)
        if not space.contains(z):
            note("membership", 1.0)
            continue
        note("geodesic", max(abs(d(a, z) - t * dab), abs(d(b, z) - (1 - t) * dab)) / (1.0 + dab))

        cs = d(a, b) * d(c, w)
        note("cauchy_schwarz", max(0.0, _quasi_inner(space, a, b, c, w) - cs) / (1.0 + cs))

        lhs = sq(z, w)
        rhs = (1 - t) * sq(a, w) + t * sq(b, w) - t * (1 - t) * dab * dab
        note("cat0_convexity", max(0.0, lhs - rhs) / (1.0 + sq(a, w) + sq(b, w) + dab * dab))

    return ConformanceReport(space.description, int(samples), seed, tol, worst)
