"""Geodesic metric space interface, quasi-linearization and asymptotic centers.

Every concrete space (see :mod:`hadamard_ppa.spaces`) implements
:class:`GeodesicSpace`. The module-level functions validate their inputs and
are what user code should call; solvers use the space methods directly.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import ArgumentError, DomainError

Point = Any


class GeodesicSpace(abc.ABC):
    """A uniquely geodesic metric space of nonpositive curvature.

    Subclasses provide the distance, the geodesic combination
    ``(1 - t) x (+) t y`` and a notion of direction at a point so that
    derivative-free probes (slopes, inner solvers) can walk along geodesic
    rays without knowing coordinates.
    """

    #: relative tolerance at which this space's arithmetic satisfies the
    #: metric/geodesic/CAT(0) identities
    tolerance: float = 1e-9

    @property
    @abc.abstractmethod
    def description(self) -> str: ...

    @abc.abstractmethod
    def contains(self, p: Point) -> bool: ...

    @abc.abstractmethod
    def point(self, payload) -> Point:
        """Build a validated point from a plain (JSON-like) payload."""

    @abc.abstractmethod
    def to_payload(self, p: Point): ...

    @abc.abstractmethod
    def distance(self, a: Point, b: Point) -> float: ...

    def squared_distance(self, a: Point, b: Point) -> float:
        return self.distance(a, b) ** 2

    @abc.abstractmethod
    def geodesic(self, x: Point, y: Point, t: float) -> Point:
        """Unchecked ``(1 - t) x (+) t y``; must return x / y exactly at t = 0 / 1."""

    @abc.abstractmethod
    def directions(self, x: Point, m: int, rng: np.random.Generator | None = None) -> list:
        """A finite set of unit directions at ``x`` (deterministic when rng is None)."""

    @abc.abstractmethod
    def walk(self, x: Point, direction, r: float) -> Point:
        """Point at distance ``r`` from ``x`` along the geodesic ray ``direction``.

        Raises DomainError when the ray leaves the representable region.
        """

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator) -> Point: ...

    @abc.abstractmethod
    def scale(self, x: Point) -> float:
        """Nonnegative size of ``x`` (distance from the space's base point)."""

    def equal(self, a: Point, b: Point) -> bool:
        return self.distance(a, b) == 0.0

    def check(self, p: Point) -> Point:
        if not self.contains(p):
            raise DomainError(f"{p!r} is not a point of {self.description}")
        return p

    def __repr__(self):
        return f"<{self.description}>"


def distance(space: GeodesicSpace, a: Point, b: Point) -> float:
    space.check(a)
    space.check(b)
    return space.distance(a, b)


def geodesic_point(space: GeodesicSpace, x: Point, y: Point, t: float) -> Point:
    """The point ``(1 - t) x (+) t y`` at distance ``t d(x, y)`` from ``x``."""
    space.check(x)
    space.check(y)
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ArgumentError(f"geodesic parameter t={t} outside [0, 1]")
    if t == 0.0:
        return x
    if t == 1.0:
        return y
    return space.geodesic(x, y, t)


def quasi_inner(space: GeodesicSpace, a: Point, b: Point, c: Point, d: Point) -> float:
    """Berg–Nikolaev quasi-linearization <ab, cd>.

    ``1/2 (d^2(a, d) + d^2(b, c) - d^2(a, c) - d^2(b, d))``
    """
    for p in (a, b, c, d):
        space.check(p)
    return _quasi_inner(space, a, b, c, d)


def _quasi_inner(space, a, b, c, d):
    sq = space.squared_distance
    return 0.5 * ((sq(a, d) + sq(b, c)) - (sq(a, c) + sq(b, d)))


@dataclass(frozen=True)
class SearchOptions:
    max_iter: int = 500
    xtol: float = 1e-12


@dataclass(frozen=True)
class AsymptoticCenter:
    """Finite-tail surrogate for the asymptotic center of a sequence.

    ``radius`` is ``max_{n >= tail_start} d(center, x_n)``; this is a
    diagnostic only and never certifies Delta-convergence.
    """

    center: Point
    radius: float
    tail_start: int


def tail_radius(space: GeodesicSpace, x: Point, tail: Sequence[Point]) -> float:
    return max(space.distance(x, p) for p in tail)


def asymptotic_center(
    space: GeodesicSpace,
    seq: Sequence[Point],
    tail_start: int = 0,
    search: SearchOptions = SearchOptions(),
) -> AsymptoticCenter:
    """Approximate minimizer of ``x -> max_{n >= tail_start} d(x, x_n)``.

    Coordinate-free: the candidate moves along geodesics toward the farthest
    tail point, with an exact line search (the objective is geodesically
    convex) and a Badoiu–Clarkson ``1/(k+1)`` step as fallback when the line
    search stalls.
    """
    tail = list(seq[tail_start:])
    if not tail:
        raise ArgumentError("asymptotic_center needs a nonempty tail")
    for p in tail:
        space.check(p)

    best = min(tail, key=lambda p: tail_radius(space, p, tail))
    best_r = tail_radius(space, best, tail)
    c = best
    for k in range(1, search.max_iter + 1):
        far = max(tail, key=lambda p: space.distance(c, p))
        D = space.distance(c, far)
        if D <= search.xtol:
            break
        t = _golden(lambda s: tail_radius(space, space.geodesic(c, far, s), tail), search.xtol / D)
        cand = space.geodesic(c, far, t)
        r = tail_radius(space, cand, tail)
        if r >= tail_radius(space, c, tail) * (1 - 1e-15):
            cand = space.geodesic(c, far, 1.0 / (k + 1))
            r = tail_radius(space, cand, tail)
        c = cand
        if r < best_r:
            best, best_r = cand, r
    return AsymptoticCenter(center=best, radius=best_r, tail_start=tail_start)


_INV_PHI = (math.sqrt(5) - 1) / 2


def _golden(phi, tol, a=0.0, b=1.0):
    """Golden-section minimizer of a unimodal function on [a, b]."""
    tol = max(tol, 1e-15)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = phi(d)
    cands = [(phi(a), a), (fc, c), (fd, d), (phi(b), b)]
    return min(cands)[1]
