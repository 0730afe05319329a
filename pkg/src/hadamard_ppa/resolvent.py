"""The resolvent ``J_lambda x = argmin_y f(y) + d^2(x, y) / (2 lambda)``.

``resolve`` picks the cheapest exact route available: closed forms for
(weighted) distance and squared-distance objectives, a 1-D root solve along
the geodesic ``[x, p]`` for any other radial objective, and otherwise a
derivative-free geodesic coordinate descent certified by strong convexity.
``oracle_resolve`` is an independent brute-force grid search used only to
validate ``resolve``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import CapabilityError, ConvergenceError, DomainError, StepSizeError
from .geodesic import GeodesicSpace, Point, _quasi_inner
from .objectives import INF, Objective, ProbeOptions, slope_estimate
from .spaces import EuclideanSpace, PoincareBall, ProductSpace, SpiderSpace

log = logging.getLogger(__name__)

_DEFAULT_GAP = {EuclideanSpace: 1e-10, SpiderSpace: 1e-8, PoincareBall: 1e-6}


def default_gap(space: GeodesicSpace) -> float:
    if isinstance(space, ProductSpace):
        return max(default_gap(c) for c in space.components)
    return _DEFAULT_GAP.get(type(space), 1e-8)


@dataclass(frozen=True)
class ResolventOptions:
    tolerance: Optional[float] = None  # certified gap; None -> per-space default
    budget: int = 100_000  # objective evaluations for the generic solver
    method: str = "auto"  # "auto" or "generic"
    directions: int = 32
    seed: int = 0  # direction rotation of the generic solver; independent of experiment seeds
    start: Optional[Point] = None


@dataclass(frozen=True)
class ResolventResult:
    point: Point
    objective_value: float
    proximal_value: float
    inner_iterations: int
    certified_gap: float
    method: str = "closed-form"


def step_bound(f: Objective) -> float:
    """Largest admissible proximal parameter (exclusive): ``1/(2 alpha)``."""
    a = f.weak_convexity_alpha or 0.0
    return INF if a <= 0.0 else 1.0 / (2.0 * a)


def check_step(f: Objective, lam: float) -> None:
    if not lam > 0.0:
        raise StepSizeError(f"lambda must be positive, got {lam}")
    bound = step_bound(f)
    if lam >= bound:
        raise StepSizeError(
            f"lambda={lam} violates lambda < 1/(2 alpha) = {bound} for alpha={f.weak_convexity_alpha}"
        )
    if f.weak_convexity_alpha is None:
        log.info("no weak-convexity constant declared; treating alpha = 0, uniqueness not guaranteed")


def prox_function(space, f, lam, x):
    return lambda y: f(y) + space.squared_distance(x, y) / (2.0 * lam)


def resolve(space: GeodesicSpace, f: Objective, lam: float, x: Point,
            opts: ResolventOptions = ResolventOptions()) -> ResolventResult:
    space.check(x)
    lam = float(lam)
    check_step(f, lam)
    mu = 1.0 / (2.0 * lam) - (f.weak_convexity_alpha or 0.0)
    tol = default_gap(space) if opts.tolerance is None else opts.tolerance
    if opts.method == "auto" and f.radial is not None:
        return _radial(space, f, lam, x, mu)
    if opts.method not in ("auto", "generic"):
        raise ValueError(f"unknown resolvent method {opts.method!r}")
    return _generic(space, f, lam, x, mu, tol, opts)


def _finish(space, f, lam, x, y, iters, gap, method):
    fy = f(y)
    return ResolventResult(y, fy, fy + space.squared_distance(x, y) / (2.0 * lam), iters, gap, method)


def _radial(space, f, lam, x, mu):
    prof = f.radial
    p = prof.center
    D = space.distance(x, p)
    if D == 0.0:
        return _finish(space, f, lam, x, x, 0, 0.0, "closed-form")
    iters, gap, method = 0, 0.0, "closed-form"
    if prof.kind == "squared":
        wl = prof.weight * lam
        s = 2.0 * wl * D / (1.0 + 2.0 * wl)
    elif prof.kind == "linear":
        s = min(prof.weight * lam, D)
    elif prof.dphi is not None:
        # stationarity of phi(D - s) + s^2 / (2 lam) in the distance s travelled from x
        h = lambda s: s / lam - prof.dphi(D - s)  # noqa: E731
        method = "geodesic-1d"
        if h(D) <= 0.0:
            s = D
        elif h(0.0) >= 0.0:
            s = 0.0
        else:
            s, res = brentq(h, 0.0, D, xtol=1e-300, rtol=4 * np.finfo(float).eps, full_output=True)
            iters = res.iterations
            gap = h(s) ** 2 / (2.0 * mu)
    else:
        q = lambda s: prof.phi(D - s) + s * s / (2.0 * lam)  # noqa: E731
        res = minimize_scalar(q, bounds=(0.0, D), method="bounded", options={"xatol": 1e-12 * (1 + D)})
        s, iters, method = float(res.x), int(res.nfev), "geodesic-1d"
        gap = 0.0
    if s >= D:
        y = p
    elif s <= 0.0:
        y = x
    else:
        y = space.geodesic(x, p, s / D)
    return _finish(space, f, lam, x, y, iters, gap, method)


def _generic(space, f, lam, x, mu, tol, opts):
    """Geodesic coordinate descent on ``g = f + d^2(x, .)/(2 lam)``.

    Probe anchors at radius r along each direction, exact line search toward
    the best anchor, shrink r when nothing improves. Stops once the slope
    surrogate s of g certifies ``g(y) - min g <= s^2 / (2 mu)``.
    """
    g = prox_function(space, f, lam, x)
    project = f.project_to_domain
    y = x if opts.start is None else space.check(opts.start)
    if not f(y) < INF:
        if project is None:
            raise DomainError("generic resolvent needs a start point in D(f)")
        y = project(y)
    gy = g(y)
    scale = 1.0 + space.scale(x)
    if f.lower_bound is not None:
        r = min(math.sqrt(2.0 * lam * max(f(y) - f.lower_bound, 0.0)) + space.distance(x, y), scale)
        r = max(r, 1e-3 * scale)
    else:
        r = 0.1 * scale
    rng = np.random.default_rng(opts.seed)
    cert_radius, rmin = 1e-6 * scale, 1e-14 * scale
    probe = ProbeOptions(r0=1e-5 * scale, directions=opts.directions, seed=opts.seed)
    evals = iters = 0
    while True:
        iters += 1
        if evals > opts.budget:
            raise ConvergenceError(f"generic resolvent exhausted {opts.budget} evaluations", best=y)
        best, g_best = None, gy
        for u in space.directions(y, opts.directions, rng):
            try:
                a = space.walk(y, u, r)
            except DomainError:
                continue
            if project is not None:
                a = project(a)
            ga = g(a)
            evals += 1
            if ga < g_best:
                best, g_best = a, ga
        if best is None:
            if r <= cert_radius:
                s = slope_estimate(space, g, y, probe, project=project).value
                evals += (probe.shells + 1) * opts.directions
                gap = s * s / (2.0 * mu)
                if gap <= tol:
                    return _finish(space, f, lam, x, y, iters, gap, "generic")
                if r <= rmin:
                    raise ConvergenceError(f"generic resolvent stalled with gap bound {gap:g}", best=y)
            r *= 0.25
            continue
        anchor = best
        line = lambda t: g(space.geodesic(y, anchor, t))  # noqa: E731
        res = minimize_scalar(line, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
        evals += int(res.nfev)
        t = float(res.x)
        cand = space.geodesic(y, anchor, t)
        gc = g(cand)
        if gc > g_best:
            cand, gc, t = anchor, g_best, 1.0
        y, gy = cand, gc
        if t > 0.9:
            r *= 2.0


# -- brute-force oracle ------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Brute-force grid: metric spacing ``step`` at the finest level.

    Each level enumerates a window with ``points`` nodes per axis (default
    2001 in 1-D, 101 in 2-D and on spiders) and the next level re-centres on
    the best node with half-width ``zoom`` current spacings.
    """

    step: float = 1e-4
    radius: Optional[float] = None
    points: Optional[int] = None
    zoom: float = 5.0


@dataclass(frozen=True)
class OracleResult:
    point: Point
    value: float
    resolution: float
    levels: int
    evaluations: int


def _oracle_radius(space, f, lam, x, grid):
    if grid.radius is not None:
        return grid.radius
    if f.lower_bound is None:
        raise CapabilityError("oracle needs an explicit grid radius when f has no known lower bound")
    q = x
    if not f(q) < INF:
        if f.project_to_domain is None:
            raise CapabilityError("oracle needs an explicit grid radius when x is outside D(f)")
        q = f.project_to_domain(x)
    # g(J) <= g(q) bounds d(x, J)
    bound = math.sqrt(2.0 * lam * max(f(q) - f.lower_bound, 0.0) + space.squared_distance(x, q))
    return max(2.0 * bound, 10.0 * grid.step)


def _window(space, c, W, h):
    """Grid nodes of spacing h (coordinate units) within half-width W of c."""
    n = int(math.ceil(W / h - 1e-9))
    offs = np.arange(-n, n + 1) * h
    if isinstance(space, SpiderSpace):
        pts = [c]
        for leg in space.directions(c):
            for s in offs[offs > 0]:
                pts.append(space.walk(c, leg, float(s)))
        return pts
    if space.dim == 1:
        grid = c[0] + offs[:, None]
    else:
        gx, gy = np.meshgrid(c[0] + offs, c[1] + offs)
        grid = np.column_stack([gx.ravel(), gy.ravel()])
    if isinstance(space, PoincareBall):
        grid = grid[np.sqrt(np.sum(grid * grid, axis=1)) <= 1.0 - space.margin]
    out = []
    for row in grid:
        p = np.array(row, dtype=float)
        p.flags.writeable = False
        out.append(p)
    return out


def oracle_resolve(space: GeodesicSpace, f: Objective, lam: float, x: Point,
                   grid: GridSpec = GridSpec()) -> OracleResult:
    """Exhaustive grid minimization of ``f + d^2(x, .)/(2 lam)`` with zoom levels.

    Supports Euclidean and Poincare spaces of dimension <= 2 and spiders.
    """
    space.check(x)
    if isinstance(space, SpiderSpace):
        dim = 1
    elif isinstance(space, (EuclideanSpace, PoincareBall)) and space.dim <= 2:
        dim = space.dim
    else:
        raise CapabilityError(f"oracle supports dimension <= 2 and spiders, not {space.description}")
    g = prox_function(space, f, lam, x)
    R = _oracle_radius(space, f, lam, x, grid)
    points = grid.points or (2001 if dim == 1 and not isinstance(space, SpiderSpace) else 101)
    half = (points - 1) // 2

    ball = isinstance(space, PoincareBall)

    def target(c, W):
        if not ball:
            return grid.step
        rho = min(math.hypot(*c) + W, 1.0 - space.margin)
        return grid.step * (1.0 - rho * rho) / 2.0

    # hyperbolic length >= 2 x Euclidean length in the ball chart
    c, W = x, (R / 2.0 if ball else R)
    best, gbest, levels, evals = x, g(x), 0, 1
    while True:
        levels += 1
        tgt = target(c, W)
        h = max(tgt, W / half)
        for p in _window(space, c, W, h):
            v = g(p)
            evals += 1
            if v < gbest:
                best, gbest = p, v
        if h <= tgt:
            break
        c, W = best, grid.zoom * h
    return OracleResult(best, gbest, grid.step, levels, evals)


# -- projection property -----------------------------------------------------


@dataclass(frozen=True)
class ProjectionReport:
    """Worst ``<J z, J x>`` over sampled z in the sublevel set ``{f <= f(J)}``."""

    max_inner: float
    threshold: float
    feasible: int
    status: str
    worst: Optional[Point] = None

    @property
    def passed(self) -> bool:
        return self.status == "passed"


def check_projection_property(space, f, lam, x, result: ResolventResult, samples: int = 200,
                              seed: int = 0, tol: float = 1e-6) -> ProjectionReport:
    """Sample the sublevel set of f at J and test ``<J z, J x> <= tol (1 + d(J, x))``.

    Feasible z come from the segment toward a known minimizer, random probes
    around J, and bisection onto the sublevel boundary between a feasible and
    an infeasible probe.
    """
    rng = np.random.default_rng(seed)
    J = result.point
    level = f(J)
    dJx = space.distance(J, x)
    threshold = tol * (1.0 + dJx)
    spread = max(2.0 * dJx, 1e-3 * (1.0 + space.scale(J)))
    feasible = [J]
    infeasible = []

    def rand_dir(p):
        dirs = space.directions(p, 32, rng)
        return dirs[int(rng.integers(len(dirs)))]

    m = f.known_minimizer
    if m is not None and f(m) <= level:
        for t in rng.uniform(0.0, 1.0, max(samples // 4, 1)):
            feasible.append(space.geodesic(J, m, float(t)))
    attempts = 0
    while len(feasible) < samples and attempts < 20 * samples:
        attempts += 1
        try:
            z = space.walk(J, rand_dir(J), float(rng.uniform(0.0, spread)))
        except DomainError:
            continue
        if f(z) <= level:
            feasible.append(z)
        else:
            infeasible.append(z)
    for q in infeasible[: samples // 2]:
        w = feasible[int(rng.integers(len(feasible)))]
        lo, hi = 0.0, 1.0
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if f(space.geodesic(w, q, mid)) <= level:
                lo = mid
            else:
                hi = mid
        feasible.append(space.geodesic(w, q, lo))

    if len(feasible) <= 1:
        return ProjectionReport(0.0, threshold, len(feasible), "inconclusive", None)
    worst, worst_z = -INF, None
    for z in feasible:
        v = _quasi_inner(space, J, z, J, x)
        if v > worst:
            worst, worst_z = v, z
    status = "passed" if worst <= threshold else "failed"
    return ProjectionReport(worst, threshold, len(feasible), status, worst_z)
