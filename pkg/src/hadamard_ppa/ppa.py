"""Proximal point iteration ``x_{n+1} = J_{lambda_n} x_n`` with runtime monitors.

Monitors never influence the iteration. All of them are functions of the
scalar series (f values, step lengths, distances to the reference minimizer,
step sizes), so a trajectory file can be replayed to the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CapabilityError, ConvergenceError, DomainError, PreconditionError, StepSizeError
from .geodesic import GeodesicSpace, Point, _quasi_inner
from .objectives import INF, Objective, ProbeOptions, slope_estimate
from .resolvent import ResolventOptions, resolve, step_bound
from .spaces import PoincareBall, ProductSpace


@dataclass(frozen=True)
class Schedule:
    """Step sizes ``lambda_n``.

    ``constant`` repeats ``value``; ``sequence`` walks ``values`` and then
    repeats the last entry; ``harmonic`` is ``value / (n + offset)``.
    """

    kind: str = "constant"
    value: float = 1.0
    values: tuple = ()
    offset: float = 1.0
    lower_bound: Optional[float] = None
    divergent: Optional[bool] = None

    @classmethod
    def constant(cls, value, lower_bound=None):
        return cls("constant", float(value), lower_bound=lower_bound)

    @classmethod
    def sequence(cls, values, divergent=False, lower_bound=None):
        return cls("sequence", values=tuple(float(v) for v in values), lower_bound=lower_bound, divergent=divergent)

    @classmethod
    def harmonic(cls, scale=1.0, offset=1.0, lower_bound=None):
        return cls("harmonic", float(scale), offset=float(offset), lower_bound=lower_bound)

    def __post_init__(self):
        if self.kind not in ("constant", "sequence", "harmonic"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "sequence" and not self.values:
            raise ValueError("sequence schedule needs values")
        if self.kind == "harmonic" and self.offset <= 0:
            raise ValueError("harmonic offset must be positive")

    def __call__(self, n: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "harmonic":
            return self.value / (n + self.offset)
        return self.values[min(n, len(self.values) - 1)]

    @property
    def diverges(self) -> bool:
        """Whether sum lambda_n = +inf is intended."""
        if self.divergent is not None:
            return self.divergent
        return self.kind in ("constant", "harmonic")

    def partial_sums(self, n: int) -> np.ndarray:
        """``[lambda_0, lambda_0 + lambda_1, ...]`` of length n."""
        return np.cumsum([self(k) for k in range(n)])

    def check_admissible(self, f: Objective, n_max: int) -> None:
        """Raise StepSizeError naming every offending index among the first n_max steps."""
        bound = step_bound(f)
        bad = []
        for k in range(n_max if self.kind != "constant" else 1):
            lam = self(k)
            if not lam > 0.0:
                bad.append(f"lambda_{k}={lam} is not positive")
            elif lam >= bound:
                bad.append(f"lambda_{k}={lam} >= 1/(2 alpha)={bound} (alpha={f.weak_convexity_alpha})")
            elif self.lower_bound is not None and lam < self.lower_bound:
                bad.append(f"lambda_{k}={lam} below the lower bound {self.lower_bound}")
            if len(bad) >= 5:
                break
        if bad:
            raise StepSizeError("; ".join(bad))


def default_eps_step(space: GeodesicSpace) -> float:
    if isinstance(space, PoincareBall):
        return 1e-8
    if isinstance(space, ProductSpace):
        return max(default_eps_step(c) for c in space.components)
    return 1e-10


@dataclass(frozen=True)
class StopCriteria:
    max_iter: int = 10_000
    eps_step: Optional[float] = None  # None -> 1e-10, or 1e-8 on hyperbolic spaces; 0 disables
    eps_slope: Optional[float] = None
    monitor_tol: float = 1e-8
    abort_on_violation: bool = False


@dataclass(frozen=True)
class StepRecord:
    n: int
    lam: float
    f_x: float
    step_dist: float
    inner_iterations: int
    certified_gap: float


@dataclass
class MonitorReport:
    """Per-iteration monitor series, aligned with n = 1..N.

    Sign conventions: margins should be >= -tol, residuals <= tol. The rate
    series has one entry per iterate (n = 0..N).
    """

    f_monotone_margins: list = field(default_factory=list)
    fejer_margins: list = field(default_factory=list)
    tilde_inequality_residuals: list = field(default_factory=list)
    strong_qc_residuals: list = field(default_factory=list)
    rate_series: list = field(default_factory=list)
    weighted_sum: float = 0.0
    d0_squared: float = 0.0
    alpha: Optional[float] = None

    def worst(self) -> dict:
        """name -> (worst value, 1-based iteration index)."""
        out = {}
        for name, series, pick in (
            ("f_monotone", self.f_monotone_margins, min),
            ("fejer", self.fejer_margins, min),
            ("tilde", self.tilde_inequality_residuals, max),
            ("strong_qc", self.strong_qc_residuals, max),
        ):
            if series:
                v = pick(series)
                out[name] = (v, series.index(v) + 1)
        return out

    def violations(self, tol: float, monitors: Optional[Sequence[str]] = None) -> dict:
        """Enabled monitors whose worst case breaks the tolerance."""
        scale = 1.0 + self.d0_squared
        out = {}
        for name, (v, i) in self.worst().items():
            if monitors is not None and name not in monitors:
                continue
            bad = v < -tol if name in ("f_monotone", "fejer") else v > tol * scale
            if bad:
                out[name] = (v, i)
        if (monitors is None or "strong_qc" in monitors) and self.alpha and self.strong_qc_residuals:
            if self.alpha * self.weighted_sum > self.d0_squared + tol:
                out["strong_qc_sum"] = (self.alpha * self.weighted_sum, len(self.strong_qc_residuals))
        return out


def compute_monitors(f_values, step_dists, lambdas, ref_dists=None, alpha=None) -> MonitorReport:
    """Monitor series from scalar trajectory data.

    All inputs are indexed by iterate n = 0..N; entry 0 of ``step_dists``
    and ``lambdas`` is ignored. ``ref_dists`` are distances to the known
    minimizer (omitted when none is known).
    """
    N = len(f_values) - 1
    rep = MonitorReport(alpha=alpha)
    rep.f_monotone_margins = [f_values[n - 1] - f_values[n] for n in range(1, N + 1)]
    if ref_dists is None:
        return rep
    d = ref_dists
    rep.d0_squared = d[0] * d[0]
    rep.fejer_margins = [d[n - 1] - d[n] for n in range(1, N + 1)]
    rep.tilde_inequality_residuals = [
        step_dists[n] ** 2 + d[n] ** 2 - d[n - 1] ** 2 for n in range(1, N + 1)
    ]
    csum = 0.0
    rep.rate_series = [0.0]
    for n in range(1, N + 1):
        csum += lambdas[n]
        rep.rate_series.append(math.sqrt(csum) * d[n])
    if alpha is not None:
        rep.strong_qc_residuals = [
            alpha * lambdas[n] * d[n] ** 2 - (d[n - 1] ** 2 - d[n] ** 2) for n in range(1, N + 1)
        ]
        rep.weighted_sum = math.fsum(lambdas[n] * d[n] ** 2 for n in range(1, N + 1))
    return rep


@dataclass
class Trajectory:
    space: GeodesicSpace
    objective: Objective
    schedule: Schedule
    iterates: list
    records: list
    stop_reason: str = ""
    monitors: Optional[MonitorReport] = None
    reference: Optional[Point] = None

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    def series(self):
        """(f values, step distances, lambdas, reference distances) indexed by n."""
        f_values = [self.objective(self.iterates[0])] + [r.f_x for r in self.records]
        steps = [0.0] + [r.step_dist for r in self.records]
        lams = [0.0] + [r.lam for r in self.records]
        ref = None
        if self.reference is not None:
            ref = [self.space.distance(p, self.reference) for p in self.iterates]
        return f_values, steps, lams, ref


def _online_violation(prev_d, d, step, f_prev, f_now, lam, alpha, d0sq, tol):
    worst = f_prev - f_now < -100 * tol
    if d is not None:
        worst |= prev_d - d < -100 * tol
        worst |= step**2 + d**2 - prev_d**2 > 100 * tol * (1 + d0sq)
        if alpha is not None:
            worst |= alpha * lam * d**2 - (prev_d**2 - d**2) > 100 * tol * (1 + d0sq)
    return worst


def run(space: GeodesicSpace, f: Objective, x0: Point, schedule: Schedule,
        stop: StopCriteria = StopCriteria(), resolvent: ResolventOptions = ResolventOptions(),
        probe: ProbeOptions = ProbeOptions()) -> Trajectory:
    """Run the proximal point algorithm from ``x0``.

    Stops at ``max_iter``, when a step is shorter than ``eps_step``, or when
    the slope estimate drops below ``eps_slope``. With a known minimizer the
    monitor series are attached to the returned trajectory.
    """
    space.check(x0)
    if not f(x0) < INF:
        raise DomainError("x0 must lie in D(f)")
    schedule.check_admissible(f, stop.max_iter)
    eps_step = default_eps_step(space) if stop.eps_step is None else stop.eps_step
    ref = f.known_minimizer
    traj = Trajectory(space, f, schedule, [x0], [], reference=ref)
    x, fx = x0, f(x0)
    d_prev = space.distance(x0, ref) if ref is not None else None
    d0sq = d_prev**2 if d_prev is not None else 0.0
    traj.stop_reason = "max_iter"
    for n in range(1, stop.max_iter + 1):
        lam = schedule(n - 1)
        try:
            res = resolve(space, f, lam, x, resolvent)
        except ConvergenceError as exc:
            exc.trajectory = traj
            traj.stop_reason = f"resolvent failure at n={n}"
            raise
        y = res.point
        step = space.distance(x, y)
        traj.iterates.append(y)
        traj.records.append(StepRecord(n, lam, res.objective_value, step, res.inner_iterations, res.certified_gap))
        d = space.distance(y, ref) if ref is not None else None
        if stop.abort_on_violation and _online_violation(
            d_prev, d, step, fx, res.objective_value, lam, f.strong_qc_alpha, d0sq, stop.monitor_tol
        ):
            traj.stop_reason = "monitor violation"
            break
        x, fx, d_prev = y, res.objective_value, d
        if step < eps_step:
            traj.stop_reason = "step"
            break
        if stop.eps_slope is not None and slope_estimate(space, f, x, probe).value < stop.eps_slope:
            traj.stop_reason = "slope"
            break
    fv, steps, lams, rd = traj.series()
    traj.monitors = compute_monitors(fv, steps, lams, rd, f.strong_qc_alpha if rd is not None else None)
    return traj


# -- standalone checks -------------------------------------------------------


@dataclass(frozen=True)
class FejerReport:
    margins: dict  # ref index -> list of d(x_{n-1}, z) - d(x_n, z)
    worst: float
    worst_index: Optional[tuple]
    passed: bool


def fejer_check(traj: Trajectory, refs: Sequence[Point], tol: float = 1e-8) -> FejerReport:
    """``d(x_n, z)`` nonincreasing for every z below all trajectory values of f."""
    space, f = traj.space, traj.objective
    fvals = [f(p) for p in traj.iterates]
    for i, z in enumerate(refs):
        fz = f(z)
        for n, v in enumerate(fvals):
            if fz > v:
                raise PreconditionError(f"reference {i} has f(z)={fz} > f(x_{n})={v}")
    margins, worst, where = {}, INF, None
    for i, z in enumerate(refs):
        d = [space.distance(p, z) for p in traj.iterates]
        m = [d[n - 1] - d[n] for n in range(1, len(d))]
        margins[i] = m
        for n, v in enumerate(m, start=1):
            if v < worst:
                worst, where = v, (i, n)
    if worst == INF:
        worst = 0.0
    return FejerReport(margins, worst, where, worst >= -tol)


@dataclass(frozen=True)
class TildeReport:
    residuals: list
    quasi_inner: list  # <x_n x~, x_n x_{n-1}>
    worst: float
    passed: bool


def tilde_inequality_check(traj: Trajectory, x_tilde: Optional[Point], tol: float = 1e-8) -> TildeReport:
    """``d^2(x_n, x_{n-1}) + d^2(x_n, x~) - d^2(x_{n-1}, x~) <= 0`` at every step."""
    if x_tilde is None:
        raise CapabilityError("tilde inequality needs a known minimizer")
    space, xs = traj.space, traj.iterates
    sq = space.squared_distance
    res = [sq(xs[n], xs[n - 1]) + sq(xs[n], x_tilde) - sq(xs[n - 1], x_tilde) for n in range(1, len(xs))]
    qi = [_quasi_inner(space, xs[n], x_tilde, xs[n], xs[n - 1]) for n in range(1, len(xs))]
    scale = 1.0 + sq(xs[0], x_tilde)
    worst = max(res, default=0.0)
    passed = worst <= tol * scale and max(qi, default=0.0) <= tol * scale
    return TildeReport(res, qi, worst, passed)


@dataclass(frozen=True)
class RateReport:
    residuals: list
    worst_residual: float
    weighted_sum: float  # sum lambda_{n-1} d^2(x_n, x~)
    sum_bound: float  # d^2(x_0, x~) / alpha
    rate_series: list  # sqrt(sum_{k<n} lambda_k) d(x_n, x~)
    final_over_max: float
    eventually_decreasing: bool
    horizon_ok: bool
    passed: bool


def strong_qc_rate_check(traj: Trajectory, x_tilde: Point, schedule: Schedule, alpha: Optional[float],
                         tol: float = 1e-8, horizon: int = 200) -> RateReport:
    """Contraction, summability and rate trend for strongly quasi-convex objectives.

    The little-o rate can only be observed as a trend: the final value of
    the rate series must be under a tenth of its maximum over at least
    ``horizon`` iterations.
    """
    if alpha is None:
        raise CapabilityError("strong quasi-convexity constant alpha is not declared")
    if x_tilde is None:
        raise CapabilityError("rate check needs the minimizer")
    if not schedule.diverges:
        raise PreconditionError("rate check needs a schedule with divergent sum")
    space, xs = traj.space, traj.iterates
    d = [space.distance(p, x_tilde) for p in xs]
    lams = [0.0] + [r.lam for r in traj.records]
    rep = compute_monitors([0.0] * len(xs), [0.0] * len(xs), lams, d, alpha)
    d0sq = d[0] ** 2
    worst = max(rep.strong_qc_residuals, default=0.0)
    series = rep.rate_series
    peak = max(series, default=0.0)
    ratio = series[-1] / peak if peak > 0 else 0.0
    tail = series[len(series) // 2:]
    decreasing = all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(tail, tail[1:]))
    horizon_ok = traj.iterations >= horizon
    passed = (
        worst <= tol * (1 + d0sq)
        and alpha * rep.weighted_sum <= d0sq + tol
        and horizon_ok
        and decreasing
        and ratio < 0.1
    )
    return RateReport(rep.strong_qc_residuals, worst, rep.weighted_sum, d0sq / alpha, series, ratio,
                      decreasing, horizon_ok, passed)


@dataclass(frozen=True)
class CriticalPointResidual:
    value: float
    conclusive: bool


def critical_point_residual(space: GeodesicSpace, f: Objective, traj: Trajectory,
                            probe: ProbeOptions = ProbeOptions()) -> CriticalPointResidual:
    """Slope estimate at the last iterate; inconclusive unless the run converged by step size."""
    value = slope_estimate(space, f, traj.iterates[-1], probe).value
    return CriticalPointResidual(value, traj.stop_reason in ("step", "slope"))


def value_classification(traj: Trajectory, tol: float = 1e-6) -> Optional[str]:
    """``"value-converged"`` if lim f(x_n) reaches f(x~) within tol, else ``"value-gap"``."""
    if traj.reference is None:
        return None
    gap = traj.objective(traj.iterates[-1]) - traj.objective(traj.reference)
    return "value-converged" if gap <= tol else "value-gap"


def real_sequence_products(a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    """``(sum_{k<=n} b_k) a_n``; tends to 0 when a_n decreases to 0 and sum a_n b_n < inf."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.cumsum(b) * a
