"""Config-driven experiments: YAML in, trajectory CSV + summary JSON out.

Config schema (version 1); unknown keys are errors::

    schema_version: 1
    name: line_gaussian                       # optional, defaults to file stem
    space: {kind: euclidean, dim: 1}          # euclidean | poincare | spider | product
    objective: {kind: gaussian_well, center: [0.0]}
    x0: [1.0]                                 # spider points: {leg: 1, r: 2.0}
    schedule: {kind: constant, value: 0.25}   # constant | sequence (values) | harmonic (value, offset)
    stop: {max_iter: 500, eps_step: 1.0e-10, eps_slope: null}
    tolerances: {monitor: 1.0e-8, resolvent_gap: null, oracle_step: 1.0e-4, value_gap: 1.0e-6}
    resolvent: {method: auto, budget: 100000}
    seed: 0
    monitors: [f_monotone, fejer, tilde, strong_qc, rate]   # default: all applicable
    output: {dir: out/line_gaussian}
    strict: false                             # abort on violations > 100x tolerance
    oracle: false                             # per-step brute-force cross-check
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ArgumentError, CapabilityError, ConfigurationError, DomainError, StepSizeError
from .objectives import INF, Objective, make_objective
from .ppa import (
    MonitorReport,
    Schedule,
    StopCriteria,
    Trajectory,
    compute_monitors,
    critical_point_residual,
    run,
    value_classification,
)
from .resolvent import GridSpec, ResolventOptions, default_gap, oracle_resolve, resolve
from .spaces import EuclideanSpace, PoincareBall, SpiderSpace, make_space

SCHEMA_VERSION = 1
MONITORS = ("f_monotone", "fejer", "tilde", "strong_qc", "rate")
CSV_COLUMNS = (
    "n", "lambda", "f_x", "step_dist", "dist_to_ref", "fejer_margin",
    "tilde_residual", "sqc_residual", "rate_value", "inner_iters", "gap",
)
RATE_HORIZON = 200

_TOP_KEYS = {
    "schema_version", "name", "space", "objective", "x0", "schedule", "stop", "tolerances",
    "resolvent", "seed", "monitors", "output", "strict", "oracle",
}
_SCHEDULE_KEYS = {"kind", "value", "values", "offset", "lower_bound", "divergent"}
_STOP_KEYS = {"max_iter", "eps_step", "eps_slope"}
_TOL_KEYS = {"monitor", "resolvent_gap", "oracle_step", "value_gap"}
_RESOLVENT_KEYS = {"method", "budget"}
_OUTPUT_KEYS = {"dir"}


@dataclass
class Tolerances:
    monitor: float = 1e-8
    resolvent_gap: Optional[float] = None
    oracle_step: float = 1e-4
    value_gap: float = 1e-6


@dataclass
class ExperimentConfig:
    name: str
    space: object
    objective: Objective
    x0: object
    schedule: Schedule
    stop: StopCriteria
    tolerances: Tolerances
    resolvent: ResolventOptions
    seed: int
    monitors: tuple
    output_dir: Optional[str]
    strict: bool
    oracle: bool
    raw: dict = field(default_factory=dict)


def _num(value, what, errors, positive=False, allow_none=False):
    if value is None and allow_none:
        return None
    try:
        v = float(value)
    except (TypeError, ValueError):
        errors.append(f"{what} must be a number, got {value!r}")
        return None
    if math.isnan(v) or (positive and not v > 0):
        errors.append(f"{what} must be {'positive' if positive else 'a number'}, got {value!r}")
        return None
    return v


def _section(doc, key, allowed, errors):
    sec = doc.get(key) or {}
    if not isinstance(sec, dict):
        errors.append(f"'{key}' must be a mapping")
        return {}
    unknown = set(sec) - allowed
    if unknown:
        errors.append(f"unknown keys in '{key}': {sorted(unknown)}")
    return sec


def _floatify(obj):
    """YAML 1.1 reads ``1e-8`` as a string; convert numeric-looking strings."""
    if isinstance(obj, dict):
        return {k: _floatify(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_floatify(v) for v in obj]
    if isinstance(obj, str):
        try:
            return float(obj)
        except ValueError:
            return obj
    return obj


def parse_config(text: str, name: str = "experiment") -> ExperimentConfig:
    """Validate a YAML experiment document; raise ConfigurationError listing every problem."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a YAML mapping")
    doc = _floatify(doc)
    errors = []
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        errors.append(f"unknown top-level keys: {sorted(unknown)}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        errors.append(f"schema_version must be {SCHEMA_VERSION}, got {doc.get('schema_version')!r}")
    for key in ("space", "objective", "x0", "schedule"):
        if key not in doc:
            errors.append(f"missing required key '{key}'")

    space = f = x0 = schedule = None
    try:
        space = make_space(doc.get("space"))
    except ConfigurationError as exc:
        errors += [f"space: {e}" for e in exc.errors]
    if space is not None and "objective" in doc:
        try:
            f = make_objective(space, doc["objective"])
        except ConfigurationError as exc:
            errors += [f"objective: {e}" for e in exc.errors]
    if space is not None and "x0" in doc:
        try:
            x0 = space.point(doc["x0"])
        except DomainError as exc:
            errors.append(f"x0: {exc}")
        if x0 is not None and f is not None and not f(x0) < INF:
            errors.append("x0: not in the domain of the objective (f(x0) = +inf)")

    stop_sec = _section(doc, "stop", _STOP_KEYS, errors)
    max_iter = stop_sec.get("max_iter", 10_000)
    if not isinstance(max_iter, (int, float)) or max_iter < 1 or int(max_iter) != max_iter:
        errors.append(f"stop.max_iter must be a positive integer, got {max_iter!r}")
        max_iter = 1
    stop = StopCriteria(
        max_iter=int(max_iter),
        eps_step=_num(stop_sec.get("eps_step"), "stop.eps_step", errors, allow_none=True),
        eps_slope=_num(stop_sec.get("eps_slope"), "stop.eps_slope", errors, allow_none=True),
    )

    sch = _section(doc, "schedule", _SCHEDULE_KEYS, errors)
    if "schedule" in doc:
        kind = sch.get("kind", "constant")
        lower = _num(sch.get("lower_bound"), "schedule.lower_bound", errors, positive=True, allow_none=True)
        try:
            if kind == "constant":
                schedule = Schedule.constant(_num(sch.get("value"), "schedule.value", errors, positive=True), lower)
            elif kind == "sequence":
                vals = sch.get("values")
                if not isinstance(vals, list) or not vals:
                    raise ValueError("sequence schedule needs a nonempty 'values' list")
                schedule = Schedule.sequence(
                    [_num(v, "schedule.values[]", errors, positive=True) for v in vals],
                    bool(sch.get("divergent", False)), lower,
                )
            elif kind == "harmonic":
                schedule = Schedule.harmonic(
                    _num(sch.get("value", 1.0), "schedule.value", errors, positive=True),
                    _num(sch.get("offset", 1.0), "schedule.offset", errors, positive=True), lower,
                )
            else:
                errors.append(f"unknown schedule kind {kind!r}")
        except (TypeError, ValueError) as exc:
            errors.append(f"schedule: {exc}")
        if schedule is not None and f is not None and not any(e.startswith("schedule") for e in errors):
            try:
                schedule.check_admissible(f, stop.max_iter)
            except StepSizeError as exc:
                errors.append(f"schedule inadmissible (lambda < 1/(2 alpha) required): {exc}")

    tol_sec = _section(doc, "tolerances", _TOL_KEYS, errors)
    tolerances = Tolerances(
        monitor=_num(tol_sec.get("monitor", 1e-8), "tolerances.monitor", errors, positive=True) or 1e-8,
        resolvent_gap=_num(tol_sec.get("resolvent_gap"), "tolerances.resolvent_gap", errors, positive=True,
                           allow_none=True),
        oracle_step=_num(tol_sec.get("oracle_step", 1e-4), "tolerances.oracle_step", errors, positive=True) or 1e-4,
        value_gap=_num(tol_sec.get("value_gap", 1e-6), "tolerances.value_gap", errors, positive=True) or 1e-6,
    )
    stop = StopCriteria(stop.max_iter, stop.eps_step, stop.eps_slope, tolerances.monitor,
                        bool(doc.get("strict", False)))

    res_sec = _section(doc, "resolvent", _RESOLVENT_KEYS, errors)
    method = res_sec.get("method", "auto")
    if method not in ("auto", "generic"):
        errors.append(f"resolvent.method must be 'auto' or 'generic', got {method!r}")
    resolvent = ResolventOptions(tolerance=tolerances.resolvent_gap, budget=int(res_sec.get("budget", 100_000)),
                                 method=method)

    seed = doc.get("seed", 0)
    if not isinstance(seed, (int, float)) or int(seed) != seed:
        errors.append(f"seed must be an integer, got {seed!r}")
        seed = 0

    monitors = doc.get("monitors")
    if f is not None:
        applicable = ["f_monotone"]
        if f.known_minimizer is not None:
            applicable += ["fejer", "tilde"]
            if f.strong_qc_alpha is not None:
                applicable += ["strong_qc"]
                if schedule is not None and schedule.diverges:
                    applicable += ["rate"]
        if monitors is None:
            monitors = applicable
        elif not isinstance(monitors, list):
            errors.append("monitors must be a list")
            monitors = applicable
        else:
            for m in monitors:
                if m not in MONITORS:
                    errors.append(f"unknown monitor {m!r}; expected one of {list(MONITORS)}")
                elif m in ("fejer", "tilde", "rate") and f.known_minimizer is None:
                    errors.append(f"monitor {m!r} needs an objective with a known minimizer")
                elif m in ("strong_qc", "rate") and f.strong_qc_alpha is None:
                    errors.append(
                        f"monitor {m!r} needs a declared strong quasi-convexity constant; "
                        f"objective {f.description!r} has none"
                    )
                elif m == "rate" and schedule is not None and not schedule.diverges:
                    errors.append("monitor 'rate' needs a schedule with divergent sum")
    if f is None and isinstance(monitors, list):
        errors += [f"unknown monitor {m!r}; expected one of {list(MONITORS)}" for m in monitors if m not in MONITORS]
    monitors = tuple(monitors or ())

    oracle = bool(doc.get("oracle", False))
    if oracle and space is not None and not _oracle_supported(space, f):
        errors.append(f"oracle cross-check is unsupported on {space.description} for this objective")

    out = _section(doc, "output", _OUTPUT_KEYS, errors)
    if errors:
        raise ConfigurationError(errors)
    return ExperimentConfig(
        name=str(doc.get("name", name)), space=space, objective=f, x0=x0, schedule=schedule, stop=stop,
        tolerances=tolerances, resolvent=resolvent, seed=int(seed), monitors=monitors,
        output_dir=out.get("dir"), strict=bool(doc.get("strict", False)), oracle=oracle, raw=doc,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), name=path.stem)


def _oracle_supported(space, f=None):
    """Grids of dimension <= 2 and spiders; a curved hard wall in 2-D defeats the grid."""
    if isinstance(space, SpiderSpace):
        return True
    if not isinstance(space, (EuclideanSpace, PoincareBall)) or space.dim > 2:
        return False
    return space.dim == 1 or f is None or f.project_to_domain is None


# -- running ---------------------------------------------------------------


@dataclass
class RunReport:
    name: str
    config: dict
    stop_reason: str
    iterations: int
    final_f: float
    final_slope_residual: float
    slope_conclusive: bool
    value_classification: Optional[str]
    monitors: dict
    violations: list
    oracle: Optional[dict]
    timing: float
    trajectory_csv: Optional[str] = None
    summary_json: Optional[str] = None
    dist_to_ref: list = field(default_factory=list)
    rate_series: list = field(default_factory=list)

    @property
    def exit_status(self) -> int:
        return 1 if self.violations else 0

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "config": self.config,
            "stop_reason": self.stop_reason,
            "iterations": self.iterations,
            "final_f": self.final_f,
            "final_slope_residual": self.final_slope_residual,
            "slope_conclusive": self.slope_conclusive,
            "value_classification": self.value_classification,
            "monitors": self.monitors,
            "violations": self.violations,
            "oracle": self.oracle,
            "timing_seconds": self.timing,
            "trajectory_csv": self.trajectory_csv,
            "exit_status": self.exit_status,
        }

    @classmethod
    def from_summary(cls, path) -> "RunReport":
        path = Path(path)
        doc = json.loads(path.read_text())
        rep = cls(
            doc["name"], doc["config"], doc["stop_reason"], doc["iterations"], doc["final_f"],
            doc["final_slope_residual"], doc["slope_conclusive"], doc["value_classification"],
            doc["monitors"], doc["violations"], doc["oracle"], doc["timing_seconds"],
            doc["trajectory_csv"], str(path),
        )
        if rep.trajectory_csv:
            rows = read_trajectory(path.parent / Path(rep.trajectory_csv).name)
            rep.dist_to_ref = [r["dist_to_ref"] for r in rows]
            rep.rate_series = [r["rate_value"] for r in rows]
        return rep


def monitor_table(rep: MonitorReport, enabled, tol: float, iterations: int) -> tuple[dict, list]:
    """Worst case per enabled monitor plus the list of violated ones."""
    worst = rep.worst()
    bad = rep.violations(tol, enabled)
    table = {}
    for name in enabled:
        if name == "rate":
            series = rep.rate_series
            peak = max(series, default=0.0)
            ratio = series[-1] / peak if peak > 0 else 0.0
            horizon = iterations >= RATE_HORIZON
            violated = horizon and not ratio < 0.1
            table[name] = {"worst": ratio, "index": len(series) - 1, "tolerance": 0.1,
                           "status": "checked" if horizon else "insufficient-horizon", "violated": violated}
            if violated:
                bad["rate"] = (ratio, len(series) - 1)
            continue
        v, i = worst.get(name, (0.0, 0))
        entry = {"worst": v, "index": i, "tolerance": tol, "violated": name in bad}
        if name == "strong_qc":
            entry["weighted_sum"] = rep.weighted_sum
            entry["sum_bound"] = rep.d0_squared / rep.alpha if rep.alpha else None
            entry["violated"] = entry["violated"] or "strong_qc_sum" in bad
        table[name] = entry
    return table, sorted(bad)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return "%.17g" % v


def write_trajectory(path, traj: Trajectory, rep: MonitorReport):
    fv, steps, lams, ref = traj.series()
    rows = []
    for n in range(len(traj.iterates)):
        rec = traj.records[n - 1] if n else None
        rows.append([
            n,
            rec.lam if rec else None,
            fv[n],
            steps[n] if n else None,
            ref[n] if ref is not None else None,
            rep.fejer_margins[n - 1] if n and rep.fejer_margins else None,
            rep.tilde_inequality_residuals[n - 1] if n and rep.tilde_inequality_residuals else None,
            rep.strong_qc_residuals[n - 1] if n and rep.strong_qc_residuals else None,
            rep.rate_series[n] if rep.rate_series else None,
            rec.inner_iterations if rec else None,
            rec.certified_gap if rec else None,
        ])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_trajectory(path) -> list[dict]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({k: (None if v == "" else (int(v) if k in ("n", "inner_iters") else float(v)))
                        for k, v in row.items()})
    return out


def replay(csv_path, alpha: Optional[float] = None) -> MonitorReport:
    """Recompute every monitor from a trajectory CSV."""
    rows = read_trajectory(csv_path)
    fv = [r["f_x"] for r in rows]
    steps = [r["step_dist"] or 0.0 for r in rows]
    lams = [r["lambda"] or 0.0 for r in rows]
    ref = [r["dist_to_ref"] for r in rows]
    if any(v is None for v in ref):
        ref = None
    return compute_monitors(fv, steps, lams, ref, alpha if ref is not None else None)


def replay_files(csv_path, summary_path) -> tuple[dict, list]:
    """Monitor table recomputed from the CSV, with the summary's enabled monitors and tolerance."""
    doc = json.loads(Path(summary_path).read_text())
    enabled = list(doc["monitors"])
    tol = next((m["tolerance"] for m in doc["monitors"].values() if m.get("status") is None), 1e-8)
    alpha = doc["config"]["strong_qc_alpha"]
    rep = replay(csv_path, alpha)
    return monitor_table(rep, enabled, tol, len(rep.f_monotone_margins))


def _oracle_pass(cfg, traj):
    worst, where = 0.0, None
    space, f = cfg.space, cfg.objective
    threshold = cfg.tolerances.oracle_step + (cfg.tolerances.resolvent_gap or default_gap(space))
    for n, rec in enumerate(traj.records, start=1):
        o = oracle_resolve(space, f, rec.lam, traj.iterates[n - 1], GridSpec(step=cfg.tolerances.oracle_step))
        dev = space.distance(o.point, traj.iterates[n])
        if dev > worst:
            worst, where = dev, n
    return {"worst_deviation": worst, "index": where, "threshold": threshold, "violated": worst > threshold}


def _config_echo(cfg: ExperimentConfig) -> dict:
    echo = dict(cfg.raw)
    echo["seed"] = cfg.seed
    echo["strong_qc_alpha"] = cfg.objective.strong_qc_alpha
    echo["weak_convexity_alpha"] = cfg.objective.weak_convexity_alpha
    return echo


def run_experiment(cfg: ExperimentConfig, out_dir=None, seed: Optional[int] = None,
                   strict: Optional[bool] = None, oracle: Optional[bool] = None) -> RunReport:
    """Run PPA for a validated config and write ``<name>.csv`` / ``<name>.json`` to out_dir."""
    if seed is not None:
        cfg.seed = int(seed)
    stop = cfg.stop
    if strict is not None:
        stop = StopCriteria(stop.max_iter, stop.eps_step, stop.eps_slope, stop.monitor_tol, bool(strict))
    use_oracle = cfg.oracle if oracle is None else oracle
    if use_oracle and not _oracle_supported(cfg.space, cfg.objective):
        raise CapabilityError(f"oracle cross-check is unsupported on {cfg.space.description} for this objective")

    t0 = time.perf_counter()
    traj = run(cfg.space, cfg.objective, cfg.x0, cfg.schedule, stop, cfg.resolvent)
    fv, steps, lams, ref = traj.series()
    mon = traj.monitors
    table, bad = monitor_table(mon, cfg.monitors, cfg.tolerances.monitor, traj.iterations)
    crit = critical_point_residual(cfg.space, cfg.objective, traj)
    oracle_info = _oracle_pass(cfg, traj) if use_oracle else None
    if oracle_info and oracle_info["violated"]:
        bad.append("oracle")
    if traj.stop_reason == "monitor violation" and not bad:
        bad.append("aborted")
    elapsed = time.perf_counter() - t0

    report = RunReport(
        cfg.name, _config_echo(cfg), traj.stop_reason, traj.iterations, fv[-1], crit.value, crit.conclusive,
        value_classification(traj, cfg.tolerances.value_gap), table, bad, oracle_info, elapsed,
        dist_to_ref=ref or [], rate_series=mon.rate_series,
    )
    out_dir = out_dir or cfg.output_dir
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{cfg.name}.csv"
        write_trajectory(csv_path, traj, mon)
        report.trajectory_csv = csv_path.name
        report.summary_json = str(out / f"{cfg.name}.json")
        Path(report.summary_json).write_text(json.dumps(report.to_json(), indent=2, default=_json_default) + "\n")
    report.trajectory = traj
    return report


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def compare_runs(reports, eps: float = 1e-6) -> list[dict]:
    """One row per run: iterations until d(x_n, x~) <= eps, final rate value, worst monitors."""
    if len(reports) < 2:
        raise ArgumentError("compare needs at least two reports")
    key = lambda r: json.dumps([r.config.get("space"), r.config.get("objective")], sort_keys=True)  # noqa: E731
    if len({key(r) for r in reports}) > 1:
        raise ArgumentError("reports were produced on different spaces/objectives")
    rows = []
    for r in reports:
        hit = next((n for n, d in enumerate(r.dist_to_ref) if d is not None and d <= eps), None)
        rows.append({
            "name": r.name,
            "schedule": json.dumps(r.config.get("schedule"), sort_keys=True),
            "iterations": r.iterations,
            "iterations_to_eps": hit,
            "rate_final": r.rate_series[-1] if r.rate_series else None,
            **{f"worst_{k}": v["worst"] for k, v in sorted(r.monitors.items())},
            "violations": ",".join(r.violations),
        })
    return rows


def format_table(rows: list[dict]) -> str:
    cols = list(dict.fromkeys(k for row in rows for k in row))
    cells = [[_cell(row.get(c)) for c in cols] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)


def _cell(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


# -- batch checks driven by the CLI ---------------------------------------------


def oracle_check(cfg: ExperimentConfig, samples: int = 20, seed: Optional[int] = None, step: float = 1e-4):
    """Compare ``resolve`` with ``oracle_resolve`` on random starting points."""
    space, f = cfg.space, cfg.objective
    if not _oracle_supported(space, f):
        raise CapabilityError(f"oracle supports dimension <= 2 and spiders (no 2-D hard walls), "
                              f"not {space.description} with {f.description}")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    tol = cfg.tolerances.resolvent_gap or default_gap(space)
    rows = []
    while len(rows) < samples:
        x = space.sample(rng)
        if not f(x) < INF:
            continue
        lam = cfg.schedule(int(rng.integers(0, 100)))
        r = resolve(space, f, lam, x, cfg.resolvent)
        o = oracle_resolve(space, f, lam, x, GridSpec(step=step))
        dev = space.distance(r.point, o.point)
        rows.append({"lambda": lam, "deviation": dev, "threshold": step + tol, "ok": dev <= step + tol})
    return rows
