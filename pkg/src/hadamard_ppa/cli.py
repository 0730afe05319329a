"""Command line: validate | run | compare | conformance | oracle-check | replay.

Exit status is 0 on success, 1 when an enabled monitor (or check) is violated,
2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ArgumentError, CapabilityError, ConfigurationError
from .harness import (
    RunReport,
    compare_runs,
    format_table,
    load_config,
    oracle_check,
    replay_files,
    run_experiment,
)
from .spaces import conformance_report, make_space


def _parser():
    p = argparse.ArgumentParser(prog="hadamard-ppa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("--config", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (default: output.dir from the config)")
    r.add_argument("--seed", type=int)
    r.add_argument("--strict", action="store_true", default=None, help="abort on a monitor violation")
    r.add_argument("--oracle", action="store_true", default=None, help="cross-check every step by brute force")

    c = sub.add_parser("compare", help="compare runs on the same problem")
    c.add_argument("summaries", nargs="*", help="summary JSON files written by 'run'")
    c.add_argument("--config", action="append", default=[], help="run these configs, then compare")
    c.add_argument("--out")
    c.add_argument("--seed", type=int)
    c.add_argument("--eps", type=float, default=1e-6)

    k = sub.add_parser("conformance", help="empirical CAT(0) checks for a space")
    g = k.add_mutually_exclusive_group(required=True)
    g.add_argument("--config")
    g.add_argument("--space", help='JSON space spec, e.g. \'{"kind": "spider", "legs": 3}\'')
    k.add_argument("--samples", type=int, default=1000)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")

    o = sub.add_parser("oracle-check", help="compare the resolvent against brute force")
    o.add_argument("--config", required=True)
    o.add_argument("--samples", type=int, default=20)
    o.add_argument("--seed", type=int)
    o.add_argument("--step", type=float, default=1e-4)

    y = sub.add_parser("replay", help="recompute monitors from a trajectory CSV")
    y.add_argument("--trajectory", required=True)
    y.add_argument("--summary", required=True)
    return p


def _print_run(rep: RunReport):
    print(f"{rep.name}: {rep.stop_reason} after {rep.iterations} iterations, f = {rep.final_f:.12g}, "
          f"slope residual = {rep.final_slope_residual:.3g}")
    for name, m in rep.monitors.items():
        flag = "VIOLATED" if m["violated"] else "ok"
        print(f"  {name:<11s} worst {m['worst']:.3e} at n={m['index']}  {flag}")
    if rep.oracle:
        print(f"  oracle      worst {rep.oracle['worst_deviation']:.3e} (threshold {rep.oracle['threshold']:.1e})")
    if rep.summary_json:
        print(f"  wrote {rep.summary_json}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigurationError as exc:
        print("configuration error:", file=sys.stderr)
        for e in exc.errors:
            print(f"  - {e}", file=sys.stderr)
        return 2
    except (ArgumentError, CapabilityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.verb == "validate":
        cfg = load_config(args.config)
        print(f"{args.config}: ok ({cfg.space.description}, {cfg.objective.description}, "
              f"monitors {', '.join(cfg.monitors)})")
        return 0

    if args.verb == "run":
        cfg = load_config(args.config)
        rep = run_experiment(cfg, args.out, args.seed, args.strict, args.oracle)
        _print_run(rep)
        return rep.exit_status

    if args.verb == "compare":
        reports = [RunReport.from_summary(p) for p in args.summaries]
        for path in args.config:
            reports.append(run_experiment(load_config(path), args.out, args.seed))
        rows = compare_runs(reports, args.eps)
        print(format_table(rows))
        return 1 if any(r.violations for r in reports) else 0

    if args.verb == "conformance":
        space = load_config(args.config).space if args.config else make_space(json.loads(args.space))
        status = 0
        for seed in range(args.seed, args.seed + args.seeds):
            rep = conformance_report(space, args.samples, seed)
            worst = ", ".join(f"{k}={v:.2e}" for k, v in rep.violations.items())
            print(f"seed {seed}: {'pass' if rep.passed else 'FAIL'}  {worst}")
            status |= not rep.passed
        return int(status)

    if args.verb == "oracle-check":
        rows = oracle_check(load_config(args.config), args.samples, args.seed, args.step)
        for i, r in enumerate(rows):
            print(f"{i:3d} lambda={r['lambda']:.4g} deviation={r['deviation']:.3e} "
                  f"{'ok' if r['ok'] else 'EXCEEDS ' + format(r['threshold'], '.1e')}")
        return 0 if all(r["ok"] for r in rows) else 1

    if args.verb == "replay":
        table, bad = replay_files(args.trajectory, args.summary)
        summary = json.loads(open(args.summary).read())["monitors"]
        mismatched = [k for k in table if table[k]["worst"] != summary.get(k, {}).get("worst")]
        for name, m in table.items():
            print(f"  {name:<11s} worst {m['worst']:.17g}  {'VIOLATED' if m['violated'] else 'ok'}")
        if mismatched:
            print(f"replay differs from summary for: {', '.join(mismatched)}")
        return 1 if bad or mismatched else 0
    raise ArgumentError(f"unknown verb {args.verb}")


if __name__ == "__main__":
    raise SystemExit(main())
