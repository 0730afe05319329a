"""Constant vs harmonic step sizes on d^2(., x~), line and spider.

Prints the comparison table (iterations until d(x_n, x~) <= eps, final rate
value, monitor worst cases) for each space.
"""

import argparse
import sys
from pathlib import Path

import yaml

from hadamard_ppa import compare_runs, parse_config, run_experiment
from hadamard_ppa.harness import format_table

PROBLEMS = {
    "line": {"space": {"kind": "euclidean", "dim": 1},
             "objective": {"kind": "squared_distance", "center": [0.0]}, "x0": [1.0]},
    "spider": {"space": {"kind": "spider", "legs": 3},
               "objective": {"kind": "squared_distance", "center": {"leg": 1, "r": 0.0}},
               "x0": {"leg": 2, "r": 1.0}},
}

SCHEDULES = {
    "const1": {"kind": "constant", "value": 1.0},
    "const0.25": {"kind": "constant", "value": 0.25},
    "harmonic": {"kind": "harmonic", "value": 1.0},
    "harmonic4": {"kind": "harmonic", "value": 4.0},
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out/compare")
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--eps", type=float, default=1e-6)
    args = ap.parse_args()
    for pname, prob in PROBLEMS.items():
        reports = []
        for sname, sched in SCHEDULES.items():
            doc = {"schema_version": 1, "name": f"{pname}_{sname}", **prob, "schedule": sched,
                   "stop": {"max_iter": args.iters, "eps_step": 0.0}}
            cfg = parse_config(yaml.safe_dump(doc))
            reports.append(run_experiment(cfg, Path(args.out) / pname))
        print(f"== {pname}")
        print(format_table(compare_runs(reports, args.eps)))
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
