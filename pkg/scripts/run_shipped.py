"""Run every config in configs/ and print one line per run.

usage: python scripts/run_shipped.py [--out out/] [--oracle]
"""

import argparse
import sys
from pathlib import Path

from hadamard_ppa import load_config, run_experiment
from hadamard_ppa.harness import _oracle_supported

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "out"))
    ap.add_argument("--oracle", action="store_true", help="per-step oracle where supported")
    args = ap.parse_args()
    status = 0
    for path in sorted((ROOT / "configs").glob("*.yaml")):
        cfg = load_config(path)
        oracle = args.oracle and _oracle_supported(cfg.space, cfg.objective)
        rep = run_experiment(cfg, Path(args.out) / cfg.name, oracle=oracle)
        worst = "  ".join(f"{k}={v['worst']:.2e}" for k, v in rep.monitors.items())
        print(f"{cfg.name:22s} {rep.stop_reason:9s} n={rep.iterations:<4d} f={rep.final_f:.3e} "
              f"slope={rep.final_slope_residual:.1e} {worst} {'VIOLATED ' + ','.join(rep.violations) if rep.violations else 'ok'}")
        status |= rep.exit_status
    return status


if __name__ == "__main__":
    sys.exit(main())
