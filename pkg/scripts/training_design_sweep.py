#!/usr/bin/env python3
"""Rate and NMSE vs Stage-I pilot count for random vs DFT training designs.

Runs the tau1 sweep at M=100 for both designs and writes one report per
design. Q defaults to 200 so the largest tau1 still leaves data symbols.
"""

import argparse
from pathlib import Path

from irsim.harness import SimConfig, emit_report, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--taus", type=int, nargs="+", default=[40, 60, 80, 100, 120])
    ap.add_argument("--q-symbols", type=int, default=200)
    ap.add_argument("--out", default="out/training_design")
    args = ap.parse_args()

    for design in ("random", "dft"):
        cfg = SimConfig(
            scenario="proposed", m_x=10, m_y=10, q_symbols=args.q_symbols,
            training=design, n_trials=args.trials, master_seed=args.seed,
            sweep_name="tau1", sweep_values=list(args.taus),
        )
        report = run_experiment(cfg)
        emit_report(report, Path(args.out) / design)
        for row in report.rows:
            print(f"{design:6s} tau1={row['sweep_value']:>3} "
                  f"rate={row['mean_rate']:.3f} nmse={row['nmse']:.3e}")


if __name__ == "__main__":
    main()
