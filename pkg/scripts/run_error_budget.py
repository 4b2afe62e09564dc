"""Simulated error budget next to the published values.

    python3 scripts/run_error_budget.py --config configs/calibrated.yaml
"""
import argparse
from pathlib import Path

from bsmc.cli import rows_to_csv
from bsmc.config import InstanceConfig
from bsmc.experiments import error_budget


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", type=Path, default=Path("configs/calibrated.yaml"))
    ap.add_argument("--csv", type=Path)
    args = ap.parse_args()

    rows = [r.to_dict() for r in error_budget(InstanceConfig.load(args.config))]
    print(f"{'row':>16} {'rule':>8} {'s_bar':>6} {'F_U':>6} {'E1':>9} {'+-':>7} {'published':>9}")
    for r in rows:
        pub = r["published_E1"]
        print(f"{r['row']:>16} {r['boundary_rule']:>8} {r['s_bar']:6.3f} {r['fidelity']:6.3f} "
              f"{r['E1']:+9.4f} {r['stderr']:7.4f} {pub if pub is not None else '':>9}")
    if args.csv:
        args.csv.write_text(rows_to_csv(rows))


if __name__ == "__main__":
    main()
