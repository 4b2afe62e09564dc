"""All four sweeps (grid refinement, jitter count, overlap, fidelity) into
one output directory, one CSV and one summary JSON per axis.

    python3 scripts/run_sweeps.py --config configs/calibrated.yaml --out out/sweeps
"""
import argparse
from pathlib import Path

from bsmc.cli import main as cli


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", type=Path, default=Path("configs/default.yaml"))
    ap.add_argument("--out", type=Path, default=Path("out/sweeps"))
    ap.add_argument("--axes", nargs="+", default=["modes", "jitter", "s", "fidelity"])
    args = ap.parse_args()
    for axis in args.axes:
        code = cli(["sweep", axis, "--config", str(args.config), "--out", str(args.out), "-v"])
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
