"""Search grid half-range and Efimov constant C for the published
(reference, m=12) E1 pair and write a calibrated config.

    python3 scripts/calibrate.py --out configs/calibrated.yaml
"""
import argparse
import json
from pathlib import Path

from bsmc.config import BudgetSpec, InstanceConfig
from bsmc.experiments import calibrate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", type=Path, help="starting config (default: built-in defaults)")
    ap.add_argument("--half-ranges", type=float, nargs="+", default=[3.0, 3.25, 3.5, 3.75])
    ap.add_argument("--out", type=Path, help="write the calibrated YAML config here")
    ap.add_argument("--report", type=Path, help="write the calibration report (JSON) here")
    args = ap.parse_args()

    cfg = InstanceConfig.load(args.config) if args.config else InstanceConfig()
    cal = calibrate(cfg, tuple(args.half_ranges))
    for row in cal.scan:
        print(f"L = {row['half_range']:.3f}  m=12/reference ratio = {row['ratio']:.4f}")
    print(f"half_range = {cal.half_range:.6f}, C = {cal.C:.6f}")
    print(f"reference {cal.E1_reference:+.5f} (target {cal.target_reference}), m=12 {cal.E1_coarse:+.5f} (target {cal.target_coarse})")
    print(f"gap (m=12 - reference)/|reference| = {cal.gap:+.3%}")
    if args.report:
        args.report.write_text(json.dumps(cal.to_dict(), indent=2, sort_keys=True) + "\n")
    if args.out:
        budget = BudgetSpec(**{**cfg.budget.__dict__, "fidelity_targets": (0.985, 0.904)})
        args.out.write_text(cfg.replace(half_range=cal.half_range, C=cal.C, budget=budget).to_yaml())
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
