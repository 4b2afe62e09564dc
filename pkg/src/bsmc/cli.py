"""Command-line workbench.

    bsmc error-budget --config cfg.yaml --out out/
    bsmc sweep {modes,jitter,s,fidelity}
    bsmc compare counts.csv
    bsmc sample --samples 100000
    bsmc encode
    bsmc distribution

Exit codes: 0 success, 1 config error, 2 data error, 3 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import instance
from .config import InstanceConfig, Seeds
from .errors import BsmcError, ConfigError, DataError, DegenerateError
from .experiments import compare, error_budget
from .integrator import (
    distinguishability_sweep,
    fidelity_sweep,
    jitter_convergence_sweep,
    refine_modes_sweep,
    sampled_E1,
)
from .sampler import sample_patterns

log = logging.getLogger("bsmc")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3


def _clean(obj):
    """JSON-safe copy: non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_clean(v), sort_keys=True)
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    columns: dict[str, None] = {}
    for r in rows:
        columns.update(dict.fromkeys(r))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(columns))
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    log.info("wrote %s", path)
    return path


def _write_rows(out: Path, stem: str, rows: list[dict], fmt: str, meta: dict) -> None:
    if fmt == "csv":
        _write(out, f"{stem}.csv", rows_to_csv(rows))
    else:
        _write(out, f"{stem}.json", dumps_json({"meta": meta, "rows": rows}))


def _config_from_args(args) -> InstanceConfig:
    cfg = InstanceConfig.load(args.config) if args.config else InstanceConfig()
    if args.seed is not None:
        cfg = cfg.replace(
            seeds=Seeds(args.seed, args.seed, args.seed, args.seed),
            jitter=cfg.jitter.with_seed(args.seed),
        )
    return cfg


def cmd_error_budget(cfg: InstanceConfig, out: Path, fmt: str) -> None:
    rows = [r.to_dict() for r in error_budget(cfg)]
    _write_rows(out, "error_budget", rows, fmt, {"config": cfg.to_dict()})
    for r in rows:
        print(f"{r['row']:>18} [{r['boundary_rule']}]  E1 = {r['E1']:+.5f}  (published {r['published_E1']})")


def cmd_sweep(cfg: InstanceConfig, axis: str, out: Path, fmt: str) -> None:
    sw = cfg.sweep
    if axis == "modes":
        res = refine_modes_sweep(sw.m_list, cfg.jitter, cfg)
    elif axis == "jitter":
        res = jitter_convergence_sweep(sw.m_list, sw.n_jitter_list, sw.repeats, cfg)
    elif axis == "s":
        res = distinguishability_sweep(sw.s_grid, cfg)
    elif axis == "fidelity":
        res = fidelity_sweep(sw.epsilon_grid, sw.realizations, cfg)
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    rows = res.to_rows()
    summary = {
        "axis": axis,
        "config": cfg.to_dict(),
        "curves": {
            name: {"x": res.xs(name).tolist(), "E1": res.values(name).tolist(),
                   "ensemble_std": [p.ensemble_std for p in res.curve(name)]}
            for name in res.curves
        },
    }
    _write_rows(out, f"sweep_{axis}", rows, fmt, {"axis": axis})
    _write(out, f"sweep_{axis}_summary.json", dumps_json(summary))


def cmd_compare(cfg: InstanceConfig, counts: Path, out: Path, fmt: str) -> None:
    res = compare(cfg, counts)
    _write_rows(out, "compare_residuals", res.residuals, fmt, {"counts": counts.name})
    _write(out, "compare_summary.json", dumps_json({**res.summary, "config": cfg.to_dict()}))
    print(f"TVD vs ideal = {res.tvd_ideal:.4f}, vs configured noise = {res.tvd_noisy:.4f}, E1 = {res.estimate.E1:+.5f}")


def cmd_sample(cfg: InstanceConfig, n_samples: int, out: Path, fmt: str) -> None:
    grid = instance.grid(cfg)
    dist = instance.distribution(cfg, grid)
    samples = sample_patterns(dist, n_samples, cfg.seeds.sampling)
    est = sampled_E1(samples, grid, instance.efimov_params(cfg), cfg.jitter, cfg.boundary_rule,
                     {"sampling_seed": cfg.seeds.sampling})
    if fmt == "csv":
        _write(out, "samples.csv", "pattern\n" + "".join("".join(map(str, s)) + "\n" for s in samples.tolist()))
    else:
        _write(out, "samples.json", dumps_json({"patterns": ["".join(map(str, s)) for s in samples.tolist()]}))
    _write(out, "sample_estimate.json", dumps_json({**est.to_dict(), "config": cfg.to_dict()}))
    print(f"E1 = {est.E1:+.5f} +- {est.stderr:.5f} from {n_samples} samples")


def cmd_encode(cfg: InstanceConfig, out: Path, fmt: str) -> None:
    from .physics import encode_unitary

    grid = instance.grid(cfg)
    u, dev = encode_unitary(cfg.orbitals, grid)
    u = np.asarray(u)
    if fmt == "csv":
        rows = [{"row": i, "col": j, "re": float(np.real(u[i, j])), "im": float(np.imag(u[i, j]))}
                for i in range(u.shape[0]) for j in range(u.shape[1])]
        _write(out, "unitary.csv", rows_to_csv(rows))
    else:
        _write(out, "unitary.json", dumps_json({
            "real": np.real(u).tolist(), "imag": np.imag(u).tolist(),
            "raw_deviation": dev, "positions": grid.positions.tolist(), "orbitals": list(cfg.orbitals),
        }))
    print(f"m={grid.m} encoding unitary, raw deviation {dev:.3e}")


def cmd_distribution(cfg: InstanceConfig, out: Path, fmt: str) -> None:
    dist = instance.distribution(cfg)
    if fmt == "csv":
        _write(out, "distribution.csv", dist.to_csv())
    else:
        _write(out, "distribution.json", dist.to_json())
    print(f"{len(dist)} patterns, postselection mass {dist.meta['postselection_mass']:.6f}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML instance configuration")
    common.add_argument("--seed", type=int, help="override every seed in the config")
    common.add_argument("--out", type=Path, help="output directory (default: config output_dir)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="bsmc", description="Boson-sampling Monte Carlo workbench")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("error-budget", parents=[common], help="simulated error-budget rows")
    sw = sub.add_parser("sweep", parents=[common], help="convergence and noise sweeps")
    sw.add_argument("axis", choices=("modes", "jitter", "s", "fidelity"))
    cp = sub.add_parser("compare", parents=[common], help="compare measured counts with simulation")
    cp.add_argument("counts", type=Path)
    sp = sub.add_parser("sample", parents=[common], help="draw patterns and estimate E1")
    sp.add_argument("--samples", type=int, default=100_000)
    sub.add_parser("encode", parents=[common], help="dump the encoding unitary")
    sub.add_parser("distribution", parents=[common], help="dump the enumerated distribution")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config_from_args(args)
        out = args.out if args.out is not None else Path(cfg.output_dir)
        if args.command == "error-budget":
            cmd_error_budget(cfg, out, args.format)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.axis, out, args.format)
        elif args.command == "compare":
            cmd_compare(cfg, args.counts, out, args.format)
        elif args.command == "sample":
            if args.samples < 1:
                raise ConfigError("--samples must be >= 1")
            cmd_sample(cfg, args.samples, out, args.format)
        elif args.command == "encode":
            cmd_encode(cfg, out, args.format)
        elif args.command == "distribution":
            cmd_distribution(cfg, out, args.format)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DegenerateError as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except BsmcError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
