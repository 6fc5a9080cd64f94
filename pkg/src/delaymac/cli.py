"""Command-line interface.

Subcommands wrap the library into reproducible file-emitting runs: every
command writes its outputs plus a run manifest (resolved-config digest, seed,
output list, tool version) so a rerun with the same config and seed is
byte-identical. Exit codes: 0 success, 1 usage/config error, 2 domain
infeasibility (empty region, failed calibration).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .bias import bias_plan, v_ref_for_current
from .config import ResolvedConfig, default_config, load_config
from .design_space import (
    DEFAULT_CALIBRATION_TARGETS,
    DEFAULT_GRID_POINTS,
    calibrate_units,
    constraint_region,
    default_grids,
    max_bits,
    optimal_point,
)
from .energy import mac_energy
from .errors import CalibrationError, DelaymacError
from .multiplier import (
    MultiplierSpec,
    dot_product_trials,
    simulate_dot_product,
    transfer_sweep,
)
from .units import coerce_quantity, format_number

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

CONFIG_DIR_ENV = "DELAYMAC_CONFIG_DIR"
CALIBRATION_FILENAME = "calibration.json"


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2 by default; this CLI reserves 2
    for domain infeasibility, so remap them to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_ERROR)


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_hash: str
    seed: Optional[int]
    outputs: Tuple[str, ...]
    tool_version: str = __version__

    def write(self, path: Path) -> None:
        payload = {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "outputs": list(self.outputs),
            "tool_version": self.tool_version,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def config_dir() -> Path:
    return Path(os.environ.get(CONFIG_DIR_ENV, "."))


def _load_calibration_overlay() -> Optional[Tuple[float, float]]:
    path = config_dir() / CALIBRATION_FILENAME
    if not path.is_file():
        return None
    data = json.loads(path.read_text())
    scale = data.get("unit_scale")
    if not isinstance(scale, (list, tuple)) or len(scale) != 2:
        return None
    return float(scale[0]), float(scale[1])


def _resolve_config(args) -> ResolvedConfig:
    cfg = load_config(args.config) if args.config else default_config()
    # a persisted calibration overrides the packaged default scale, but never
    # an explicitly configured one
    unit_scale_defaulted = any(line.startswith("unit_scale ") for line in cfg.provenance)
    if unit_scale_defaulted:
        overlay = _load_calibration_overlay()
        if overlay is not None:
            cfg = replace(cfg, fit=cfg.fit.with_unit_scale(overlay))
    return cfg


def _out_stem(out: str) -> Path:
    path = Path(out)
    return path.with_suffix("") if path.suffix else path


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) if isinstance(v, float) else v for v in row])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _finish(command: str, cfg: ResolvedConfig, stem: Path, outputs: List[Path], seed=None) -> None:
    manifest = RunManifest(
        command=command,
        config_hash=cfg.digest(),
        seed=seed,
        outputs=tuple(str(p) for p in outputs),
    )
    manifest.write(stem.parent / (stem.name + ".manifest.json"))


def _parse_span(text: str) -> Tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise DelaymacError(f"span must be lo:hi (got {text!r})")
    lo, hi = (coerce_quantity(p) for p in parts)
    if not 0 < lo < hi:
        raise DelaymacError(f"span must satisfy 0 < lo < hi (got {text!r})")
    return lo, hi


def _grids(args):
    c_grid, i_grid = default_grids(points=args.grid_points)
    if args.c_span:
        lo, hi = _parse_span(args.c_span)
        c_grid = np.geomspace(lo, hi, args.grid_points)
    if args.i_span:
        lo, hi = _parse_span(args.i_span)
        i_grid = np.geomspace(lo, hi, args.grid_points)
    return c_grid, i_grid


def _add_grid_flags(parser) -> None:
    parser.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS,
                        help="points per grid axis (default %(default)s)")
    parser.add_argument("--c-span", default=None, metavar="LO:HI",
                        help="storage-cap span, suffixed quantities (default 0.5f:50f)")
    parser.add_argument("--i-span", default=None, metavar="LO:HI",
                        help="fastest-cell current span (default 50n:20u)")


def cmd_region(args) -> int:
    cfg = _resolve_config(args)
    if args.bits < 1:
        raise DelaymacError(f"--bits must be >= 1 (got {args.bits})")
    c_grid, i_grid = _grids(args)
    region = constraint_region(
        args.bits, c_grid, i_grid, cfg.cell, cfg.tech, cfg.fit, epsilon=args.epsilon
    )
    stem = _out_stem(args.out)
    csv_path = Path(args.out) if Path(args.out).suffix else stem.with_suffix(".csv")
    summary_path = stem.parent / (stem.name + ".summary.json")
    _write_csv(csv_path, ("c_star", "i_star", "c1", "c2", "c3", "feasible"), region.csv_rows())
    _write_json(summary_path, region.summary())
    _finish("region", cfg, stem, [csv_path, summary_path])
    if region.is_empty:
        print(f"n={args.bits}: no feasible design point", file=sys.stderr)
        return EXIT_INFEASIBLE
    c_opt, i_opt = optimal_point(region)
    print(f"n={args.bits}: optimum c_star={format_number(c_opt)} F, i_star={format_number(i_opt)} A")
    return EXIT_OK


def cmd_maxbits(args) -> int:
    cfg = _resolve_config(args)
    parts = args.epsilon_grid.split(":")
    if len(parts) != 3:
        raise DelaymacError(f"--epsilon-grid must be lo:hi:steps (got {args.epsilon_grid!r})")
    lo, hi = float(parts[0]), float(parts[1])
    steps = int(parts[2])
    if steps < 1 or lo < 1.0 or hi < lo:
        raise DelaymacError("epsilon grid needs steps >= 1 and 1 <= lo <= hi")
    c_grid, i_grid = _grids(args)
    epsilons = np.linspace(lo, hi, steps)
    rows = []
    for eps in epsilons:
        rows.append((float(eps), max_bits(float(eps), c_grid, i_grid, cfg.cell, cfg.tech, cfg.fit)))
    stem = _out_stem(args.out)
    csv_path = Path(args.out) if Path(args.out).suffix else stem.with_suffix(".csv")
    _write_csv(csv_path, ("epsilon", "n_max"), rows)
    _finish("maxbits", cfg, stem, [csv_path])
    return EXIT_OK


def _parse_float_list(text: str, flag: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise DelaymacError(f"{flag} expects a comma-separated number list: {exc}") from exc


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    try:
        weights = [int(x) for x in args.weights.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise DelaymacError(f"--weights expects comma-separated integers: {exc}") from exc
    v_as = _parse_float_list(args.va, "--va")
    if len(weights) != len(v_as):
        raise DelaymacError(f"got {len(weights)} weights but {len(v_as)} --va entries")
    if args.trials < 1:
        raise DelaymacError("--trials must be >= 1")
    template = MultiplierSpec.from_weight(
        0, cfg.mult.n_bits, cfg.mult.i_star_fastest, cfg.mult.v_a0
    )
    model = "ideal" if args.model == "noisy" else args.model
    fit = cfg.fit if args.model == "noisy" else None
    deltas = dot_product_trials(
        weights, v_as, template, cfg.cell, cfg.tech,
        model=model, fit=fit, seed=args.seed, trials=args.trials,
    )
    rows = [(t, float(d)) for t, d in enumerate(deltas)]
    mean = float(np.mean(deltas))
    sigma = float(np.std(deltas, ddof=1)) if args.trials > 1 else 0.0
    rows.append(("mean", mean))
    rows.append(("sigma", sigma))
    stem = _out_stem(args.out)
    csv_path = Path(args.out) if Path(args.out).suffix else stem.with_suffix(".csv")
    _write_csv(csv_path, ("trial", "delta_t_s"), rows)
    outputs = [csv_path]
    if args.trials == 1:
        # single runs also dump the per-stage event trace
        total, trace = simulate_dot_product(
            weights, v_as, template, cfg.cell, cfg.tech,
            model=model, fit=fit, seed=args.seed,
        )
        trace_path = stem.parent / (stem.name + ".trace.json")
        _write_json(
            trace_path,
            {
                "total_delta_t_s": total,
                "stages": [
                    {
                        "stage": s.stage,
                        "weight": s.weight,
                        "v_a": s.v_a,
                        "event_in": {"t_var": s.event_in.t_var, "t_ref": s.event_in.t_ref},
                        "event_out": {"t_var": s.event_out.t_var, "t_ref": s.event_out.t_ref},
                        "delta_t_s": s.delta_t,
                    }
                    for s in trace
                ],
            },
        )
        outputs.append(trace_path)
    _finish("simulate", cfg, stem, outputs, seed=args.seed)
    print(f"delta_t mean={format_number(mean)} s sigma={format_number(sigma)} s over {args.trials} trials")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    try:
        weights = [int(x) for x in args.weights.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise DelaymacError(f"--weights expects comma-separated integers: {exc}") from exc
    parts = args.va_grid.split(":")
    if len(parts) != 3:
        raise DelaymacError(f"--va-grid must be lo:hi:steps (got {args.va_grid!r})")
    lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if steps < 1 or hi < lo:
        raise DelaymacError("--va-grid needs steps >= 1 and lo <= hi")
    v_as = [float(v) for v in np.linspace(lo, hi, steps)]
    template = MultiplierSpec.from_weight(0, cfg.mult.n_bits, cfg.mult.i_star_fastest, cfg.mult.v_a0)
    model = "ideal" if args.model == "noisy" else args.model
    fit = cfg.fit if args.model == "noisy" else None
    rows = transfer_sweep(
        template, v_as, weights, cfg.cell, cfg.tech,
        model=model, fit=fit, seed=args.seed if args.model == "noisy" else None,
        positive_means_greater_va=args.positive_means_greater_va,
    )
    stem = _out_stem(args.out)
    csv_path = Path(args.out) if Path(args.out).suffix else stem.with_suffix(".csv")
    header = ("v_a", "w", "s", "delta_t_s", "model", "seed")
    _write_csv(csv_path, header, [[row[k] for k in header] for row in rows])
    _finish("sweep", cfg, stem, [csv_path], seed=args.seed if args.model == "noisy" else None)
    return EXIT_OK


def cmd_energy(args) -> int:
    cfg = _resolve_config(args)
    n_bits = args.bits if args.bits is not None else cfg.mult.n_bits
    if n_bits < 1:
        raise DelaymacError(f"--bits must be >= 1 (got {n_bits})")
    if args.weight is not None:
        spec = MultiplierSpec.from_weight(args.weight, n_bits, cfg.mult.i_star_fastest, cfg.mult.v_a0)
    elif n_bits == cfg.mult.n_bits:
        spec = cfg.mult
    else:
        spec = MultiplierSpec.from_weight(2**n_bits - 1, n_bits, cfg.mult.i_star_fastest, cfg.mult.v_a0)
    breakdown = mac_energy(spec, cfg.cell, cfg.tech, mode=args.mode, rho=args.rho)
    stem = _out_stem(args.out)
    json_path = stem.parent / (stem.name + ".json")
    csv_path = stem.parent / (stem.name + ".csv")
    _write_json(json_path, breakdown.to_dict())
    d = breakdown.to_dict()
    comp_rows = [(k, d[k], d[k] / breakdown.n_bits) for k in ("e_cstar", "e_td1", "e_td2", "e_pu", "e_inv")]
    comp_rows.append(("total", breakdown.total, breakdown.per_bit))
    _write_csv(csv_path, ("component", "energy_j_per_mac", "energy_j_per_mac_per_bit"), comp_rows)
    _finish("energy", cfg, stem, [json_path, csv_path])
    print(f"total {format_number(breakdown.total)} J/MAC ({format_number(breakdown.per_bit)} J/MAC/bit)")
    return EXIT_OK


def cmd_bias(args) -> int:
    cfg = _resolve_config(args)
    if args.bits < 1 or args.bits > 8:
        raise DelaymacError(f"--bits must be in [1, 8] (got {args.bits})")
    if args.vref is not None:
        v_ref = coerce_quantity(args.vref)
    else:
        i_bias = coerce_quantity(args.ibias) if args.ibias else cfg.mult.i_star_fastest
        v_ref = v_ref_for_current(i_bias, cfg.tech)
    plan = bias_plan(v_ref, args.bits, cfg.tech)
    stem = _out_stem(args.out)
    json_path = stem.parent / (stem.name + ".json")
    csv_path = stem.parent / (stem.name + ".csv")
    _write_json(json_path, plan.to_dict())
    _write_csv(csv_path, ("i", "current_a", "v_b1", "v_b2"), plan.csv_rows())
    _finish("bias", cfg, stem, [json_path, csv_path])
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _resolve_config(args)
    targets = list(DEFAULT_CALIBRATION_TARGETS)
    if args.targets:
        targets = json.loads(Path(args.targets).read_text())
    c_grid, i_grid = _grids(args)
    try:
        result = calibrate_units(targets, cfg.fit, cfg.tech, cfg.cell, c_grid=c_grid, i_grid=i_grid)
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out_dir = config_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / CALIBRATION_FILENAME
    _write_json(out_path, result.to_dict())
    _finish("calibrate", cfg, out_dir / "calibration", [out_path])
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="delaymac", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config file (defaults apply if omitted)")
        p.set_defaults(func=func)
        return p

    p = add("region", cmd_region, "evaluate the feasibility constraints for one bit count")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=1.0, help="excess jitter margin (default 1)")
    p.add_argument("--out", required=True, help="CSV output path")
    _add_grid_flags(p)

    p = add("maxbits", cmd_maxbits, "maximum bit count versus excess jitter margin")
    p.add_argument("--epsilon-grid", required=True, metavar="LO:HI:STEPS")
    p.add_argument("--out", required=True)
    _add_grid_flags(p)

    p = add("simulate", cmd_simulate, "simulate a serial MAC chain")
    p.add_argument("--weights", required=True, help="comma-separated signed integers")
    p.add_argument("--va", required=True, help="comma-separated analog inputs, volts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--model", choices=("ideal", "nonlinear", "noisy"), default="ideal")
    p.add_argument("--out", required=True)

    p = add("energy", cmd_energy, "per-MAC energy breakdown")
    p.add_argument("--bits", type=int, default=None)
    p.add_argument("--weight", type=int, default=None, help="signed weight (default: all bits set)")
    p.add_argument("--mode", choices=("sense", "acceleration"), default="sense")
    p.add_argument("--rho", type=float, default=0.0, help="acceleration-mode residual recharge fraction")
    p.add_argument("--out", required=True)

    p = add("bias", cmd_bias, "bias-network sizing, currents and gate voltages")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--vref", default=None, help="reference voltage (suffixed quantity)")
    p.add_argument("--ibias", default=None, help="target fastest-cell current (suffixed quantity)")
    p.add_argument("--out", required=True)

    p = add("calibrate", cmd_calibrate, "resolve the jitter-fit unit scale and persist it")
    p.add_argument("--targets", default=None, help="JSON file with a custom target list")
    _add_grid_flags(p)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DelaymacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
