"""Command-line front end: experiment presets, CSV emission, self-check runner.

CSV conventions (stable per command, see ``--help``): UTF-8, comma separator,
LF line endings, numbers printed with 12 significant digits.  Every output
file gets a ``<name>.manifest.json`` sidecar recording command, parameters,
package version, UTC timestamp and seed; re-running the same command with
the manifest's parameters reproduces the CSV byte-for-byte.

Exit codes: 0 success, 1 physics error (no peak / dead success branch where
the command needs one), 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import ChainConfig
from .experiments import (
    SweepRecord,
    default_t_max,
    sweep_gamma,
    sweep_length,
    sweep_tau,
    trace_experiment,
)
from .fidelity import FidelityTrace, NoPeakError, find_first_peak
from .protocol import MeasurementSchedule, ZeroProbabilityError
from .selfcheck import run_all_checks

TRACE_HEADER = ["time", "f_exc", "f_coh", "f_av", "edge"]
SWEEP_HEADER = [
    "swept_name",
    "swept_value",
    "n",
    "j_boundary",
    "gamma",
    "tau",
    "f_exc_m",
    "f_coh_m",
    "f_av_m",
    "t_m",
    "p_suc",
    "n_measurements",
    "status",
]

FIGURE_IDS = (2, 3, 4, 5, 6, 7, 8)
_FIGURE_TAU_GRID = np.round(np.arange(2.0, 160.0 + 1e-9, 2.0), 12)
_FIGURE_GAMMA_GRID = np.round(np.arange(0.0, 0.1 + 1e-9, 0.005), 12)
_FIGURE_N_GRID = tuple(range(6, 21, 2))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_manifest(csv_path: Path, command: str, parameters: dict, seed: int) -> None:
    manifest = {
        "command": command,
        "parameters": {k: v for k, v in sorted(parameters.items())},
        "artifact_version": __version__,
        "timestamp": _utc_now(),
        "seed": int(seed),
    }
    path = csv_path.parent / (csv_path.stem + ".manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_trace_csv(path: Path, trace: FidelityTrace) -> None:
    """Trace rows in time order; measurement instants appear twice (pre, post)."""
    jumps = {round(j.time, 9): j for j in trace.jumps}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for i, t in enumerate(trace.times):
            jump = jumps.get(round(float(t), 9))
            if jump is not None:
                writer.writerow(
                    [_fmt(t), _fmt(jump.f_exc_pre), _fmt(jump.f_coh_pre), _fmt(jump.f_av_pre), "pre"]
                )
                edge = "post"
            else:
                edge = ""
            writer.writerow(
                [_fmt(t), _fmt(trace.f_exc[i]), _fmt(trace.f_coh[i]), _fmt(trace.f_av[i]), edge]
            )


def _write_sweep_csv(path: Path, records: Sequence[SweepRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.swept_name,
                    _fmt(r.swept_value),
                    _fmt(r.n),
                    _fmt(r.j_boundary),
                    _fmt(r.gamma),
                    _fmt(r.tau),
                    _fmt(r.f_exc_m),
                    _fmt(r.f_coh_m),
                    _fmt(r.f_av_m),
                    _fmt(r.t_m),
                    _fmt(r.p_suc),
                    _fmt(r.n_measurements),
                    r.status,
                ]
            )


def _config_from_args(args, n: Optional[int] = None, gamma: Optional[float] = None) -> ChainConfig:
    n_total = int(args.n if n is None else n)
    upper = args.dephasing_upper if args.dephasing_upper is not None else n_total - 1
    if upper not in (n_total - 1, n_total - 2):
        raise _UsageError(f"--dephasing-upper must be {n_total - 1} or {n_total - 2}, got {upper}")
    return ChainConfig(
        n_total=n_total,
        j_channel=1.0,
        j_boundary=args.j_boundary,
        gamma=float(args.gamma if gamma is None else gamma),
        dephasing_sites=tuple(range(2, upper + 1)),
    )


class _UsageError(Exception):
    pass


def _common_flags(sub: argparse.ArgumentParser, with_tau: bool = True) -> None:
    sub.add_argument("--n", type=int, default=12, help="chain length N (even, >= 4)")
    sub.add_argument(
        "--j-boundary", type=float, default=0.05, help="sender/receiver coupling J' in units of J"
    )
    sub.add_argument("--gamma", type=float, default=0.0, help="dephasing rate in units of J")
    if with_tau:
        sub.add_argument(
            "--tau", type=float, default=0.0, help="measurement interval in 1/J (0 = no measurement)"
        )
    sub.add_argument(
        "--t-max", type=float, default=None, help="horizon in 1/J (default 2.5x effective transfer time)"
    )
    sub.add_argument(
        "--dephasing-upper",
        type=int,
        default=None,
        help="largest dephased site, N-1 (default, every channel site) or N-2",
    )
    sub.add_argument("--seed", type=int, default=42, help="seed recorded in the manifest")
    sub.add_argument("--out", type=Path, default=Path("."), help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinrelay",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"spinrelay {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser(
        "trace",
        help="fidelity vs time (conditional when --tau > 0)",
        description="Columns: " + ",".join(TRACE_HEADER)
        + ". Measurement instants emit two rows flagged pre/post.",
    )
    _common_flags(p)
    p.add_argument("--points", type=int, default=1200, help="number of grid points (>= 100)")
    p.add_argument("--name", default="trace", help="output file stem")

    p = subs.add_parser(
        "protocol",
        help="single measured run with success-probability summary",
        description="Columns: " + ",".join(TRACE_HEADER)
        + ". Also writes <name>_summary.json with t_m, f_av_m, p_suc, p_k.",
    )
    _common_flags(p)
    p.add_argument("--points", type=int, default=1200, help="number of grid points (>= 100)")
    p.add_argument("--name", default="protocol", help="output file stem")

    p = subs.add_parser(
        "sweep-tau",
        help="protocol runs over a grid of measurement intervals",
        description="Columns: " + ",".join(SWEEP_HEADER),
    )
    _common_flags(p, with_tau=False)
    p.add_argument("--tau-min", type=float, default=2.0)
    p.add_argument("--tau-max", type=float, default=160.0)
    p.add_argument("--tau-step", type=float, default=2.0)

    p = subs.add_parser(
        "sweep-gamma",
        help="sweep the dephasing rate at fixed tau",
        description="Columns: " + ",".join(SWEEP_HEADER),
    )
    _common_flags(p)
    p.add_argument("--gamma-min", type=float, default=0.0)
    p.add_argument("--gamma-max", type=float, default=0.1)
    p.add_argument("--gamma-step", type=float, default=0.005)

    p = subs.add_parser(
        "sweep-n",
        help="sweep the chain length at fixed tau and gamma",
        description="Columns: " + ",".join(SWEEP_HEADER),
    )
    _common_flags(p)
    p.add_argument("--n-list", default="6,8,10,12", help="comma-separated even lengths")

    p = subs.add_parser(
        "figure",
        help="write the CSV data behind one of the reference figures (2-8)",
        description="Presets with fixed grids; files are named figure<K>_*.csv.",
    )
    p.add_argument("figure_id", type=int, choices=FIGURE_IDS, metavar="figure_id")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", type=Path, default=Path("."))

    p = subs.add_parser(
        "oracle",
        help="run the cross-check suite (closed forms, full-Hilbert brute force, MC)",
    )
    p.add_argument("--seed", type=int, default=42)

    return parser


def _validate_common(args) -> None:
    if getattr(args, "n", None) is not None:
        if args.n < 4 or args.n % 2:
            raise _UsageError(f"--n must be even and >= 4, got {args.n}")
    if getattr(args, "j_boundary", None) is not None and not args.j_boundary > 0:
        raise _UsageError(f"--j-boundary must be > 0, got {args.j_boundary}")
    if getattr(args, "gamma", None) is not None and args.gamma < 0:
        raise _UsageError(f"--gamma must be >= 0, got {args.gamma}")
    if getattr(args, "tau", None) is not None and args.tau < 0:
        raise _UsageError(f"--tau must be >= 0, got {args.tau}")
    if getattr(args, "points", None) is not None and args.points < 100:
        raise _UsageError(f"--points must be >= 100, got {args.points}")
    if getattr(args, "t_max", None) is not None and not args.t_max > 0:
        raise _UsageError(f"--t-max must be > 0, got {args.t_max}")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _args_record(args, **extra) -> dict:
    skip = {"command", "out", "func"}
    record = {}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        record[key.replace("_", "-")] = str(value) if isinstance(value, Path) else value
    record.update(extra)
    return record


def _cmd_trace(args) -> int:
    _validate_common(args)
    config = _config_from_args(args)
    t_max = args.t_max if args.t_max is not None else default_t_max(config)
    schedule = MeasurementSchedule(tau=args.tau, t_max=t_max) if args.tau > 0 else None
    trace = trace_experiment(config, schedule, t_max, args.points)
    out = _out_dir(args)
    path = out / f"{args.name}.csv"
    _write_trace_csv(path, trace)
    _write_manifest(path, "trace", _args_record(args, **{"t-max-resolved": t_max}), args.seed)
    print(path)
    return 0


def _cmd_protocol(args) -> int:
    _validate_common(args)
    if not args.tau > 0:
        raise _UsageError(f"--tau must be > 0 for the protocol command, got {args.tau}")
    config = _config_from_args(args)
    t_max = args.t_max if args.t_max is not None else default_t_max(config)
    schedule = MeasurementSchedule(tau=args.tau, t_max=t_max)
    trace = trace_experiment(config, schedule, t_max, args.points)
    peak = find_first_peak(trace)  # NoPeakError -> exit 1 (handled in main)
    p_k = list(trace.meta["p_k"])
    n_meas = sum(1 for k in range(1, len(p_k) + 1) if k * args.tau <= peak.t_m + 1e-9)
    summary = {
        "t_m": peak.t_m,
        "f_av_m": peak.f_m,
        "f_exc_m": float(trace.f_exc[peak.index]),
        "f_coh_m": float(trace.f_coh[peak.index]),
        "p_k": p_k,
        "p_suc": float(np.prod(p_k[:n_meas])) if n_meas else 1.0,
        "n_measurements": n_meas,
    }
    out = _out_dir(args)
    path = out / f"{args.name}.csv"
    _write_trace_csv(path, trace)
    with open(out / f"{args.name}_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(path, "protocol", _args_record(args, **{"t-max-resolved": t_max}), args.seed)
    print(path)
    return 0


def _cmd_sweep_tau(args) -> int:
    _validate_common(args)
    if not args.tau_step > 0:
        raise _UsageError(f"--tau-step must be > 0, got {args.tau_step}")
    if not 0 < args.tau_min <= args.tau_max:
        raise _UsageError(f"need 0 < --tau-min <= --tau-max, got {args.tau_min}, {args.tau_max}")
    config = _config_from_args(args)
    taus = np.round(np.arange(args.tau_min, args.tau_max + 1e-9, args.tau_step), 12)
    records = sweep_tau(config, taus, t_max=args.t_max)
    out = _out_dir(args)
    path = out / "sweep_tau.csv"
    _write_sweep_csv(path, records)
    _write_manifest(path, "sweep-tau", _args_record(args), args.seed)
    print(path)
    return 0


def _cmd_sweep_gamma(args) -> int:
    _validate_common(args)
    if not args.gamma_step > 0:
        raise _UsageError(f"--gamma-step must be > 0, got {args.gamma_step}")
    if args.gamma_min < 0 or args.gamma_max < args.gamma_min:
        raise _UsageError(
            f"need 0 <= --gamma-min <= --gamma-max, got {args.gamma_min}, {args.gamma_max}"
        )
    config = _config_from_args(args)
    gammas = np.round(np.arange(args.gamma_min, args.gamma_max + 1e-9, args.gamma_step), 12)
    records = sweep_gamma(config, gammas, tau_fixed=args.tau, t_max=args.t_max)
    out = _out_dir(args)
    path = out / "sweep_gamma.csv"
    _write_sweep_csv(path, records)
    _write_manifest(path, "sweep-gamma", _args_record(args), args.seed)
    print(path)
    return 0


def _cmd_sweep_n(args) -> int:
    _validate_common(args)
    try:
        n_list = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
    except ValueError:
        raise _UsageError(f"--n-list must be comma-separated integers, got {args.n_list!r}")
    if not n_list or any(n < 4 or n % 2 for n in n_list):
        raise _UsageError(f"--n-list entries must be even and >= 4, got {args.n_list!r}")
    upper_offset = 1
    if args.dephasing_upper is not None:
        if args.dephasing_upper not in (args.n - 1, args.n - 2):
            raise _UsageError(
                f"--dephasing-upper must be N-1 or N-2 relative to --n, got {args.dephasing_upper}"
            )
        upper_offset = args.n - args.dephasing_upper
    records = sweep_length(
        n_list,
        j_boundary=args.j_boundary,
        gamma=args.gamma,
        tau_fixed=args.tau,
        dephasing_upper_offset=upper_offset,
        t_max=args.t_max,
    )
    out = _out_dir(args)
    path = out / "sweep_n.csv"
    _write_sweep_csv(path, records)
    _write_manifest(path, "sweep-n", _args_record(args), args.seed)
    print(path)
    return 0


def _figure_outputs(figure_id: int, out: Path, seed: int) -> list[Path]:
    cfg12 = ChainConfig(n_total=12)
    t_max = default_t_max(cfg12)
    written: list[Path] = []

    def emit_sweep(name: str, records) -> None:
        path = out / name
        _write_sweep_csv(path, records)
        _write_manifest(path, "figure", {"figure-id": figure_id, "file": name}, seed)
        written.append(path)

    def emit_trace(name: str, trace) -> None:
        path = out / name
        _write_trace_csv(path, trace)
        _write_manifest(path, "figure", {"figure-id": figure_id, "file": name}, seed)
        written.append(path)

    if figure_id == 2:
        for g in (0.0, 0.01, 0.02, 0.04):
            cfg = ChainConfig(n_total=12, gamma=g)
            emit_trace(f"figure2_trace_gamma_{g:g}.csv", trace_experiment(cfg, None, t_max, 1200))
        emit_sweep(
            "figure2_sweep_gamma.csv", sweep_gamma(cfg12, _FIGURE_GAMMA_GRID, tau_fixed=0.0)
        )
    elif figure_id == 3:
        for tau in (6.0, 7.0, 10.0, 20.0):
            schedule = MeasurementSchedule(tau=tau, t_max=t_max)
            emit_trace(
                f"figure3_trace_tau_{tau:g}.csv",
                trace_experiment(cfg12, schedule, t_max, 1200),
            )
    elif figure_id == 4:
        for n in (6, 12):
            cfg = ChainConfig(n_total=n)
            emit_sweep(f"figure4_sweep_tau_n{n}.csv", sweep_tau(cfg, _FIGURE_TAU_GRID))
    elif figure_id == 5:
        for g in (0.02, 0.04):
            cfg = ChainConfig(n_total=12, gamma=g)
            for tau in (0.0, 50.0, 150.0):
                schedule = MeasurementSchedule(tau=tau, t_max=t_max) if tau else None
                emit_trace(
                    f"figure5_trace_gamma_{g:g}_tau_{tau:g}.csv",
                    trace_experiment(cfg, schedule, t_max, 1200),
                )
    elif figure_id == 6:
        for g in (0.02, 0.04):
            cfg = ChainConfig(n_total=12, gamma=g)
            emit_sweep(f"figure6_sweep_tau_gamma_{g:g}.csv", sweep_tau(cfg, _FIGURE_TAU_GRID))
    elif figure_id == 7:
        for n in (6, 12):
            cfg = ChainConfig(n_total=n)
            emit_sweep(
                f"figure7_sweep_gamma_n{n}.csv",
                sweep_gamma(cfg, _FIGURE_GAMMA_GRID, tau_fixed=150.0),
            )
    elif figure_id == 8:
        for g in (0.02, 0.04):
            emit_sweep(
                f"figure8_sweep_n_gamma_{g:g}.csv",
                sweep_length(_FIGURE_N_GRID, gamma=g, tau_fixed=150.0),
            )
    else:  # pragma: no cover - argparse restricts choices
        raise _UsageError(f"unknown figure id {figure_id}")
    return written


def _cmd_figure(args) -> int:
    out = _out_dir(args)
    for path in _figure_outputs(args.figure_id, out, args.seed):
        print(path)
    return 0


def _cmd_oracle(args) -> int:
    results = run_all_checks(seed=args.seed)
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  dev {r.deviation:.3e}  tol {r.tolerance:.1e}  {status}  {r.detail}")
        failed += 0 if r.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


_HANDLERS = {
    "trace": _cmd_trace,
    "protocol": _cmd_protocol,
    "sweep-tau": _cmd_sweep_tau,
    "sweep-gamma": _cmd_sweep_gamma,
    "sweep-n": _cmd_sweep_n,
    "figure": _cmd_figure,
    "oracle": _cmd_oracle,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NoPeakError, ZeroProbabilityError) as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
