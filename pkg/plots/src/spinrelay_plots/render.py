"""Render the reference figures (2-8) from spinrelay CSV outputs.

Consumes only the CSV files written by ``spinrelay figure <K>`` (trace files
with columns time,f_exc,f_coh,f_av,edge and sweep files with the SweepRecord
columns).  Rendering is deterministic: fixed style, no timestamps, so the
same CSV bytes always produce the same image bytes.  Failed sweep points
(status other than ok) are drawn as gaps, never interpolated.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "SchemaError",
    "FigureSpec",
    "default_spec",
    "load_trace_csv",
    "load_sweep_csv",
    "build_figure",
    "render",
    "main",
]

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

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}


class SchemaError(RuntimeError):
    """A CSV input does not match the schema its figure preset requires."""


@dataclass(frozen=True)
class FigureSpec:
    figure_id: int
    input_csvs: tuple[Path, ...]
    panel_layout: tuple[int, int]
    axis_labels: tuple[tuple[str, str], ...]  # (xlabel, ylabel) per panel


_PRESET_FILES = {
    2: [
        "figure2_trace_gamma_0.csv",
        "figure2_trace_gamma_0.01.csv",
        "figure2_trace_gamma_0.02.csv",
        "figure2_trace_gamma_0.04.csv",
        "figure2_sweep_gamma.csv",
    ],
    3: [
        "figure3_trace_tau_6.csv",
        "figure3_trace_tau_7.csv",
        "figure3_trace_tau_10.csv",
        "figure3_trace_tau_20.csv",
    ],
    4: ["figure4_sweep_tau_n6.csv", "figure4_sweep_tau_n12.csv"],
    5: [
        "figure5_trace_gamma_0.02_tau_0.csv",
        "figure5_trace_gamma_0.02_tau_50.csv",
        "figure5_trace_gamma_0.02_tau_150.csv",
        "figure5_trace_gamma_0.04_tau_0.csv",
        "figure5_trace_gamma_0.04_tau_50.csv",
        "figure5_trace_gamma_0.04_tau_150.csv",
    ],
    6: ["figure6_sweep_tau_gamma_0.02.csv", "figure6_sweep_tau_gamma_0.04.csv"],
    7: ["figure7_sweep_gamma_n6.csv", "figure7_sweep_gamma_n12.csv"],
    8: ["figure8_sweep_n_gamma_0.02.csv", "figure8_sweep_n_gamma_0.04.csv"],
}

_LAYOUTS = {
    2: (2, 2),
    3: (2, 2),
    4: (1, 2),
    5: (1, 2),
    6: (2, 2),
    7: (1, 2),
    8: (1, 2),
}

_TIME = r"$Jt$"
_TAU = r"$J\tau$"
_GAMMA = r"$\gamma/J$"
_FAV = r"$F^{av}$"
_PSUC = r"$P_{suc}$"

_AXIS_LABELS = {
    2: ((_TIME, r"$F^{exc}$"), (_TIME, r"$F^{coh}$"), (_TIME, _FAV), (_GAMMA, "peak fidelities")),
    3: ((_TIME, _FAV),) * 4,
    4: ((_TAU, r"$Jt_m$"), (_TAU, _PSUC)),
    5: ((_TIME, _FAV), (_TIME, _FAV)),
    6: ((_TAU, r"$F^{av}_m$"), (_TAU, _PSUC), (_TAU, r"$F^{av}_m$"), (_TAU, _PSUC)),
    7: ((_GAMMA, r"$F^{av}_m$"), (_GAMMA, _PSUC)),
    8: (("$N$", r"$F^{av}_m$"), ("$N$", _PSUC)),
}


def default_spec(figure_id: int, in_dir: Path) -> FigureSpec:
    """Spec wired to the file names the matching CLI preset writes."""
    if figure_id not in _PRESET_FILES:
        raise ValueError(f"figure_id must be one of {sorted(_PRESET_FILES)}, got {figure_id}")
    in_dir = Path(in_dir)
    return FigureSpec(
        figure_id=figure_id,
        input_csvs=tuple(in_dir / name for name in _PRESET_FILES[figure_id]),
        panel_layout=_LAYOUTS[figure_id],
        axis_labels=_AXIS_LABELS[figure_id],
    )


def _read_rows(path: Path, expected_header: list[str]) -> list[dict]:
    if not path.exists():
        raise SchemaError(f"input CSV does not exist: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"empty CSV: {path}")
        for col in expected_header:
            if col not in header:
                raise SchemaError(f"{path} is missing column {col!r}")
        for col in header:
            if col not in expected_header:
                raise SchemaError(f"{path} has unexpected column {col!r}")
        rows = [dict(zip(header, row)) for row in reader]
    if not rows:
        raise SchemaError(f"no data rows in CSV: {path}")
    return rows


def _num(value: str) -> float:
    return float(value) if value != "" else math.nan


def load_trace_csv(path: Path) -> dict[str, np.ndarray]:
    """Columns of a fidelity trace; pre/post rows at measurement instants kept."""
    rows = _read_rows(Path(path), TRACE_HEADER)
    out = {
        key: np.array([_num(r[key]) for r in rows])
        for key in ("time", "f_exc", "f_coh", "f_av")
    }
    out["edge"] = np.array([r["edge"] for r in rows])
    return out


def load_sweep_csv(path: Path) -> dict[str, np.ndarray]:
    """Columns of a sweep; failed points carry NaN so plots show gaps."""
    rows = _read_rows(Path(path), SWEEP_HEADER)
    numeric = ("swept_value", "n", "j_boundary", "gamma", "tau", "f_exc_m", "f_coh_m",
               "f_av_m", "t_m", "p_suc", "n_measurements")
    out = {key: np.array([_num(r[key]) for r in rows]) for key in numeric}
    out["status"] = np.array([r["status"] for r in rows])
    return out


def _plot_traces(ax, files, label_fmt, labels):
    for path, label in zip(files, labels):
        data = load_trace_csv(path)
        ax.plot(data["time"], data["f_av"], label=label_fmt.format(label))
    ax.legend(fontsize=7)


def build_figure(spec: FigureSpec):
    """Assemble the figure; returns (matplotlib figure, per-panel curve counts)."""
    with plt.rc_context(_STYLE):
        rows, cols = spec.panel_layout
        fig, axes = plt.subplots(rows, cols, figsize=(4.0 * cols, 3.0 * rows))
        axes = np.atleast_1d(axes).reshape(-1)
        fid = spec.figure_id
        files = spec.input_csvs

        if fid == 2:
            gammas = ("0", "0.01", "0.02", "0.04")
            traces = [load_trace_csv(p) for p in files[:4]]
            for ax, key in zip(axes[:3], ("f_exc", "f_coh", "f_av")):
                for g, tr in zip(gammas, traces):
                    ax.plot(tr["time"], tr[key], label=rf"$\gamma={g}$")
                ax.legend(fontsize=7)
            sweep = load_sweep_csv(files[4])
            for key, label in (("f_exc_m", r"$F^{exc}_m$"), ("f_coh_m", r"$F^{coh}_m$"),
                               ("f_av_m", r"$F^{av}_m$")):
                axes[3].plot(sweep["swept_value"], sweep[key], marker=".", label=label)
            axes[3].legend(fontsize=7)
        elif fid == 3:
            for ax, tau, path in zip(axes, ("6", "7", "10", "20"), files):
                tr = load_trace_csv(path)
                ax.plot(tr["time"], tr["f_av"], label=rf"$J\tau={tau}$")
                ax.legend(fontsize=7)
        elif fid == 4:
            for n, path in zip(("6", "12"), files):
                sweep = load_sweep_csv(path)
                axes[0].plot(sweep["swept_value"], sweep["t_m"], marker=".", label=f"$N={n}$")
            axes[0].legend(fontsize=7)
            sweep12 = load_sweep_csv(files[1])
            axes[1].plot(sweep12["swept_value"], sweep12["p_suc"], marker=".", label="$N=12$")
            axes[1].legend(fontsize=7)
        elif fid == 5:
            for ax, batch in zip(axes, (files[:3], files[3:])):
                for tau, path in zip(("0", "50", "150"), batch):
                    tr = load_trace_csv(path)
                    label = "no measurement" if tau == "0" else rf"$J\tau={tau}$"
                    ax.plot(tr["time"], tr["f_av"], label=label)
                ax.legend(fontsize=7)
        elif fid == 6:
            for pair, (path, g) in enumerate(zip(files, ("0.02", "0.04"))):
                sweep = load_sweep_csv(path)
                axes[2 * pair].plot(
                    sweep["swept_value"], sweep["f_av_m"], marker=".", label=rf"$\gamma={g}$"
                )
                axes[2 * pair + 1].plot(
                    sweep["swept_value"], sweep["p_suc"], marker=".", label=rf"$\gamma={g}$"
                )
                axes[2 * pair].legend(fontsize=7)
                axes[2 * pair + 1].legend(fontsize=7)
        elif fid == 7:
            for n, path in zip(("6", "12"), files):
                sweep = load_sweep_csv(path)
                axes[0].plot(sweep["swept_value"], sweep["f_av_m"], marker=".", label=f"$N={n}$")
                axes[1].plot(sweep["swept_value"], sweep["p_suc"], marker=".", label=f"$N={n}$")
            axes[0].legend(fontsize=7)
            axes[1].legend(fontsize=7)
        elif fid == 8:
            for g, path in zip(("0.02", "0.04"), files):
                sweep = load_sweep_csv(path)
                axes[0].plot(sweep["n"], sweep["f_av_m"], marker="o", label=rf"$\gamma={g}$")
                axes[1].plot(sweep["n"], sweep["p_suc"], marker="o", label=rf"$\gamma={g}$")
            axes[0].legend(fontsize=7)
            axes[1].legend(fontsize=7)
        else:
            raise ValueError(f"unknown figure id {fid}")

        info = {"panels": []}
        for ax, (xlabel, ylabel) in zip(axes, spec.axis_labels):
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            info["panels"].append({"curves": len(ax.get_lines()), "xlabel": xlabel, "ylabel": ylabel})
        fig.suptitle(f"figure {fid}")
        fig.tight_layout()
    return fig, info


def render(spec: FigureSpec, out_path: Path) -> Path:
    """Write the assembled figure as a PNG; byte-stable for identical inputs."""
    fig, _ = build_figure(spec)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format="png", metadata={"Software": "spinrelay-plots"})
    plt.close(fig)
    return out_path


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinrelay-plots",
        description="Render a reference figure from spinrelay CSV outputs.",
    )
    parser.add_argument("--figure", type=int, required=True, choices=sorted(_PRESET_FILES))
    parser.add_argument("--in", dest="in_dir", type=Path, required=True,
                        help="directory holding the figure's preset CSVs")
    parser.add_argument("--out", type=Path, default=None,
                        help="output image path (default figure<K>.png next to the inputs)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = args.out if args.out is not None else args.in_dir / f"figure{args.figure}.png"
    try:
        path = render(default_spec(args.figure, args.in_dir), out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
