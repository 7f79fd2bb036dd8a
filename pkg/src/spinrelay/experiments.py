"""Parameter sweeps and trace generators emitting uniform records.

Every sweep point is an independent pure computation; records come back in
canonical order (sorted by swept value) no matter how they were scheduled.
Failed points are reported through the record status, never fabricated, and
a sweep never aborts because one point had no peak.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .analytics import effective_model
from .core import ChainConfig
from .fidelity import FidelityTrace, NoPeakError, find_first_peak, transfer_fidelities
from .protocol import (
    MeasurementSchedule,
    ZeroProbabilityError,
    protocol_time_grid,
    run_protocol,
)

__all__ = [
    "STATUS_OK",
    "STATUS_NO_PEAK",
    "STATUS_ZERO_PROBABILITY",
    "SweepRecord",
    "default_t_max",
    "default_dt",
    "trace_experiment",
    "run_point",
    "sweep_tau",
    "sweep_gamma",
    "sweep_length",
]

STATUS_OK = "ok"
STATUS_NO_PEAK = "no_peak"
STATUS_ZERO_PROBABILITY = "zero_probability"

THREADS_ENV = "SPINRELAY_THREADS"


@dataclass(frozen=True)
class SweepRecord:
    """One row of a parameter sweep; the unit of CSV output.

    ``tau == 0`` means no measurements were performed.  When ``status`` is
    not ``ok`` every fidelity field is None.
    """

    swept_name: str
    swept_value: float
    n: int
    j_boundary: float
    gamma: float
    tau: float
    f_exc_m: Optional[float]
    f_coh_m: Optional[float]
    f_av_m: Optional[float]
    t_m: Optional[float]
    p_suc: Optional[float]
    n_measurements: Optional[int]
    status: str

    def __post_init__(self) -> None:
        if self.status not in (STATUS_OK, STATUS_NO_PEAK, STATUS_ZERO_PROBABILITY):
            raise ValueError(f"unknown status {self.status!r}")
        swept = {"tau": self.tau, "gamma": self.gamma, "n": self.n}.get(self.swept_name)
        if swept is None or float(swept) != float(self.swept_value):
            raise ValueError(
                f"swept_name {self.swept_name!r} does not match swept_value {self.swept_value!r}"
            )
        fields = (self.f_exc_m, self.f_coh_m, self.f_av_m, self.t_m, self.p_suc)
        if self.status == STATUS_OK:
            if any(v is None for v in fields):
                raise ValueError("status ok requires all fidelity fields")
        elif any(v is not None for v in fields):
            raise ValueError(f"status {self.status} must not carry fidelity values")


def default_t_max(config: ChainConfig) -> float:
    """Horizon 2.5x the effective transfer time, bracketing the first peak."""
    return 2.5 * effective_model(config).t_m_eff


def default_dt(config: ChainConfig) -> float:
    """Grid spacing for peak searches: effective transfer time / 400."""
    return effective_model(config).t_m_eff / 400.0


def trace_experiment(
    config: ChainConfig,
    schedule: Optional[MeasurementSchedule],
    t_max: float,
    n_points: int,
) -> FidelityTrace:
    """Uniform-grid fidelity trace, grid augmented to hit measurement times."""
    if n_points < 100:
        raise ValueError(f"n_points must be >= 100, got {n_points}")
    if t_max <= 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    grid = np.linspace(0.0, t_max, n_points)
    if schedule is not None:
        meas = schedule.measurement_times()
        if meas.size:
            atol = 1e-9 * max(1.0, t_max)
            near = np.any(np.abs(grid[:, None] - meas[None, :]) <= atol, axis=1)
            near[0] = False
            grid = np.sort(np.concatenate([grid[~near], meas]))
    return transfer_fidelities(config, grid, protocol=schedule)


def run_point(
    config: ChainConfig,
    tau: float,
    t_max: Optional[float] = None,
    swept_name: str = "tau",
    swept_value: Optional[float] = None,
) -> SweepRecord:
    """Single sweep point: protocol run for tau > 0, plain trace for tau == 0."""
    horizon = default_t_max(config) if t_max is None else float(t_max)
    dt = default_dt(config)
    value = float(tau if swept_value is None else swept_value)
    base = dict(
        swept_name=swept_name,
        swept_value=value,
        n=config.n_total,
        j_boundary=config.j_boundary,
        gamma=config.gamma,
        tau=float(tau),
    )
    try:
        if tau > 0:
            schedule = MeasurementSchedule(tau=float(tau), t_max=horizon)
            result = run_protocol(config, schedule, protocol_time_grid(schedule, dt))
            peak_idx = result.peak.index
            trace = result.trace
            return SweepRecord(
                **base,
                f_exc_m=float(trace.f_exc[peak_idx]),
                f_coh_m=float(trace.f_coh[peak_idx]),
                f_av_m=result.f_av_m,
                t_m=result.t_m,
                p_suc=result.p_suc,
                n_measurements=result.n_measurements,
                status=STATUS_OK,
            )
        grid = np.linspace(0.0, horizon, max(3, int(round(horizon / dt)) + 1))
        trace = transfer_fidelities(config, grid)
        peak = find_first_peak(trace)
        return SweepRecord(
            **base,
            f_exc_m=float(trace.f_exc[peak.index]),
            f_coh_m=float(trace.f_coh[peak.index]),
            f_av_m=peak.f_m,
            t_m=peak.t_m,
            p_suc=1.0,
            n_measurements=0,
            status=STATUS_OK,
        )
    except NoPeakError:
        return SweepRecord(
            **base,
            f_exc_m=None,
            f_coh_m=None,
            f_av_m=None,
            t_m=None,
            p_suc=None,
            n_measurements=None,
            status=STATUS_NO_PEAK,
        )
    except ZeroProbabilityError:
        return SweepRecord(
            **base,
            f_exc_m=None,
            f_coh_m=None,
            f_av_m=None,
            t_m=None,
            p_suc=None,
            n_measurements=None,
            status=STATUS_ZERO_PROBABILITY,
        )


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_points(fn, items: Sequence) -> list:
    workers = _worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sweep_tau(
    config: ChainConfig,
    tau_list: Sequence[float],
    t_max: Optional[float] = None,
) -> list[SweepRecord]:
    """One protocol run per measurement interval."""
    records = _map_points(
        lambda tau: run_point(config, tau, t_max=t_max, swept_name="tau"),
        list(tau_list),
    )
    return sorted(records, key=lambda r: r.swept_value)


def sweep_gamma(
    config: ChainConfig,
    gamma_list: Sequence[float],
    tau_fixed: float = 0.0,
    t_max: Optional[float] = None,
) -> list[SweepRecord]:
    """Sweep the dephasing rate at fixed measurement interval (0 = none)."""

    def point(gamma: float) -> SweepRecord:
        cfg = ChainConfig(
            n_total=config.n_total,
            j_channel=config.j_channel,
            j_boundary=config.j_boundary,
            gamma=float(gamma),
            dephasing_sites=config.dephasing_sites,
        )
        return run_point(
            cfg, tau_fixed, t_max=t_max, swept_name="gamma", swept_value=float(gamma)
        )

    return sorted(_map_points(point, list(gamma_list)), key=lambda r: r.swept_value)


def sweep_length(
    n_list: Sequence[int],
    j_boundary: float = 0.05,
    gamma: float = 0.0,
    tau_fixed: float = 0.0,
    j_channel: float = 1.0,
    dephasing_upper_offset: int = 1,
    t_max: Optional[float] = None,
) -> list[SweepRecord]:
    """Sweep the chain length at fixed couplings, dephasing and interval.

    ``dephasing_upper_offset`` selects the top dephased site N - offset
    (1 = every channel site, 2 = all but the last channel site).
    """

    def point(n: int) -> SweepRecord:
        cfg = ChainConfig(
            n_total=int(n),
            j_channel=j_channel,
            j_boundary=j_boundary,
            gamma=gamma,
            dephasing_sites=tuple(range(2, int(n) - dephasing_upper_offset + 1)),
        )
        return run_point(
            cfg, tau_fixed, t_max=t_max, swept_name="n", swept_value=float(n)
        )

    return sorted(_map_points(point, list(n_list)), key=lambda r: r.swept_value)
