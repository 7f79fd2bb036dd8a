"""Regular global channel measurements: conditioning, success bookkeeping.

The measurement projects the channel onto its vacuum.  In the sector basis
the successful outcome keeps exactly the elements supported on
{vac, sender, receiver}; everything touching a channel site is zeroed.  A
protocol run alternates fixed-step Lindblad evolution with this projection,
renormalising the surviving branch, and reports the per-measurement success
probabilities of the excitation input (the vacuum branch always succeeds,
so the excitation branch is the channel-level figure of merit).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ChainConfig, DensityMatrix, InvariantViolation
from .dynamics import make_propagator
from .fidelity import (
    FidelityTrace,
    MeasurementJump,
    PeakResult,
    find_first_peak,
)

__all__ = [
    "ZERO_PROBABILITY_FLOOR",
    "ZeroProbabilityError",
    "MeasurementSchedule",
    "ProtocolResult",
    "channel_projector_apply",
    "conditional_branch_trace",
    "protocol_time_grid",
    "run_protocol",
    "success_probability_trace",
]

ZERO_PROBABILITY_FLOOR = 1e-14


class ZeroProbabilityError(RuntimeError):
    """The success branch died: projection left (almost) no weight."""

    def __init__(self, message: str, measurement_index: int = 0, time: float = 0.0):
        super().__init__(message)
        self.measurement_index = measurement_index
        self.time = time


@dataclass(frozen=True)
class MeasurementSchedule:
    """Regular measurements at k*tau for k = 1 .. floor(t_max/tau)."""

    tau: float
    t_max: float
    measure_at_end: bool = True

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")

    def measurement_times(self) -> np.ndarray:
        k_max = int(math.floor(self.t_max / self.tau + 1e-9))
        times = np.arange(1, k_max + 1) * self.tau
        if times.size and not self.measure_at_end:
            if abs(times[-1] - self.t_max) <= 1e-9 * max(1.0, self.t_max):
                times = times[:-1]
        return times


@dataclass(frozen=True)
class ProtocolResult:
    """Outcome of one success-conditioned protocol run."""

    trace: FidelityTrace
    p_k: tuple[float, ...]      # per-measurement success probabilities, in order
    p_suc: float                # product over measurements with k*tau <= t_m
    t_m: float
    f_av_m: float
    n_measurements: int         # count of measurements with k*tau <= t_m
    peak: PeakResult


def _keep_mask(dim: int) -> np.ndarray:
    keep = np.zeros(dim, dtype=bool)
    keep[[0, 1, dim - 1]] = True
    return keep


def channel_projector_apply(
    rho: DensityMatrix, config: ChainConfig
) -> tuple[DensityMatrix, float]:
    """Project onto the empty channel, renormalise, return (state, probability).

    Raises :class:`ZeroProbabilityError` when the surviving weight is below
    ``ZERO_PROBABILITY_FLOOR`` instead of renormalising by ~0.
    """
    if rho.dim != config.dim:
        raise ValueError(f"state dim {rho.dim} does not match config dim {config.dim}")
    keep = _keep_mask(config.dim)
    m = rho.matrix
    p = float(np.real(m.diagonal()[keep].sum()))
    if p < ZERO_PROBABILITY_FLOOR:
        raise ZeroProbabilityError(
            f"projection probability {p:.3e} below {ZERO_PROBABILITY_FLOOR:.0e}"
        )
    projected = np.where(np.outer(keep, keep), m, 0.0) / p
    return DensityMatrix(projected), min(p, 1.0)


class _InvariantMonitor:
    """Running worst-case trace/hermiticity/positivity drift of a state branch.

    Trace and hermiticity are cheap and checked at every step; the spectrum
    is sampled every ``eig_stride`` steps (and always at measurements), which
    still catches integrator pathologies since the drift is continuous.
    """

    def __init__(self, eig_stride: int = 8) -> None:
        self.max_trace_dev = 0.0
        self.max_herm_dev = 0.0
        self.min_eigenvalue = np.inf
        self._stride = max(1, eig_stride)
        self._count = 0

    def update(self, rho: np.ndarray, force_eig: bool = False) -> None:
        tr = abs(np.real(np.trace(rho)) - 1.0)
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        self.max_trace_dev = max(self.max_trace_dev, tr)
        self.max_herm_dev = max(self.max_herm_dev, herm)
        if force_eig or self._count % self._stride == 0:
            eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
            self.min_eigenvalue = min(self.min_eigenvalue, eig)
        self._count += 1

    def enforce(self) -> None:
        if self.max_trace_dev > 1e-9:
            raise InvariantViolation(f"trace drift {self.max_trace_dev:.3e} > 1e-09")
        if self.max_herm_dev > 1e-10:
            raise InvariantViolation(f"hermiticity drift {self.max_herm_dev:.3e} > 1e-10")
        if self.min_eigenvalue < -1e-9:
            raise InvariantViolation(f"negative eigenvalue {self.min_eigenvalue:.3e} < -1e-09")

    def as_dict(self) -> dict:
        return {
            "max_trace_dev": self.max_trace_dev,
            "max_herm_dev": self.max_herm_dev,
            "min_eigenvalue": None if np.isinf(self.min_eigenvalue) else self.min_eigenvalue,
        }


def conditional_branch_trace(
    config: ChainConfig,
    times: np.ndarray,
    schedule: Optional[MeasurementSchedule] = None,
    validate: bool = True,
) -> FidelityTrace:
    """Evolve both fidelity branches on ``times``, conditioning at measurements.

    The excitation branch starts as the pure excitation on the sender and the
    coherence branch as the vacuum-sender coherence operator; both are pushed
    through the same linear steps.  At each measurement the projection is
    applied to both, the excitation branch is renormalised by its surviving
    trace p_k and the coherence branch by sqrt(p_k).  Post-measurement values
    land in the trace arrays; pre-measurement values are kept as jumps.
    """
    d = config.dim
    n_idx = d - 1
    t = np.asarray(times, dtype=float)

    if schedule is not None:
        meas_times = schedule.measurement_times()
        meas_indices = {}
        for k, tm in enumerate(meas_times, start=1):
            hits = np.nonzero(np.isclose(t, tm, rtol=0.0, atol=1e-9 * max(1.0, tm)))[0]
            if hits.size == 0:
                raise ValueError(f"time grid is missing measurement time {tm!r}")
            meas_indices[int(hits[0])] = k
        if t[-1] < schedule.t_max - 1e-9 * max(1.0, schedule.t_max):
            raise ValueError(
                f"time grid ends at {t[-1]}, before schedule t_max {schedule.t_max}"
            )
    else:
        meas_indices = {}

    rho = np.zeros((d, d), dtype=complex)
    rho[1, 1] = 1.0
    coh = np.zeros((d, d), dtype=complex)
    coh[0, 1] = 1.0
    branches = np.empty((d * d, 2), dtype=complex)
    branches[:, 0] = rho.reshape(-1)
    branches[:, 1] = coh.reshape(-1)

    keep = _keep_mask(d)
    proj = np.outer(keep, keep).reshape(-1)
    diag_keep = (np.arange(d) * (d + 1))[keep]

    f_exc = np.empty(t.size)
    f_coh = np.empty(t.size)
    jumps: list[MeasurementJump] = []
    p_list: list[float] = []
    monitor = _InvariantMonitor() if validate else None

    def extract(col_rho: np.ndarray, col_coh: np.ndarray) -> tuple[float, float]:
        return float(np.real(col_rho[n_idx * d + n_idx])), float(abs(col_coh[n_idx]))

    f_exc[0], f_coh[0] = extract(branches[:, 0], branches[:, 1])
    if monitor is not None:
        monitor.update(branches[:, 0].reshape(d, d), force_eig=True)

    prop_cache: dict[float, np.ndarray] = {}
    scratch = np.empty_like(branches)
    for i in range(1, t.size):
        dt = float(t[i] - t[i - 1])
        prop = prop_cache.get(dt)
        if prop is None:
            prop = make_propagator(config, dt).matrix
            prop_cache[dt] = prop
        np.matmul(prop, branches, out=scratch)
        branches, scratch = scratch, branches
        k = meas_indices.get(i)
        if k is not None:
            pre_exc, pre_coh = extract(branches[:, 0], branches[:, 1])
            p = float(np.real(branches[diag_keep, 0].sum()))
            if p < ZERO_PROBABILITY_FLOOR:
                raise ZeroProbabilityError(
                    f"success branch died at measurement {k} (t={t[i]:g}): p={p:.3e}",
                    measurement_index=k,
                    time=float(t[i]),
                )
            branches *= proj[:, None]
            branches[:, 0] /= p
            branches[:, 1] /= math.sqrt(p)
            p_list.append(min(p, 1.0))
            jumps.append(
                MeasurementJump(
                    index=k,
                    time=float(t[i]),
                    probability=min(p, 1.0),
                    f_exc_pre=pre_exc,
                    f_coh_pre=pre_coh,
                    f_av_pre=0.5 + pre_exc / 6.0 + pre_coh / 3.0,
                )
            )
        f_exc[i], f_coh[i] = extract(branches[:, 0], branches[:, 1])
        if monitor is not None:
            monitor.update(branches[:, 0].reshape(d, d), force_eig=k is not None)

    if monitor is not None:
        monitor.enforce()

    meta = {
        "n_total": config.n_total,
        "j_channel": config.j_channel,
        "j_boundary": config.j_boundary,
        "gamma": config.gamma,
        "dephasing_sites": config.dephasing_sites,
        "tau": schedule.tau if schedule is not None else 0.0,
        "t_max": schedule.t_max if schedule is not None else float(t[-1]),
        "p_k": tuple(p_list),
        "invariants": monitor.as_dict() if monitor is not None else None,
    }
    return FidelityTrace(
        times=t,
        f_exc=f_exc,
        f_coh=f_coh,
        f_av=0.5 + f_exc / 6.0 + f_coh / 3.0,
        meta=meta,
        jumps=tuple(jumps),
    )


def protocol_time_grid(schedule: MeasurementSchedule, dt_target: float) -> np.ndarray:
    """Grid over [0, t_max] hitting every measurement time exactly.

    Each measurement interval is split uniformly into steps no longer than
    ``dt_target``; the sub-points are built as exact fractions of tau so the
    grid values at k*tau match ``measurement_times()`` bitwise.
    """
    if dt_target <= 0:
        raise ValueError(f"dt_target must be > 0, got {dt_target}")
    tau, t_max = schedule.tau, schedule.t_max
    k_full = int(math.floor(t_max / tau + 1e-9))
    m = max(1, int(math.ceil(tau / dt_target - 1e-12)))
    points = [0.0]
    for k in range(k_full):
        points.extend((k + (j + 1) / m) * tau for j in range(m))
    tail = t_max - k_full * tau
    if tail > 1e-9 * max(1.0, t_max):
        m_tail = max(1, int(math.ceil(tail / dt_target - 1e-12)))
        start = k_full * tau
        points.extend(start + (j + 1) * tail / m_tail for j in range(m_tail))
        points[-1] = t_max
    return np.array(points)


def run_protocol(
    config: ChainConfig,
    schedule: MeasurementSchedule,
    time_grid: Sequence[float],
    validate: bool = True,
) -> ProtocolResult:
    """Alternate evolution and measurement, locate the conditional peak.

    The success probability is the product of p_k over exactly those
    measurements with k*tau <= t_m.  Raises :class:`NoPeakError` when the
    conditional average fidelity never peaks within the grid (Zeno regime)
    and :class:`ZeroProbabilityError` when the success branch dies.
    """
    t = np.asarray(time_grid, dtype=float)
    if t[0] != 0.0:
        raise ValueError(f"time grid must start at 0, got {t[0]}")
    trace = conditional_branch_trace(config, t, schedule, validate=validate)
    peak = find_first_peak(trace)
    p_k = trace.meta["p_k"]
    n_meas = sum(1 for k in range(1, len(p_k) + 1) if k * schedule.tau <= peak.t_m + 1e-9)
    p_suc = float(np.prod(p_k[:n_meas])) if n_meas else 1.0
    return ProtocolResult(
        trace=trace,
        p_k=p_k,
        p_suc=p_suc,
        t_m=peak.t_m,
        f_av_m=peak.f_m,
        n_measurements=n_meas,
        peak=peak,
    )


def success_probability_trace(
    config: ChainConfig,
    tau: float,
    k_max: int,
) -> np.ndarray:
    """Sequence p_1 .. p_k_max under repeated conditioning, excitation input.

    Each entry is the probability that measurement k succeeds given that all
    previous ones did, starting from the excitation on the sender.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    d = config.dim
    keep = _keep_mask(d)
    proj = np.outer(keep, keep)
    diag = np.arange(d)
    prop = make_propagator(config, float(tau))
    rho = np.zeros((d, d), dtype=complex)
    rho[1, 1] = 1.0
    out = np.empty(k_max)
    for k in range(1, k_max + 1):
        rho = prop.apply(rho)
        p = float(np.real(rho[diag, diag][keep].sum()))
        if p < ZERO_PROBABILITY_FLOOR:
            raise ZeroProbabilityError(
                f"success branch died at measurement {k}: p={p:.3e}",
                measurement_index=k,
                time=k * tau,
            )
        rho = np.where(proj, rho, 0.0) / p
        out[k - 1] = min(p, 1.0)
    return out
