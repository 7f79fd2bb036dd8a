"""Shared value types: chain configuration, sector basis and density matrices.

The simulator works in the zero/one-excitation sector of an XX spin chain.
Basis ordering is fixed everywhere: index 0 is the vacuum (all spins down),
index m (1 <= m <= N) is the single excitation sitting on site m.  Site 1 is
the sender, site N the receiver, sites 2..N-1 form the channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "HERMITICITY_TOL",
    "TRACE_TOL",
    "PSD_TOL",
    "InvariantViolation",
    "ChainConfig",
    "ExcitationBasis",
    "SenderState",
    "DensityMatrix",
    "initial_state",
    "receiver_reduced_state",
]

# Tolerances for the density-matrix invariants.  States are never clipped to
# enforce these; violations raise so that integrator bugs surface immediately.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
PSD_TOL = 1e-9


class InvariantViolation(RuntimeError):
    """A physical invariant (trace, hermiticity, positivity) drifted out of tolerance."""


@dataclass(frozen=True)
class ChainConfig:
    """Physical scenario: chain length, couplings and dephasing.

    Units: hbar = 1 and the channel coupling sets the energy scale, so times
    are in 1/J and ``gamma``/``j_boundary`` are in units of J.

    Parameters
    ----------
    n_total : int
        Total number of spins N (sender = site 1, receiver = site N).
        Must be even and >= 4.
    j_channel : float
        Exchange coupling J inside the channel (> 0).
    j_boundary : float
        Coupling J' of sender/receiver to the channel ends (> 0).
    gamma : float
        Dephasing rate acting on ``dephasing_sites`` (>= 0).
    dephasing_sites : tuple of int, optional
        Sites subject to dephasing.  Defaults to every channel site
        {2, ..., N-1}; must never include sender or receiver.
    """

    n_total: int
    j_channel: float = 1.0
    j_boundary: float = 0.05
    gamma: float = 0.0
    dephasing_sites: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        n = self.n_total
        if not isinstance(n, (int, np.integer)):
            raise ValueError(f"n_total must be an integer, got {n!r}")
        if n < 4 or n % 2 != 0:
            raise ValueError(
                f"n_total must be even and >= 4, got {n} "
                "(the effective-coupling sign rule assumes even N)"
            )
        if not self.j_channel > 0:
            raise ValueError(f"j_channel must be > 0, got {self.j_channel}")
        if not self.j_boundary > 0:
            raise ValueError(f"j_boundary must be > 0, got {self.j_boundary}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.dephasing_sites is None:
            sites = tuple(range(2, n))
        else:
            sites = tuple(sorted(set(int(s) for s in self.dephasing_sites)))
            bad = [s for s in sites if s < 2 or s > n - 1]
            if bad:
                raise ValueError(
                    f"dephasing_sites must lie in {{2, ..., {n - 1}}}, got {bad}"
                )
        object.__setattr__(self, "dephasing_sites", sites)

    @property
    def dim(self) -> int:
        """Dimension N+1 of the zero/one-excitation sector."""
        return self.n_total + 1

    def basis(self) -> "ExcitationBasis":
        return ExcitationBasis(self.n_total)


@dataclass(frozen=True)
class ExcitationBasis:
    """Fixed ordering of the sector basis: [vac, 1, 2, ..., N]."""

    n_total: int

    @property
    def dim(self) -> int:
        return self.n_total + 1

    @property
    def vacuum_index(self) -> int:
        return 0

    def site_index(self, site: int) -> int:
        """Sector index of the excitation sitting on ``site`` (1-based)."""
        if not 1 <= site <= self.n_total:
            raise ValueError(f"site must be in 1..{self.n_total}, got {site}")
        return site

    @property
    def labels(self) -> tuple[str, ...]:
        return ("vac",) + tuple(str(m) for m in range(1, self.n_total + 1))


@dataclass(frozen=True)
class SenderState:
    """Bloch-sphere parametrisation of the sender qubit.

    Maps to cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>, which has unit norm
    by construction.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= math.pi + 1e-12:
            raise ValueError(f"theta must be in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < 2 * math.pi + 1e-12:
            raise ValueError(f"phi must be in [0, 2*pi), got {self.phi}")

    @property
    def amp_down(self) -> float:
        """Amplitude on |0>."""
        return math.cos(self.theta / 2.0)

    @property
    def amp_up(self) -> complex:
        """Amplitude on |1>."""
        return complex(math.cos(self.phi), math.sin(self.phi)) * math.sin(self.theta / 2.0)


@dataclass(frozen=True)
class DensityMatrix:
    """(N+1) x (N+1) state in the sector basis.

    Wraps a read-only complex array.  ``validate`` checks hermiticity, unit
    trace and positivity at the shared tolerances and raises on violation;
    nothing is ever silently renormalised or clipped.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, vector: np.ndarray) -> "DensityMatrix":
        v = np.asarray(vector, dtype=complex)
        return cls(np.outer(v, v.conj()))

    def validate(
        self,
        herm_tol: float = HERMITICITY_TOL,
        trace_tol: float = TRACE_TOL,
        psd_tol: float = PSD_TOL,
    ) -> "DensityMatrix":
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T))
        if herm > herm_tol:
            raise InvariantViolation(f"hermiticity deviation {herm:.3e} > {herm_tol:.1e}")
        tr = abs(np.trace(m) - 1.0)
        if tr > trace_tol:
            raise InvariantViolation(f"trace deviation {tr:.3e} > {trace_tol:.1e}")
        min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())
        if min_eig < -psd_tol:
            raise InvariantViolation(f"minimum eigenvalue {min_eig:.3e} < -{psd_tol:.1e}")
        return self

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def initial_state(config: ChainConfig, sender: SenderState) -> DensityMatrix:
    """Pure initial state: sender prepared, channel and receiver empty.

    In the sector basis this is the rank-1 projector onto
    cos(theta/2)|vac> + e^{i phi} sin(theta/2)|site 1>.
    """
    psi = np.zeros(config.dim, dtype=complex)
    psi[0] = sender.amp_down
    psi[1] = sender.amp_up
    return DensityMatrix.from_pure(psi)


def receiver_reduced_state(rho: DensityMatrix) -> np.ndarray:
    """Reduced 2x2 state of the receiver qubit (site N).

    Within the sector only three matrix elements survive the partial trace:
    <1|rho_N|1> = rho[N, N], <0|rho_N|1> = rho[vac, N] and the complement on
    the diagonal; coherences between the receiver excitation and other
    single-excitation states trace out.
    """
    m = rho.matrix
    d = m.shape[0]
    if d < 2:
        raise ValueError(f"density matrix dimension {d} too small")
    n_idx = d - 1
    p_exc = m[n_idx, n_idx]
    coh = m[0, n_idx]
    return np.array([[1.0 - p_exc, coh], [np.conj(coh), p_exc]], dtype=complex)
