"""Sector-reduced Lindblad dynamics plus a brute-force full-Hilbert oracle.

The XX Hamiltonian and pure sigma^z dephasing both conserve the number of
excitations, so the physical evolution closes on the (N+1)-dimensional
zero/one-excitation sector.  All production paths work there; the
``oracle_evolve_full`` path repeats the computation with dense 2^N spin
operators and no sector assumption, as an independent cross-check for small N.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .core import ChainConfig, DensityMatrix, InvariantViolation

__all__ = [
    "IntegrationError",
    "Generator",
    "Propagator",
    "build_hamiltonian",
    "build_generator",
    "make_propagator",
    "evolve",
    "oracle_evolve_full",
    "sector_to_full",
    "full_to_sector",
    "oracle_receiver_state_full",
]

ORACLE_MAX_SPINS = 8  # cost guard for the 2^N brute-force path


class IntegrationError(RuntimeError):
    """The adaptive integrator failed (e.g. step-size underflow)."""


def build_hamiltonian(config: ChainConfig) -> np.ndarray:
    """Sector Hamiltonian: real symmetric (N+1) x (N+1), vacuum row/column zero.

    Tridiagonal in the site indices: hopping J' on the boundary bonds (1,2)
    and (N-1,N), J on every internal channel bond, zero diagonal.
    """
    d = config.dim
    n = config.n_total
    h = np.zeros((d, d))
    for m in range(1, n):
        j = config.j_boundary if m in (1, n - 1) else config.j_channel
        h[m, m + 1] = j
        h[m + 1, m] = j
    return h


def _dephasing_rate_table(config: ChainConfig) -> np.ndarray:
    """Element-wise decay rates of the dephasing dissipator in the sector basis.

    Entry (a, b) multiplies rho[a, b].  With sigma^z eigenvalue +1 on an
    excited site and -1 otherwise, the dissipator acts element-wise as
    gamma * sum_k (z_k(a) z_k(b) - 1), which vanishes on the diagonal and on
    the vacuum element and is -2*gamma per dephased site distinguishing the
    two basis states.  Re-derived against the full-Hilbert oracle in the
    test suite rather than trusted.
    """
    d = config.dim
    z = -np.ones((d, config.n_total))
    for m in range(1, d):
        z[m, m - 1] = 1.0
    rate = np.zeros((d, d))
    for site in config.dephasing_sites:
        col = z[:, site - 1]
        rate += np.outer(col, col) - 1.0
    return config.gamma * rate


@dataclass(frozen=True)
class Generator:
    """Lindblad generator acting on row-major vectorised sector matrices."""

    dim: int  # (N+1)**2
    matrix: np.ndarray

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = int(np.sqrt(self.dim))
        return (self.matrix @ np.asarray(rho, dtype=complex).reshape(-1)).reshape(d, d)


@dataclass(frozen=True)
class Propagator:
    """Fixed-duration CPTP map exp(duration * generator), stored dense."""

    duration: float
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = int(np.sqrt(self.dim))
        return (self.matrix @ np.asarray(rho, dtype=complex).reshape(-1)).reshape(d, d)


@lru_cache(maxsize=256)
def _generator_cached(config: ChainConfig) -> Generator:
    d = config.dim
    h = build_hamiltonian(config)
    eye = np.eye(d)
    # vec(A rho B) = (A kron B^T) vec(rho) for row-major vectorisation
    commutator = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    lindblad = commutator.astype(complex)
    lindblad += np.diag(_dephasing_rate_table(config).reshape(-1))
    lindblad.setflags(write=False)
    return Generator(dim=d * d, matrix=lindblad)


def build_generator(config: ChainConfig) -> Generator:
    """Dense superoperator for d/dt rho = -i[H, rho] + dephasing dissipator."""
    return _generator_cached(config)


@lru_cache(maxsize=512)
def _propagator_cached(config: ChainConfig, step: float) -> Propagator:
    gen = build_generator(config)
    mat = expm(step * gen.matrix)
    mat.setflags(write=False)
    return Propagator(duration=step, matrix=mat)


def make_propagator(config: ChainConfig, step: float) -> Propagator:
    """Precompute the fixed-step propagator (exact per step, reusable)."""
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    return _propagator_cached(config, float(step))


def evolve(
    rho: DensityMatrix,
    duration: float,
    config: ChainConfig,
    method: str = "expm",
    validate: bool = True,
) -> DensityMatrix:
    """Propagate a sector state for ``duration``.

    ``method="expm"`` applies the dense matrix exponential of the generator
    (exact up to the exponential's own accuracy); ``method="adaptive"`` runs
    an adaptive 4th/5th-order integrator at atol 1e-10 / rtol 1e-8.  The two
    paths cross-check each other in the tests.
    """
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    if rho.dim != config.dim:
        raise ValueError(f"state dim {rho.dim} does not match config dim {config.dim}")
    if duration == 0.0:
        return rho
    if method == "expm":
        out = make_propagator(config, duration).apply(rho.matrix)
    elif method == "adaptive":
        out = _evolve_adaptive(build_generator(config), rho.matrix, duration)
    else:
        raise ValueError(f"unknown method {method!r}")
    result = DensityMatrix(out)
    if validate:
        result.validate()
    return result


def _evolve_adaptive(gen: Generator, matrix: np.ndarray, duration: float) -> np.ndarray:
    d = matrix.shape[0]
    lmat = gen.matrix

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        return lmat @ y

    sol = solve_ivp(
        rhs,
        (0.0, duration),
        np.asarray(matrix, dtype=complex).reshape(-1),
        method="RK45",
        rtol=1e-8,
        atol=1e-10,
    )
    if not sol.success:
        raise IntegrationError(f"adaptive integration failed: {sol.message}")
    return sol.y[:, -1].reshape(d, d)


# ---------------------------------------------------------------------------
# Full-Hilbert brute force (oracle path, N <= 8)
# ---------------------------------------------------------------------------

_SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]])   # |1><0| in (|0>, |1>) order
_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])
_SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]])     # excited site carries +1


def _site_operator(op: np.ndarray, site: int, n_total: int) -> np.ndarray:
    """Embed a single-site operator; site k occupies bit k-1 of the basis index."""
    low = np.eye(2 ** (site - 1))
    high = np.eye(2 ** (n_total - site))
    return np.kron(high, np.kron(op, low))


@lru_cache(maxsize=32)
def _full_operators(config: ChainConfig, z_sign: float):
    n = config.n_total
    if n > ORACLE_MAX_SPINS:
        raise ValueError(f"full-Hilbert oracle limited to N <= {ORACLE_MAX_SPINS}, got {n}")
    dim = 2 ** n
    h = np.zeros((dim, dim))
    for m in range(1, n):
        j = config.j_boundary if m in (1, n - 1) else config.j_channel
        sp = _site_operator(_SIGMA_PLUS, m, n)
        sm = _site_operator(_SIGMA_MINUS, m, n)
        sp1 = _site_operator(_SIGMA_PLUS, m + 1, n)
        sm1 = _site_operator(_SIGMA_MINUS, m + 1, n)
        h += j * (sp @ sm1 + sm @ sp1)
    z_ops = tuple(
        z_sign * _site_operator(_SIGMA_Z, k, n) for k in config.dephasing_sites
    )
    for op in z_ops:
        op.setflags(write=False)
    h.setflags(write=False)
    return h, z_ops


def oracle_evolve_full(
    config: ChainConfig,
    rho_full: np.ndarray,
    duration: float,
    z_sign: float = 1.0,
) -> np.ndarray:
    """Lindblad evolution with dense 2^N spin operators, no sector assumption.

    ``z_sign`` flips the sigma^z eigenvalue convention; physical results must
    not depend on it (the dissipator involves only products of two sigma^z).
    """
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    h, z_ops = _full_operators(config, float(z_sign))
    dim = h.shape[0]
    rho0 = np.asarray(rho_full, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ValueError(f"expected shape {(dim, dim)}, got {rho0.shape}")
    if duration == 0.0:
        return rho0.copy()
    gamma = config.gamma

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(dim, dim)
        drho = -1j * (h @ rho - rho @ h)
        if gamma > 0:
            for z in z_ops:
                drho += gamma * (z @ rho @ z - rho)
        return drho.reshape(-1)

    sol = solve_ivp(
        rhs,
        (0.0, duration),
        rho0.reshape(-1),
        method="RK45",
        rtol=1e-9,
        atol=1e-11,
    )
    if not sol.success:
        raise IntegrationError(f"full-Hilbert integration failed: {sol.message}")
    return sol.y[:, -1].reshape(dim, dim)


def _sector_embedding_indices(n_total: int) -> np.ndarray:
    """Full-space basis index of each sector basis state [vac, 1, ..., N]."""
    return np.array([0] + [2 ** (m - 1) for m in range(1, n_total + 1)])


def sector_to_full(matrix: np.ndarray, n_total: int) -> np.ndarray:
    """Embed a sector matrix into the 2^N space (all other elements zero)."""
    idx = _sector_embedding_indices(n_total)
    full = np.zeros((2 ** n_total, 2 ** n_total), dtype=complex)
    full[np.ix_(idx, idx)] = matrix
    return full


def full_to_sector(rho_full: np.ndarray, n_total: int) -> np.ndarray:
    """Project a full-space matrix onto the sector basis."""
    idx = _sector_embedding_indices(n_total)
    return np.asarray(rho_full, dtype=complex)[np.ix_(idx, idx)]


def out_of_sector_mass(rho_full: np.ndarray, n_total: int) -> float:
    """Total absolute weight outside the zero/one-excitation block."""
    idx = _sector_embedding_indices(n_total)
    marked = np.zeros(rho_full.shape[0], dtype=bool)
    marked[idx] = True
    mask = np.outer(marked, marked)
    return float(np.abs(np.where(mask, 0.0, rho_full)).sum())


def oracle_receiver_state_full(rho_full: np.ndarray) -> np.ndarray:
    """Brute-force partial trace keeping only the receiver (highest bit)."""
    dim = rho_full.shape[0]
    half = dim // 2
    r = np.asarray(rho_full, dtype=complex).reshape(2, half, 2, half)
    return np.einsum("arbr->ab", r)
