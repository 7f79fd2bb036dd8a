"""Closed-form reference results: effective two-qubit model, exact 4-spin chain.

These expressions act as oracles for the numerical paths: the weak-coupling
effective model predicts the transfer time and the dephasing-free fidelity
curve for any even N, and the 4-spin chain is small enough to diagonalise by
hand, giving the exact single-measurement success probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChainConfig

__all__ = [
    "EffectiveModel",
    "FourSpinSolution",
    "effective_model",
    "effective_average_fidelity",
    "four_spin_solution",
    "four_spin_p1",
    "four_spin_p1_limit",
]


@dataclass(frozen=True)
class EffectiveModel:
    """Second-order sender-receiver coupling mediated by the far-detuned channel."""

    j_eff: float          # signed effective coupling (-1)^(N/2) J'^2 / J
    t_m_eff: float        # pi / (2 |j_eff|), transfer time of the two-qubit model
    validity_ratio: float  # J' N / (pi J); the elimination is trustworthy when << 1

    @property
    def weak(self) -> bool:
        return self.validity_ratio >= 0.5


def effective_model(config: ChainConfig) -> EffectiveModel:
    """Effective coupling, transfer time and validity ratio for the config."""
    sign = -1.0 if (config.n_total // 2) % 2 else 1.0
    j_eff = sign * config.j_boundary**2 / config.j_channel
    return EffectiveModel(
        j_eff=j_eff,
        t_m_eff=math.pi / (2.0 * abs(j_eff)),
        validity_ratio=config.j_boundary * config.n_total / (math.pi * config.j_channel),
    )


def effective_average_fidelity(j_eff: float, t) -> np.ndarray:
    """Haar-averaged fidelity of the two-qubit effective dynamics.

    1/3 + (1 + |sin(j_eff * t)|)^2 / 6, which starts at 1/2 and first reaches
    its maximum of 1 at t = pi / (2 |j_eff|).
    """
    s = np.abs(np.sin(j_eff * np.asarray(t, dtype=float)))
    return 1.0 / 3.0 + (1.0 + s) ** 2 / 6.0


@dataclass(frozen=True)
class FourSpinSolution:
    """Exact single-excitation eigensystem of the 4-spin chain."""

    alpha: float
    eigenvalues: np.ndarray   # (4,) in the order matching eigenvectors
    eigenvectors: np.ndarray  # (4, 4); column i is the i-th eigenvector in site basis

    def __post_init__(self) -> None:
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)


def four_spin_solution(config: ChainConfig) -> FourSpinSolution:
    """Analytic eigenpairs of the N=4 site block.

    alpha = (J + sqrt(J^2 + 4 J'^2)) / (2 J'); the spectrum is
    {-alpha J', J - alpha J', -(J - alpha J'), alpha J'} with eigenvectors
    (1, -a, a, -1), (a, -1, -1, a), (a, 1, -1, -a), (1, a, a, 1) up to the
    common normalisation 1/sqrt(2 (alpha^2 + 1)).
    """
    if config.n_total != 4:
        raise ValueError(f"closed-form solution requires N=4, got {config.n_total}")
    j = config.j_channel
    jb = config.j_boundary
    alpha = (j + math.sqrt(j * j + 4.0 * jb * jb)) / (2.0 * jb)
    norm = 1.0 / math.sqrt(2.0 * (alpha * alpha + 1.0))
    vecs = norm * np.array(
        [
            [1.0, -alpha, alpha, -1.0],
            [alpha, -1.0, -1.0, alpha],
            [alpha, 1.0, -1.0, -alpha],
            [1.0, alpha, alpha, 1.0],
        ]
    ).T
    vals = np.array([-alpha * jb, j - alpha * jb, -(j - alpha * jb), alpha * jb])
    return FourSpinSolution(alpha=alpha, eigenvalues=vals, eigenvectors=vecs)


def four_spin_p1(config: ChainConfig, t) -> np.ndarray:
    """Exact probability that the first channel measurement succeeds (N=4).

    Starting from the excitation on site 1 and evolving for time t,
    p = (1 + alpha^4 + 2 alpha^2 cos[(J - 2 alpha J') t]) / (alpha^2 + 1)^2.
    Valid for every J'.
    """
    sol = four_spin_solution(config)
    a2 = sol.alpha**2
    omega = config.j_channel - 2.0 * sol.alpha * config.j_boundary
    t = np.asarray(t, dtype=float)
    return (1.0 + a2 * a2 + 2.0 * a2 * np.cos(omega * t)) / (a2 + 1.0) ** 2


def four_spin_p1_limit(config: ChainConfig, t) -> np.ndarray:
    """Leading weak-coupling form of the same probability.

    1 - (4 J'^2 / J^2) sin^2(J t / 2): always close to 1, exactly 1 whenever
    sin(J t / 2) = 0, with minimum 1 - 4 (J'/J)^2.
    """
    if config.n_total != 4:
        raise ValueError(f"closed-form limit requires N=4, got {config.n_total}")
    ratio2 = (config.j_boundary / config.j_channel) ** 2
    t = np.asarray(t, dtype=float)
    return 1.0 - 4.0 * ratio2 * np.sin(config.j_channel * t / 2.0) ** 2
