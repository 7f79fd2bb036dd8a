"""Cross-check suite wiring the independent verification paths together.

Each check compares a production path against an independent one (closed
form, brute-force full-Hilbert evolution, Monte Carlo) and reports the worst
deviation with its tolerance.  The CLI ``oracle`` subcommand prints the
table; the suite doubles as a smoke test that the numerics in an installed
environment behave like the one the tolerances were pinned in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analytics import (
    effective_model,
    four_spin_p1,
    four_spin_p1_limit,
    four_spin_solution,
)
from .core import ChainConfig, DensityMatrix, initial_state, receiver_reduced_state, SenderState
from .dynamics import (
    build_hamiltonian,
    evolve,
    full_to_sector,
    make_propagator,
    oracle_evolve_full,
    oracle_receiver_state_full,
    sector_to_full,
)
from .experiments import run_point
from .fidelity import haar_average_mc, transfer_fidelities
from .protocol import success_probability_trace

__all__ = ["CheckResult", "run_all_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def _random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m)


def _check_hamiltonian_eigensystem(rng) -> CheckResult:
    cfg = ChainConfig(n_total=4)
    sol = four_spin_solution(cfg)
    h = build_hamiltonian(cfg)[1:, 1:]
    dev = float(np.max(np.abs(np.sort(np.linalg.eigvalsh(h)) - np.sort(sol.eigenvalues))))
    resid = float(np.max(np.abs(h @ sol.eigenvectors - sol.eigenvectors * sol.eigenvalues)))
    return CheckResult(
        "hamiltonian-eigensystem-n4",
        max(dev, resid),
        1e-10,
        "closed-form eigenpairs vs dense diagonalisation",
    )


def _check_sector_vs_full(rng, n: int, gamma: float, samples: int) -> CheckResult:
    cfg = ChainConfig(n_total=n, gamma=gamma)
    dev = 0.0
    for _ in range(samples):
        m0 = _random_density(rng, n + 1)
        sec = evolve(DensityMatrix(m0), 3.0, cfg).matrix
        full = oracle_evolve_full(cfg, sector_to_full(m0, n), 3.0)
        dev = max(dev, float(np.abs(full_to_sector(full, n) - sec).max()))
    return CheckResult(
        f"sector-vs-full-hilbert-n{n}",
        dev,
        1e-7,
        f"gamma={gamma}, {samples} random states, t=3",
    )


def _check_dephasing_rates(rng) -> CheckResult:
    cfg = ChainConfig(n_total=4, gamma=0.05)
    cases = {(0, 2): 2.0, (2, 3): 4.0, (1, 4): 0.0, (0, 1): 0.0}
    dt = 1e-5
    dev = 0.0
    for (a, b), factor in cases.items():
        m = np.zeros((5, 5), dtype=complex)
        m[a, b] = 1.0
        out = full_to_sector(oracle_evolve_full(cfg, sector_to_full(m, 4), dt), 4)[a, b]
        rate = -math.log(abs(out)) / dt
        dev = max(dev, abs(rate - factor * cfg.gamma))
    return CheckResult(
        "dephasing-rates-vs-oracle",
        dev,
        1e-3,
        "element decay rates extracted from full-Hilbert finite differences",
    )


def _check_projector_probability(rng) -> CheckResult:
    dev = 0.0
    for jb in (0.05, 0.1, 0.3):
        cfg = ChainConfig(n_total=4, j_boundary=jb)
        for t in np.linspace(0.2, 20.0, 40):
            p_sim = success_probability_trace(cfg, float(t), 1)[0]
            dev = max(dev, abs(p_sim - float(four_spin_p1(cfg, t))))
    return CheckResult(
        "measurement-probability-exact-n4",
        dev,
        1e-8,
        "simulated first-measurement probability vs closed form",
    )


def _check_weak_coupling_gap(rng) -> CheckResult:
    cfg = ChainConfig(n_total=4, j_boundary=0.05)
    t = np.linspace(0.0, 20.0, 2001)
    gap = float(np.max(np.abs(four_spin_p1(cfg, t) - four_spin_p1_limit(cfg, t))))
    return CheckResult(
        "weak-coupling-probability-gap",
        gap,
        1e-3,
        "exact vs leading-order success probability at J'/J=0.05",
    )


def _check_haar_mc(rng) -> CheckResult:
    cfg = ChainConfig(n_total=6, gamma=0.02)
    t = 300.0
    trace = transfer_fidelities(cfg, np.array([0.0, t]))
    est = haar_average_mc(cfg, t, n_samples=4000, seed=20240817)
    sigmas = abs(est.mean - float(trace.f_av[-1])) / est.stderr
    return CheckResult(
        "haar-average-mc-vs-closed-form",
        sigmas,
        3.0,
        f"deviation in standard errors (mc {est.mean:.5f} +- {est.stderr:.5f})",
    )


def _check_effective_transfer_time(rng) -> CheckResult:
    cfg = ChainConfig(n_total=12)
    rec = run_point(cfg, 0.0)
    t_ref = effective_model(cfg).t_m_eff
    return CheckResult(
        "effective-transfer-time-n12",
        abs(rec.t_m / t_ref - 1.0),
        0.02,
        f"simulated t_m={rec.t_m:.2f} vs pi/(2 J_eff)={t_ref:.2f}",
    )


def _check_receiver_reduction(rng) -> CheckResult:
    dev = 0.0
    for n in (4, 6):
        for _ in range(20):
            m = _random_density(rng, n + 1)
            direct = receiver_reduced_state(DensityMatrix(m))
            brute = oracle_receiver_state_full(sector_to_full(m, n))
            dev = max(dev, float(np.abs(direct - brute).max()))
    return CheckResult(
        "receiver-reduction-vs-partial-trace",
        dev,
        1e-12,
        "sector reduction vs brute-force 2^N partial trace",
    )


def _check_propagator_semigroup(rng) -> CheckResult:
    cfg = ChainConfig(n_total=6, gamma=0.02)
    p1 = make_propagator(cfg, 1.3).matrix
    p2 = make_propagator(cfg, 2.6).matrix
    dev = float(np.linalg.norm(p1 @ p1 - p2, ord=2))
    return CheckResult(
        "propagator-semigroup",
        dev,
        1e-9,
        "P(t)^2 vs P(2t) in operator norm",
    )


def _check_propagator_trace(rng) -> CheckResult:
    cfg = ChainConfig(n_total=6, gamma=0.02)
    d = cfg.dim
    p = make_propagator(cfg, 2.0).matrix
    trace_vec = np.zeros(d * d)
    trace_vec[np.arange(d) * (d + 1)] = 1.0
    dev = float(np.max(np.abs(trace_vec @ p - trace_vec)))
    return CheckResult(
        "propagator-trace-preservation",
        dev,
        1e-10,
        "trace row vector is a left eigenvector with eigenvalue 1",
    )


def _check_adaptive_vs_expm(rng) -> CheckResult:
    cfg = ChainConfig(n_total=6, gamma=0.02)
    m0 = DensityMatrix(_random_density(rng, 7))
    a = evolve(m0, 5.0, cfg, method="expm").matrix
    b = evolve(m0, 5.0, cfg, method="adaptive").matrix
    return CheckResult(
        "adaptive-vs-exponential-integrator",
        float(np.abs(a - b).max()),
        1e-7,
        "RK45 at atol 1e-10 / rtol 1e-8 vs dense matrix exponential",
    )


def _check_initial_state(rng) -> CheckResult:
    cfg = ChainConfig(n_total=4)
    dev = 0.0
    for theta, phi in ((0.0, 0.0), (math.pi, 0.0), (math.pi / 2, 1.1), (2.0, 4.0)):
        rho = initial_state(cfg, SenderState(theta=theta, phi=phi))
        rho.validate()
        dev = max(dev, abs(rho.purity() - 1.0))
    return CheckResult(
        "initial-state-purity",
        dev,
        1e-12,
        "rank-1 construction for assorted sender states",
    )


_CHECKS: tuple[Callable, ...] = (
    _check_hamiltonian_eigensystem,
    lambda rng: _check_sector_vs_full(rng, 4, 0.05, samples=5),
    lambda rng: _check_sector_vs_full(rng, 6, 0.02, samples=3),
    _check_dephasing_rates,
    _check_projector_probability,
    _check_weak_coupling_gap,
    _check_haar_mc,
    _check_effective_transfer_time,
    _check_receiver_reduction,
    _check_propagator_semigroup,
    _check_propagator_trace,
    _check_adaptive_vs_expm,
    _check_initial_state,
)


def run_all_checks(seed: int = 42) -> list[CheckResult]:
    """Run every cross-check with a fixed seed; deterministic output."""
    rng = np.random.default_rng(seed)
    return [check(rng) for check in _CHECKS]
