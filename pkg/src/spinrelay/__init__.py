"""Quantum state transfer through a dephasing spin channel with measurement assistance."""

from .core import (
    ChainConfig,
    DensityMatrix,
    ExcitationBasis,
    InvariantViolation,
    SenderState,
    initial_state,
    receiver_reduced_state,
)
from .dynamics import (
    Generator,
    IntegrationError,
    Propagator,
    build_generator,
    build_hamiltonian,
    evolve,
    make_propagator,
    oracle_evolve_full,
)
from .fidelity import (
    FidelityTrace,
    HaarEstimate,
    NoPeakError,
    PeakResult,
    find_first_peak,
    haar_average_mc,
    transfer_fidelities,
)
from .protocol import (
    MeasurementSchedule,
    ProtocolResult,
    ZeroProbabilityError,
    channel_projector_apply,
    protocol_time_grid,
    run_protocol,
    success_probability_trace,
)
from .analytics import (
    EffectiveModel,
    FourSpinSolution,
    effective_average_fidelity,
    effective_model,
    four_spin_p1,
    four_spin_p1_limit,
    four_spin_solution,
)
from .experiments import (
    SweepRecord,
    sweep_gamma,
    sweep_length,
    sweep_tau,
    trace_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ChainConfig",
    "DensityMatrix",
    "ExcitationBasis",
    "InvariantViolation",
    "SenderState",
    "initial_state",
    "receiver_reduced_state",
    "Generator",
    "IntegrationError",
    "Propagator",
    "build_generator",
    "build_hamiltonian",
    "evolve",
    "make_propagator",
    "oracle_evolve_full",
    "FidelityTrace",
    "HaarEstimate",
    "NoPeakError",
    "PeakResult",
    "find_first_peak",
    "haar_average_mc",
    "transfer_fidelities",
    "MeasurementSchedule",
    "ProtocolResult",
    "ZeroProbabilityError",
    "channel_projector_apply",
    "protocol_time_grid",
    "run_protocol",
    "success_probability_trace",
    "EffectiveModel",
    "FourSpinSolution",
    "effective_average_fidelity",
    "effective_model",
    "four_spin_p1",
    "four_spin_p1_limit",
    "four_spin_solution",
    "SweepRecord",
    "sweep_gamma",
    "sweep_length",
    "sweep_tau",
    "trace_experiment",
]
