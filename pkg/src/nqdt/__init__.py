"""Neural-network digital twin for quantum annealing schedules."""
from __future__ import annotations

import os

# NQDT_THREADS caps BLAS/OpenMP pools; it must be applied before numpy loads.
if os.environ.get("NQDT_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["NQDT_THREADS"])

from .ansatz import StateVector, WavefunctionAnsatz, init_ansatz  # noqa: E402
from .errors import (  # noqa: E402
    AccuracyError,
    CapacityError,
    ConvergenceError,
    DegenerateStateError,
    InputError,
    NQDTError,
    PromotionWarning,
    SingularityError,
)
from .hamiltonian import (  # noqa: E402
    AnnealCoefficients,
    HamiltonianOperator,
    IsingProblem,
    brauer_shift,
    build_operator,
    d_operator_ds,
    qubo_to_ising,
    random_instance,
    tfim_instance,
)
from .training import TrainingConfig, TrainingReport, train_excited_brauer, train_excited_penalty, train_ground  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "AnnealCoefficients", "CapacityError", "ConvergenceError",
    "DegenerateStateError", "HamiltonianOperator", "InputError", "IsingProblem", "NQDTError",
    "PromotionWarning", "SingularityError", "StateVector", "TrainingConfig", "TrainingReport",
    "WavefunctionAnsatz", "brauer_shift", "build_operator", "d_operator_ds", "init_ansatz",
    "qubo_to_ising", "random_instance", "tfim_instance", "train_excited_brauer",
    "train_excited_penalty", "train_ground",
]
