"""Variational training of the MLP wavefunction by full enumeration.

The loss is the Rayleigh quotient ``<psi|H|psi> / <psi|psi>``, optionally
plus normalized overlap penalties against lower states. Its gradient is
accumulated in reverse mode over all 2**n configurations by the kernels in
``nqdt.kernels``; RMSprop applies the updates. A run stops when the
population standard deviation of the last ``window`` energies falls below
``tol`` (and, for penalty training, when the summed overlap is small).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._basis import spins_to_index
from .ansatz import StateVector, WavefunctionAnsatz, init_ansatz
from .errors import DegenerateStateError, InputError, PromotionWarning, SingularityError
from .hamiltonian import HamiltonianOperator, brauer_shift

log = logging.getLogger(__name__)

PROMOTION_CHECK_LIMIT = 1024


@dataclass
class TrainingConfig:
    learning_rate: float = 0.003
    max_epochs: int = 10000
    window: int = 200
    tol: float = 1e-4
    rms_decay: float = 0.9
    rms_epsilon: float = 1e-8
    seed: int = 0
    orthogonality_tol: float = 1e-3

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InputError("learning_rate must be positive")
        if self.window < 2:
            raise InputError("window must be >= 2")
        if not self.tol > 0:
            raise InputError("tol must be positive")
        if self.max_epochs < 1:
            raise InputError("max_epochs must be >= 1")
        if not 0.0 <= self.rms_decay < 1.0:
            raise InputError("rms_decay must lie in [0, 1)")


@dataclass
class TrainingReport:
    final_energy: float
    epochs_run: int
    energy_trace: np.ndarray = field(repr=False)
    converged: bool
    stop_reason: str
    overlap: float | None = None
    restarted: bool = False
    promotion_ok: bool | None = None

    def to_dict(self, trace_points: int = 0) -> dict:
        d = {
            "final_energy": self.final_energy,
            "epochs_run": self.epochs_run,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
        }
        if self.overlap is not None:
            d["overlap"] = self.overlap
        if trace_points:
            step = max(1, math.ceil(self.epochs_run / trace_points))
            d["trace"] = self.energy_trace[::step].tolist()
        return d


def stop_check(trace, window: int, tol: float) -> bool:
    """True iff at least ``window`` entries exist and their population std is < ``tol``."""
    if len(trace) < window:
        return False
    return float(np.std(np.asarray(trace[-window:], dtype=float))) < tol


def _amplitudes(state) -> np.ndarray:
    if isinstance(state, WavefunctionAnsatz):
        return state.full_state().amps
    if isinstance(state, StateVector):
        return state.amps
    return np.asarray(state, dtype=float)


def local_energies(state, H: HamiltonianOperator) -> np.ndarray:
    """``(H psi)(x) / psi(x)`` for every x; NaN where ``psi(x) == 0``."""
    psi = _amplitudes(state)
    hpsi = H.matvec(psi)
    out = np.full_like(psi, np.nan)
    nz = psi != 0.0
    out[nz] = hpsi[nz] / psi[nz]
    return out


def local_energy(a: WavefunctionAnsatz, x, H: HamiltonianOperator) -> float:
    """Local energy of one configuration (spins in +-1 or a basis index)."""
    index = int(x) if np.isscalar(x) else spins_to_index(x)
    psi = a.amplitudes()
    if psi[index] == 0.0:
        raise SingularityError(f"zero amplitude at configuration {index}")
    return float(H.matvec(psi)[index] / psi[index])


def energy_expectation(a, H: HamiltonianOperator) -> float:
    """Born-weighted mean of the local energies (zero-amplitude configurations weigh 0)."""
    psi = _amplitudes(a)
    Z = float(psi @ psi)
    if not Z > kernels.python.NORM_FLOOR:
        raise DegenerateStateError("state has zero norm")
    eloc = local_energies(psi, H)
    nz = psi != 0.0
    return float(np.sum(psi[nz] ** 2 * eloc[nz]) / Z)


def _penalty_arrays(lower_states, lambdas, dim):
    states = np.zeros((len(lower_states), dim))
    for k, s in enumerate(lower_states):
        v = _amplitudes(s)
        norm = float(np.linalg.norm(v))
        if not norm > 0.0:
            raise DegenerateStateError("lower state has zero norm")
        states[k] = v / norm
    return np.asarray(lambdas, dtype=float), states


def gradient(a: WavefunctionAnsatz, H: HamiltonianOperator, lower_states=(), lambdas=()) -> np.ndarray:
    """Exact gradient of the (penalized) Rayleigh quotient w.r.t. ``a.theta``."""
    diag, tw, r1d, r1s = H.kernel_args()
    lams, pstates = _penalty_arrays(lower_states, lambdas, H.dim)
    grad = np.empty(a.n_params)
    energy, *_ = kernels.value_and_grad(a.theta, a.n_in, a.hidden, diag, tw, r1d, r1s, lams, pstates, grad)
    if not math.isfinite(energy):
        raise DegenerateStateError("state has zero norm")
    return grad


def _optimize(H, a0, cfg, lams, pstates):
    diag, tw, r1d, r1s = H.kernel_args()
    penalized = len(lams) > 0
    restarted = False
    start = a0
    while True:
        theta = start.theta.copy()
        grad = np.empty_like(theta)
        sq = np.zeros_like(theta)
        trace = np.empty(cfg.max_epochs)
        converged = degenerate = False
        overlap = None
        count = 0
        for epoch in range(cfg.max_epochs):
            energy, _, ov, _ = kernels.value_and_grad(
                theta, start.n_in, start.hidden, diag, tw, r1d, r1s, lams, pstates, grad
            )
            if not math.isfinite(energy):
                degenerate = True
                break
            trace[epoch] = energy
            count = epoch + 1
            overlap = ov if penalized else None
            if count >= cfg.window and trace[count - cfg.window:count].std() < cfg.tol:
                if not penalized or ov < cfg.orthogonality_tol:
                    converged = True
                    break
            if count < cfg.max_epochs:
                kernels.rmsprop_step(theta, grad, sq, cfg.learning_rate, cfg.rms_decay, cfg.rms_epsilon)
        if not degenerate:
            break
        if restarted:
            raise DegenerateStateError("wavefunction collapsed to zero twice")
        log.warning("degenerate wavefunction at epoch %d; restarting from a re-seeded init", count)
        restarted = True
        start = init_ansatz(a0.n_in, a0.hidden, cfg.seed + 1)

    if converged:
        reason = "orthogonality+variance" if penalized else "variance"
    else:
        reason = "max_epochs"
    report = TrainingReport(
        final_energy=float(trace[count - 1]),
        epochs_run=count,
        energy_trace=trace[:count].copy(),
        converged=converged,
        stop_reason=reason,
        overlap=overlap,
        restarted=restarted,
    )
    return WavefunctionAnsatz(a0.n_in, a0.hidden, theta), report


def train_ground(H: HamiltonianOperator, a0: WavefunctionAnsatz, cfg: TrainingConfig | None = None):
    """Minimize the Rayleigh quotient of ``H``. Returns ``(ansatz, report)``."""
    cfg = cfg or TrainingConfig()
    _check_width(H, a0)
    return _optimize(H, a0, cfg, np.empty(0), np.empty((0, H.dim)))


def promotion_succeeded(H: HamiltonianOperator, psi0, delta: float) -> bool:
    """ED check that shifting ``psi0`` by ``delta`` hands the ground state to another level."""
    from .exact import exact_spectrum

    u = _amplitudes(psi0)
    u = u / np.linalg.norm(u)
    ground = exact_spectrum(brauer_shift(H, u, delta), k=1).eigenvectors[:, 0]
    return float(ground @ u) ** 2 < 0.5


def train_excited_brauer(H, psi0, a0, cfg=None, delta=None, check_promotion=True):
    """First excited state as the ground state of ``H + delta |psi0><psi0|``.

    ``delta`` defaults to ``|E[psi0]|``. At desk scale the promotion is checked
    against exact diagonalization and a :class:`PromotionWarning` is issued
    when the shifted state is still the lowest one.
    """
    cfg = cfg or TrainingConfig()
    _check_width(H, a0)
    amps = _amplitudes(psi0)
    if delta is None:
        delta = abs(energy_expectation(amps, H))
    shifted = brauer_shift(H, amps, delta)
    promoted = None
    if check_promotion and H.dim <= PROMOTION_CHECK_LIMIT:
        promoted = promotion_succeeded(H, amps, delta)
        if not promoted:
            warnings.warn(
                f"shift delta={delta:.6g} did not promote the first excited state; "
                "the trained state will not approximate it",
                PromotionWarning,
                stacklevel=2,
            )
    a, report = train_ground(shifted, a0, cfg)
    report.promotion_ok = promoted
    return a, report


def train_excited_penalty(H, lower_states, lambdas, a0, cfg=None):
    """Minimize ``E[psi] + sum_k lambda_k * overlap_k`` with normalized squared overlaps.

    The reported energy is ``E[psi]`` under ``H`` (penalties excluded).
    """
    cfg = cfg or TrainingConfig()
    _check_width(H, a0)
    if len(lower_states) == 0 or len(lower_states) != len(lambdas):
        raise InputError("need one positive lambda per lower state")
    if any(not lam > 0 for lam in lambdas):
        raise InputError("penalty coefficients must be positive")
    lams, pstates = _penalty_arrays(lower_states, lambdas, H.dim)
    return _optimize(H, a0, cfg, lams, pstates)


def orthogonality_measure(state, lower_states) -> float:
    """Sum of normalized squared overlaps with each lower state."""
    psi = _amplitudes(state)
    zp = float(psi @ psi)
    total = 0.0
    for s in lower_states:
        q = _amplitudes(s)
        total += float(q @ psi) ** 2 / (float(q @ q) * zp)
    return total


def _check_width(H, a):
    if a.n_in != H.n:
        raise InputError(f"network expects {a.n_in} spins but the Hamiltonian has {H.n}")
