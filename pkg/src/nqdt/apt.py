"""First-order adiabatic perturbation theory for piecewise-linear schedules.

For a schedule ``s(t)`` made of linear segments the first-order amplitude of
leaving the ground state for level ``m`` is

    c_m(T) = - integral_0^T <m|dH/ds|0> / (E0 - Em) * ds/dt * exp(i phi(t)) dt,
    phi(t) = integral_0^t (Em - E0) dt',

evaluated here with exact eigenpairs at trapezoid nodes (hbar = 1). An
independent unitary propagator (fourth-order Magnus) serves as the oracle.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .control import OptimizedSchedule
from .errors import AccuracyError, CapacityError, InputError, SingularityError
from .exact import DENSE_LIMIT, exact_spectrum
from .hamiltonian import AnnealCoefficients, IsingProblem, build_operator, d_operator_ds

DEFAULT_QUAD = 64
GAP_GUARD = 1e-12
MAX_PHASE_STEP = 0.25


@dataclass
class AptResult:
    level: int
    amplitude: complex
    segment_amplitudes: list[complex] = field(default_factory=list)

    @property
    def amplitude_re(self) -> float:
        return float(self.amplitude.real)

    @property
    def amplitude_im(self) -> float:
        return float(self.amplitude.imag)

    @property
    def probability(self) -> float:
        return self.amplitude_re ** 2 + self.amplitude_im ** 2

    @property
    def segments(self) -> list[float]:
        return [abs(c) for c in self.segment_amplitudes]

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "amplitude": [self.amplitude_re, self.amplitude_im],
            "probability": self.probability,
            "segments": self.segments,
        }


@dataclass
class NodeData:
    """Eigen-data along the quadrature nodes of one schedule."""

    t: np.ndarray
    s: np.ndarray
    segment: np.ndarray  # segment index of each node
    rate: np.ndarray     # ds/dt on that segment
    energies: np.ndarray  # (nodes, levels)
    vectors: np.ndarray   # (nodes, dim, levels)


def _check_dense(p: IsingProblem):
    if 2 ** p.n > DENSE_LIMIT:
        raise CapacityError(f"n={p.n} exceeds the dense diagonalization limit")


def quadrature_nodes(schedule: OptimizedSchedule, quad_points_per_segment: int = DEFAULT_QUAD):
    """``(t, s, segment, rate)`` for ``quad`` equally spaced nodes per segment (endpoints included)."""
    if quad_points_per_segment < 2:
        raise InputError("need at least 2 quadrature points per segment")
    ts, ss, seg, rate = [], [], [], []
    for i, ((ta, sa), (tb, sb)) in enumerate(zip(schedule.points[:-1], schedule.points[1:])):
        tk = np.linspace(ta, tb, quad_points_per_segment)
        sk = np.clip(np.linspace(sa, sb, quad_points_per_segment), 0.0, 1.0)
        ts.append(tk)
        ss.append(sk)
        seg.append(np.full(quad_points_per_segment, i))
        rate.append(np.full(quad_points_per_segment, (sb - sa) / (tb - ta)))
    return np.concatenate(ts), np.concatenate(ss), np.concatenate(seg), np.concatenate(rate)


def node_eigenpairs(p: IsingProblem, ac: AnnealCoefficients, schedule: OptimizedSchedule, levels: int,
                    quad_points_per_segment: int = DEFAULT_QUAD) -> NodeData:
    _check_dense(p)
    if not 1 <= levels < 2 ** p.n:
        raise InputError(f"level index must lie in [1, {2 ** p.n - 1}]")
    t, s, seg, rate = quadrature_nodes(schedule, quad_points_per_segment)
    cache: dict[float, tuple] = {}
    E = np.empty((t.size, levels + 1))
    V = np.empty((t.size, 2 ** p.n, levels + 1))
    for k, sk in enumerate(s):
        if sk not in cache:
            spec = exact_spectrum(build_operator(p, ac, float(sk)), k=levels + 1)
            cache[sk] = (spec.eigenvalues[: levels + 1], spec.eigenvectors)
        E[k], V[k] = cache[sk]
    return NodeData(t, s, seg, rate, E, V)


def align_gauge(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so each node overlaps positively with the previous node."""
    out = vectors.copy()
    for k in range(1, out.shape[0]):
        overlaps = np.einsum("ij,ij->j", out[k - 1], out[k])
        out[k] *= np.where(overlaps < 0, -1.0, 1.0)
    return out


def first_order_amplitude(p: IsingProblem, ac: AnnealCoefficients, nodes: NodeData, m: int) -> AptResult:
    """Trapezoid evaluation of the first-order amplitude on gauge-aligned node data."""
    if not 1 <= m < nodes.energies.shape[1]:
        raise InputError(f"level {m} not available in node data")
    vecs = align_gauge(nodes.vectors)
    e0, em = nodes.energies[:, 0], nodes.energies[:, m]
    dE = e0 - em
    bad = np.abs(dE) < GAP_GUARD * np.maximum(1.0, np.abs(e0))
    if bad.any():
        k = int(np.argmax(bad))
        raise SingularityError(f"levels 0 and {m} are degenerate at s={nodes.s[k]:.6g} (t={nodes.t[k]:.6g})")
    mel = np.empty(nodes.t.size)
    for k, sk in enumerate(nodes.s):
        dH = d_operator_ds(p, ac, float(sk))
        mel[k] = vecs[k, :, m] @ dH.matvec(vecs[k, :, 0])

    # dynamic phase: trapezoid over all nodes; duplicated boundary nodes add zero
    phase_steps = 0.5 * (-dE[1:] - dE[:-1]) * np.diff(nodes.t)
    if np.max(np.abs(phase_steps)) > MAX_PHASE_STEP:
        warnings.warn(
            f"dynamic phase advances up to {np.max(np.abs(phase_steps)):.3g} rad between nodes; "
            "raise quad_points_per_segment for a trustworthy amplitude",
            RuntimeWarning,
            stacklevel=2,
        )
    phase = np.concatenate([[0.0], np.cumsum(phase_steps)])
    f = mel / dE * nodes.rate * np.exp(1j * phase)

    contributions = []
    for i in range(int(nodes.segment.max()) + 1):
        idx = np.flatnonzero(nodes.segment == i)
        dt = np.diff(nodes.t[idx])
        contributions.append(complex(np.sum(0.5 * (f[idx][1:] + f[idx][:-1]) * dt)))
    amplitude = -sum(contributions)
    return AptResult(m, complex(amplitude), [-c for c in contributions])


def apt_transition(p: IsingProblem, ac: AnnealCoefficients, schedule: OptimizedSchedule, m: int = 1,
                   quad_points_per_segment: int = DEFAULT_QUAD) -> AptResult:
    """First-order estimate of the ground-to-level-``m`` transition amplitude."""
    nodes = node_eigenpairs(p, ac, schedule, m, quad_points_per_segment)
    return first_order_amplitude(p, ac, nodes, m)


def apt_levels(p, ac, schedule, levels: int, quad_points_per_segment: int = DEFAULT_QUAD) -> list[AptResult]:
    """Results for ``m = 1 .. levels`` sharing one set of node eigenpairs."""
    nodes = node_eigenpairs(p, ac, schedule, levels, quad_points_per_segment)
    return [first_order_amplitude(p, ac, nodes, m) for m in range(1, levels + 1)]


# -- unitary oracle -----------------------------------------------------------

_GAUSS = math.sqrt(3.0) / 6.0


def _magnus_step(H1: np.ndarray, H2: np.ndarray, h: float) -> np.ndarray:
    """Exact exponential of the two-point fourth-order Magnus generator."""
    comm = H2 @ H1 - H1 @ H2
    K = 0.5 * h * (H1 + H2) - 1j * (math.sqrt(3.0) * h * h / 12.0) * comm
    w, V = np.linalg.eigh(K)
    return (V * np.exp(-1j * w)) @ V.conj().T


def _propagate(p, ac, schedule, dt, psi):
    def H_at(s):
        return build_operator(p, ac, float(min(max(s, 0.0), 1.0))).to_dense()

    for (ta, sa), (tb, sb) in zip(schedule.points[:-1], schedule.points[1:]):
        steps = max(1, math.ceil((tb - ta) / dt - 1e-9))
        h = (tb - ta) / steps
        rate = (sb - sa) / (tb - ta)
        for j in range(steps):
            mid = ta + (j + 0.5) * h
            s1 = sa + rate * (mid - _GAUSS * h - ta)
            s2 = sa + rate * (mid + _GAUSS * h - ta)
            psi = _magnus_step(H_at(s1), H_at(s2), h) @ psi
    return psi


def exact_propagation(p: IsingProblem, ac: AnnealCoefficients, schedule: OptimizedSchedule,
                      dt: float = 0.02, check: bool = True) -> np.ndarray:
    """Populations ``|<m(T)|psi(T)>|^2`` of every instantaneous eigenstate at the end.

    ``psi`` starts in the ground state of ``H(0)``. With ``check`` the run is
    repeated at ``dt / 2`` and an :class:`AccuracyError` is raised when any
    population moves by more than 1 % (plus 1e-10 absolute).
    """
    _check_dense(p)
    if not dt > 0:
        raise InputError("dt must be positive")
    start = exact_spectrum(build_operator(p, ac, 0.0)).eigenvectors[:, 0].astype(complex)
    final = exact_spectrum(build_operator(p, ac, 1.0)).eigenvectors

    def populations(step):
        psi = _propagate(p, ac, schedule, step, start)
        return np.abs(final.T @ psi) ** 2

    coarse = populations(dt)
    if not check:
        return coarse
    fine = populations(dt / 2)
    if np.any(np.abs(fine - coarse) > 0.01 * fine + 1e-10):
        worst = float(np.max(np.abs(fine - coarse)))
        raise AccuracyError(f"step halving moved a population by {worst:.3g}; reduce dt={dt}")
    return fine


def save_results(results, path, oracle=None) -> None:
    doc = {"results": [r.to_dict() for r in results]}
    if len(results) == 1:
        doc.update(results[0].to_dict())
    if oracle is not None:
        doc["oracle"] = {"probabilities": [float(x) for x in oracle]}
    Path(path).write_text(json.dumps(doc))
