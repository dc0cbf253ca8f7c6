"""Dense exact diagonalization and relative-error bookkeeping.

The symmetric eigensolver is a Householder tridiagonalization followed by
implicit-shift QL (the EISPACK tred2/tql2 pair), run through
``nqdt.kernels``. Matrices larger than ``SELF_SOLVER_LIMIT`` go to LAPACK
because the scalar reduction is cache-unfriendly at that size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CapacityError, ConvergenceError, InputError
from .hamiltonian import HamiltonianOperator

DENSE_LIMIT = 4096
SELF_SOLVER_LIMIT = 1024
ABS_GUARD = 1e-12


def eigh_symmetric(A, method: str = "auto"):
    """Eigenvalues (ascending) and orthonormal eigenvector columns of symmetric ``A``.

    ``method`` is ``"householder"``, ``"lapack"`` or ``"auto"``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    N = A.shape[0]
    if method == "auto":
        method = "householder" if N <= SELF_SOLVER_LIMIT else "lapack"
    if method == "lapack":
        return np.linalg.eigh(A)
    if method != "householder":
        raise InputError(f"unknown eigensolver {method!r}")
    V = np.array(0.5 * (A + A.T), order="C")
    d, e = kernels.tred2(V)
    if not kernels.tql2(d, e, V):
        raise ConvergenceError("QL iteration did not converge")
    order = np.argsort(d, kind="stable")
    return d[order], V[:, order]


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])


def exact_spectrum(H, k: int | None = None, limit: int = DENSE_LIMIT, method: str = "auto") -> Spectrum:
    """Full spectrum of ``H`` (operator or dense array); keeps the lowest ``k`` vectors."""
    if isinstance(H, HamiltonianOperator):
        if H.dim > limit:
            raise CapacityError(f"dimension {H.dim} exceeds the dense limit {limit}")
        M = H.to_dense()
    else:
        M = np.asarray(H, dtype=float)
        if M.shape[0] > limit:
            raise CapacityError(f"dimension {M.shape[0]} exceeds the dense limit {limit}")
    w, V = eigh_symmetric(M, method)
    if k is not None:
        V = V[:, :k]
    return Spectrum(w, V)


def relative_error(e_model: float, e_exact: float, *, with_flag: bool = False):
    """Percent error ``100 |model - exact| / |exact|``.

    When ``|exact| < 1e-12`` the plain absolute error is returned instead;
    ``with_flag=True`` returns ``(value, is_absolute)``.
    """
    diff = abs(float(e_model) - float(e_exact))
    if abs(e_exact) < ABS_GUARD:
        return (diff, True) if with_flag else diff
    value = 100.0 * diff / abs(float(e_exact))
    return (value, False) if with_flag else value


@dataclass(frozen=True)
class ErrorStats:
    avg: float
    min: float
    max: float
    std: float
    count: int

    def as_row(self) -> dict:
        return {"avg": self.avg, "min": self.min, "max": self.max, "std": self.std}


def error_stats(errors) -> ErrorStats:
    """Population statistics of a list of percent errors (NaNs skipped)."""
    arr = np.asarray([e for e in errors if e is not None], dtype=float)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        raise InputError("no errors to summarize")
    return ErrorStats(
        avg=float(arr.mean()),
        min=float(arr.min()),
        max=float(arr.max()),
        std=float(arr.std()),
        count=int(arr.size),
    )


def residuals(M, spectrum: Spectrum) -> np.ndarray:
    """``||M v - lam v||`` for every retained pair."""
    V = spectrum.eigenvectors
    lam = spectrum.eigenvalues[: V.shape[1]]
    return np.linalg.norm(np.asarray(M) @ V - V * lam, axis=0)

