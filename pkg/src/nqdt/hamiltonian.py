"""Ising problems, annealing coefficients and the annealing Hamiltonian.

The annealing Hamiltonian on n spins is

    H(s) = -A(s)/2 * sum_i X_i + B(s)/2 * (sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j)

and is represented matrix-free on the 2**n computational basis: a diagonal
(the Ising part), one scalar weight for every single-spin-flip element, and
an optional list of rank-one terms ``delta * u u^T``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from ._basis import flip_table, spin_table
from .errors import InputError

DEFAULT_GAMMA = 3.5
DEFAULT_MU = 1.8
MAX_SPINS = 24


@dataclass(frozen=True)
class IsingProblem:
    """Final (problem) Hamiltonian parameters.

    Parameters
    ----------
    n : int
        Number of spins.
    h : tuple of float
        Local fields, one per spin.
    couplings : tuple of (i, j, value)
        Upper-triangular couplings with ``i < j``.
    offset : float
        Constant energy shift (non-zero after a QUBO reduction).
    seed : int, optional
        Seed the instance was generated from, if any.
    """

    n: int
    h: tuple
    couplings: tuple = ()
    offset: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InputError(f"spin count must be a positive integer, got {self.n!r}")
        if self.n > MAX_SPINS:
            raise InputError(f"at most {MAX_SPINS} spins are supported, got {self.n}")
        h = tuple(float(v) for v in self.h)
        if len(h) != self.n:
            raise InputError(f"expected {self.n} local fields, got {len(h)}")
        if not all(math.isfinite(v) for v in h):
            raise InputError("local fields must be finite")
        seen = set()
        triples = []
        for item in self.couplings:
            i, j, v = int(item[0]), int(item[1]), float(item[2])
            if not 0 <= i < j < self.n:
                raise InputError(f"coupling ({i}, {j}) violates 0 <= i < j < n={self.n}")
            if (i, j) in seen:
                raise InputError(f"duplicate coupling ({i}, {j})")
            if not math.isfinite(v):
                raise InputError(f"coupling ({i}, {j}) is not finite")
            seen.add((i, j))
            triples.append((i, j, v))
        if not math.isfinite(float(self.offset)):
            raise InputError("offset must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "couplings", tuple(sorted(triples)))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def J(self) -> np.ndarray:
        """Dense strictly upper-triangular coupling matrix."""
        J = np.zeros((self.n, self.n))
        for i, j, v in self.couplings:
            J[i, j] = v
        return J

    @cached_property
    def energies(self) -> np.ndarray:
        """Ising energy (without offset) of every basis configuration."""
        X = spin_table(self.n)
        e = X @ np.asarray(self.h)
        for i, j, v in self.couplings:
            e += v * X[:, i] * X[:, j]
        e.flags.writeable = False
        return e

    def energy(self, spins) -> float:
        s = np.asarray(spins, dtype=float)
        total = float(np.dot(self.h, s))
        for i, j, v in self.couplings:
            total += v * s[i] * s[j]
        return total

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "h": list(self.h),
            "J": [[i, j, v] for i, j, v in self.couplings],
            "offset": self.offset,
        }
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IsingProblem":
        try:
            return cls(
                n=d["n"],
                h=d["h"],
                couplings=tuple(tuple(t) for t in d.get("J", [])),
                offset=d.get("offset", 0.0),
                seed=d.get("seed"),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise InputError(f"malformed problem description: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "IsingProblem":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


def qubo_to_ising(Q) -> IsingProblem:
    """Map ``min x^T Q x`` over ``x in {0,1}^n`` to an Ising problem.

    Uses ``x_i = (1 - sigma_i) / 2``, so that for every bitstring
    ``x^T Q x == E_ising(sigma) + offset``. ``Q`` may be symmetric or
    triangular; only its quadratic form matters.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise InputError(f"Q must be square, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise InputError("Q has non-finite entries")
    S = 0.5 * (Q + Q.T)
    n = S.shape[0]
    off = S - np.diag(np.diag(S))
    h = -0.5 * np.diag(S) - 0.5 * off.sum(axis=1)
    # each off-diagonal pair contributes 2*S_ij*x_i*x_j, hence J_ij = S_ij/2
    couplings = tuple(
        (i, j, 0.5 * float(S[i, j])) for i in range(n) for j in range(i + 1, n) if S[i, j] != 0.0
    )
    offset = 0.5 * float(np.trace(S)) + 0.5 * float(np.triu(S, 1).sum())
    return IsingProblem(n=n, h=tuple(h), couplings=couplings, offset=offset)


def random_instance(n: int, seed: int) -> IsingProblem:
    """Random Ising instance with h_i and J_ij (i < j) i.i.d. uniform on [-5, 5]."""
    if n < 1:
        raise InputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    h = rng.uniform(-5.0, 5.0, size=n)
    couplings = tuple(
        (i, j, float(rng.uniform(-5.0, 5.0))) for i in range(n) for j in range(i + 1, n)
    )
    return IsingProblem(n=n, h=tuple(h), couplings=couplings, seed=seed)


def random_qubo(n: int, seed: int) -> np.ndarray:
    """Random symmetric QUBO matrix with upper-triangle entries uniform on [-5, 5]."""
    rng = np.random.default_rng(seed)
    U = np.triu(rng.uniform(-5.0, 5.0, size=(n, n)))
    return U + np.triu(U, 1).T


def tfim_instance(n: int) -> IsingProblem:
    """Open chain: h = 0 and J_{i,i+1} = +1."""
    if n < 2:
        raise InputError("a chain needs at least 2 spins")
    return IsingProblem(n=n, h=(0.0,) * n, couplings=tuple((i, i + 1, 1.0) for i in range(n - 1)))


@dataclass(frozen=True)
class AnnealCoefficients:
    """Annealing functions A(s), B(s).

    Either the parametric family ``A = 2 exp(-gamma s) - 0.06``,
    ``B = 2 s**mu`` or a piecewise-linear table of ``(s, A, B)`` samples.
    Use :meth:`parametric`, :meth:`tabulated` or :meth:`from_csv`.
    """

    kind: str = "parametric"
    gamma: float = DEFAULT_GAMMA
    mu: float = DEFAULT_MU
    table: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "parametric":
            if not (self.gamma > 0 and self.mu > 0):
                raise InputError("gamma and mu must be positive")
        elif self.kind == "tabulated":
            s, A, B = (np.asarray(c, dtype=float) for c in self.table)
            if s.ndim != 1 or len(s) < 2 or not (len(s) == len(A) == len(B)):
                raise InputError("tabulated coefficients need >= 2 rows of (s, A, B)")
            if not (np.all(np.isfinite(s)) and np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
                raise InputError("tabulated coefficients must be finite")
            if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
                raise InputError("tabulated s must increase strictly from 0 to 1")
            if np.any(np.diff(A) > 0):
                raise InputError("tabulated A(s) must be non-increasing")
            if np.any(np.diff(B) < 0):
                raise InputError("tabulated B(s) must be non-decreasing")
            for arr in (s, A, B):
                arr.flags.writeable = False
            object.__setattr__(self, "table", (s, A, B))
        else:
            raise InputError(f"unknown coefficient kind {self.kind!r}")

    @classmethod
    def parametric(cls, gamma: float = DEFAULT_GAMMA, mu: float = DEFAULT_MU):
        return cls(kind="parametric", gamma=float(gamma), mu=float(mu))

    @classmethod
    def tabulated(cls, s, A, B):
        return cls(kind="tabulated", table=(s, A, B))

    @classmethod
    def from_csv(cls, path):
        """Read a ``s,A,B`` CSV file."""
        try:
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
            s = [float(r["s"]) for r in rows]
            A = [float(r["A"]) for r in rows]
            B = [float(r["B"]) for r in rows]
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"{path}: expected a CSV with header s,A,B ({exc})") from exc
        return cls.tabulated(s, A, B)

    @classmethod
    def packaged(cls, name: str = "hardware_like"):
        """Load a coefficient table shipped in ``nqdt/data``.

        ``hardware_like`` is synthetic: ``A = 1.94 (1-s)^2 exp(-1.5 s)`` and
        ``B = 0.04 + 1.96 s^1.6`` sampled every 0.02. It imitates the shape of
        published annealer curves (nonzero B slope at s = 0, A vanishing at
        s = 1) but is not vendor data.
        """
        ref = resources.files("nqdt") / "data" / f"{name}.csv"
        with resources.as_file(ref) as path:
            return cls.from_csv(path)

    def __call__(self, s: float):
        """Return ``(A, B, dA/ds, dB/ds)`` at ``s``."""
        s = float(s)
        if not 0.0 <= s <= 1.0:
            raise InputError(f"s must lie in [0, 1], got {s}")
        if self.kind == "parametric":
            g, mu = self.gamma, self.mu
            ex = math.exp(-g * s)
            A = 2.0 * ex - 0.06
            B = 2.0 * s ** mu
            dA = -2.0 * g * ex
            if s == 0.0:
                if mu < 1.0:
                    raise InputError("dB/ds is singular at s = 0 for mu < 1")
                dB = 2.0 if mu == 1.0 else 0.0
            else:
                dB = 2.0 * mu * s ** (mu - 1.0)
            return A, B, dA, dB
        grid, At, Bt = self.table
        # right-continuous slopes; the last knot takes the final segment's slope
        k = min(int(np.searchsorted(grid, s, side="right")) - 1, len(grid) - 2)
        w = grid[k + 1] - grid[k]
        dA = (At[k + 1] - At[k]) / w
        dB = (Bt[k + 1] - Bt[k]) / w
        return float(At[k] + dA * (s - grid[k])), float(Bt[k] + dB * (s - grid[k])), float(dA), float(dB)

    def to_dict(self) -> dict:
        if self.kind == "parametric":
            return {"kind": "parametric", "gamma": self.gamma, "mu": self.mu}
        s, A, B = self.table
        return {"kind": "tabulated", "s": s.tolist(), "A": A.tolist(), "B": B.tolist()}


def coeffs(ac: AnnealCoefficients, s: float):
    """``(A, B, dA, dB)`` at ``s``; see :meth:`AnnealCoefficients.__call__`."""
    return ac(s)


@dataclass(frozen=True, eq=False)
class HamiltonianOperator:
    """Matrix-free symmetric operator on the 2**n basis.

    ``H v = diag * v + transverse_weight * sum_i v[flip_i(x)]
    + sum_k delta_k * u_k (u_k . v)``
    """

    n: int
    diag: np.ndarray
    transverse_weight: float
    rank_one_terms: tuple = ()

    def __post_init__(self):
        diag = np.array(self.diag, dtype=float)
        if diag.shape != (1 << self.n,):
            raise InputError(f"diagonal must have length 2**{self.n}")
        diag.flags.writeable = False
        terms = []
        for delta, u in self.rank_one_terms:
            u = np.array(u, dtype=float)
            if u.shape != diag.shape:
                raise InputError("rank-one state has the wrong length")
            u.flags.writeable = False
            terms.append((float(delta), u))
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "transverse_weight", float(self.transverse_weight))
        object.__setattr__(self, "rank_one_terms", tuple(terms))

    @property
    def dim(self) -> int:
        return 1 << self.n

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        flips = flip_table(self.n)
        if v.ndim == 1:
            out = self.diag * v + self.transverse_weight * v[flips].sum(axis=1)
            for delta, u in self.rank_one_terms:
                out += (delta * (u @ v)) * u
            return out
        out = self.diag[:, None] * v + self.transverse_weight * v[flips].sum(axis=1)
        for delta, u in self.rank_one_terms:
            out += delta * np.outer(u, u @ v)
        return out

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        N = self.dim
        H = np.diag(self.diag)
        rows = np.repeat(np.arange(N), self.n)
        H[rows, flip_table(self.n).ravel()] += self.transverse_weight
        for delta, u in self.rank_one_terms:
            H += delta * np.outer(u, u)
        return H

    def kernel_args(self):
        """Contiguous arrays in the layout expected by the training kernels."""
        K = len(self.rank_one_terms)
        deltas = np.array([d for d, _ in self.rank_one_terms], dtype=float)
        states = np.zeros((K, self.dim))
        for k, (_, u) in enumerate(self.rank_one_terms):
            states[k] = u
        return np.ascontiguousarray(self.diag), self.transverse_weight, deltas, states


def build_operator(p: IsingProblem, ac: AnnealCoefficients, s: float) -> HamiltonianOperator:
    A, B, _, _ = ac(s)
    return HamiltonianOperator(p.n, 0.5 * B * p.energies, -0.5 * A)


def d_operator_ds(p: IsingProblem, ac: AnnealCoefficients, s: float) -> HamiltonianOperator:
    """dH/ds. For tabulated coefficients the right-hand slope is used at knots."""
    _, _, dA, dB = ac(s)
    return HamiltonianOperator(p.n, 0.5 * dB * p.energies, -0.5 * dA)


def brauer_shift(H, psi, delta: float):
    """Add ``delta * |psi><psi| / <psi|psi>`` to ``H``.

    If ``psi`` is an eigenvector with eigenvalue lam, the result has the same
    eigenvectors and that one eigenvalue moved to ``lam + delta``. ``H`` may be
    a :class:`HamiltonianOperator` (returns an operator) or a dense symmetric
    array (returns an array).
    """
    psi = np.asarray(getattr(psi, "amps", psi), dtype=float)
    norm = float(np.linalg.norm(psi))
    if not norm > 0.0 or not math.isfinite(norm):
        raise InputError("cannot shift along a zero (or non-finite) vector")
    if not isinstance(H, HamiltonianOperator):
        M = np.asarray(H, dtype=float)
        if M.ndim != 2 or M.shape != (psi.size, psi.size):
            raise InputError(f"matrix shape {M.shape} does not match a vector of length {psi.size}")
        u = psi / norm
        return M + float(delta) * np.outer(u, u)
    terms = H.rank_one_terms + ((float(delta), psi / norm),)
    return HamiltonianOperator(H.n, H.diag, H.transverse_weight, terms)
