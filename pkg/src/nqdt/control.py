"""Adiabatic control function and schedule synthesis.

The control function ``lam(s) = |<0|dH/ds|1>| / |(E1 - E0) * E0|`` measures
how slowly the anneal must proceed near ``s``. Accumulating it (trapezoid
rule) gives a physical time ``t(s)``; inverting that curve and resampling it
yields a piecewise-linear ``(t, s)`` list that respects a point budget and a
maximum slope.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .hamiltonian import AnnealCoefficients, IsingProblem, d_operator_ds

DENOMINATOR_GUARD = 1e-9
TINY_REFERENCE = 1e-3


@dataclass(frozen=True)
class ControlSample:
    s: float
    matrix_element: float
    gap: float
    e0: float
    lam: float
    flagged: bool = False


def control_samples(s, e0, e1, matrix_elements) -> list[ControlSample]:
    """Control-function samples from plain arrays.

    Points where ``|gap * e0| < DENOMINATOR_GUARD`` get the largest unflagged
    value on the grid and ``flagged=True``.
    """
    s = np.asarray(s, dtype=float)
    e0 = np.asarray(e0, dtype=float)
    e1 = np.asarray(e1, dtype=float)
    m = np.abs(np.asarray(matrix_elements, dtype=float))
    if not (s.shape == e0.shape == e1.shape == m.shape) or s.ndim != 1 or s.size == 0:
        raise InputError("s, e0, e1 and matrix elements must be equal-length 1-D sequences")
    if not np.all(np.isfinite(np.concatenate([s, e0, e1, m]))):
        raise InputError("non-finite control inputs")
    gap = e1 - e0
    den = np.abs(gap * e0)
    singular = den < DENOMINATOR_GUARD
    lam = np.zeros_like(s)
    lam[~singular] = m[~singular] / den[~singular]
    if singular.any():
        if singular.all():
            raise InputError("control function is singular at every sample")
        lam[singular] = lam[~singular].max()
    return [
        ControlSample(float(s[i]), float(m[i]), float(gap[i]), float(e0[i]), float(lam[i]), bool(singular[i]))
        for i in range(s.size)
    ]


def control_function(records, p: IsingProblem | None = None, ac: AnnealCoefficients | None = None):
    """Control samples from sweep records.

    With state vectors and ``(p, ac)`` the matrix element is recomputed from
    ``dH/ds``; otherwise the record's stored ``matrix_element`` is used.
    """
    if not records:
        raise InputError("no records")
    mels = []
    for r in records:
        if r.psi0 is not None and r.psi1 is not None and p is not None and ac is not None:
            dH = d_operator_ds(p, ac, r.s)
            mels.append(abs(float(r.psi0 @ dH.matvec(r.psi1))))
        elif r.matrix_element is not None:
            mels.append(r.matrix_element)
        else:
            raise InputError(f"record at s={r.s} has neither states nor a matrix element")
    return control_samples([r.s for r in records], [r.E0 for r in records],
                           [r.E1 for r in records], mels)


def _lam_arrays(samples):
    s = np.array([c.s for c in samples], dtype=float)
    lam = np.array([c.lam for c in samples], dtype=float)
    if s.size < 2 or np.any(np.diff(s) <= 0):
        raise InputError("control samples must have at least two strictly increasing s values")
    if s[0] != 0.0 or s[-1] != 1.0:
        raise InputError("control samples must cover s = 0 and s = 1")
    return s, lam


def reference_value(samples, s_r: float = 0.0) -> float:
    """Control function at ``s_r`` by linear interpolation."""
    s, lam = _lam_arrays(samples)
    if not 0.0 <= s_r <= 1.0:
        raise InputError("reference point must lie in [0, 1]")
    return float(np.interp(s_r, s, lam))


def relative_rate(samples, s: float, s_r: float = 0.0) -> float:
    """``ds/dt`` at ``s`` in units of the rate at ``s_r``, i.e. ``lam(s_r) / lam(s)``."""
    return reference_value(samples, s_r) / reference_value(samples, s)


@dataclass(frozen=True)
class ScheduleTable:
    """Monotone samples of the cumulative time ``t(s)``."""

    t: np.ndarray
    s: np.ndarray

    @property
    def total_time(self) -> float:
        return float(self.t[-1])


def integrate_schedule(samples, total_ref_time: float, s_r: float = 0.0, refine: int = 1) -> ScheduleTable:
    """``t(s) = T * integral_0^s lam(u) / lam(s_r) du`` by the trapezoid rule.

    ``refine`` subdivides each sample interval; since ``lam`` is interpolated
    linearly, refinement adds nodes without changing ``t`` at the samples.
    """
    if not total_ref_time > 0:
        raise InputError("reference time must be positive")
    if refine < 1:
        raise InputError("refine must be >= 1")
    s, lam = _lam_arrays(samples)
    ref = reference_value(samples, s_r)
    if not ref > 0:
        raise InputError(f"control function at the reference point s_r={s_r} is {ref}; cannot normalize")
    if refine > 1:
        fine = [np.linspace(a, b, refine + 1)[:-1] for a, b in zip(s[:-1], s[1:])]
        s_fine = np.concatenate(fine + [s[-1:]])
        lam = np.interp(s_fine, s, lam)
        s = s_fine
    steps = 0.5 * (lam[1:] + lam[:-1]) * np.diff(s)
    t = total_ref_time / ref * np.concatenate([[0.0], np.cumsum(steps)])
    return ScheduleTable(t, s)


@dataclass
class OptimizedSchedule:
    points: np.ndarray
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        t, s = self.points[:, 0], self.points[:, 1]
        if len(t) < 2:
            raise InputError("a schedule needs at least two points")
        if np.any(np.diff(t) <= 0):
            raise InputError("schedule times must be strictly increasing")
        if np.any(np.diff(s) < 0):
            raise InputError("schedule s values must be non-decreasing")
        if s[0] != 0.0 or s[-1] != 1.0 or t[0] != 0.0:
            raise InputError("schedule must start at (0, 0) and end at s = 1")

    @property
    def t(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def s(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def total_time(self) -> float:
        return float(self.points[-1, 0])

    def slopes(self) -> np.ndarray:
        return np.diff(self.s) / np.diff(self.t)

    def s_at(self, t) -> np.ndarray:
        return np.interp(t, self.t, self.s)

    def to_dict(self) -> dict:
        return {"total_time": self.total_time, "points": self.points.tolist(), "flags": list(self.flags)}

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizedSchedule":
        return cls(np.asarray(d["points"], dtype=float), list(d.get("flags", [])))

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "s"])
            for t, s in self.points:
                w.writerow(["%.10g" % t, "%.10g" % s])

    @classmethod
    def load(cls, path) -> "OptimizedSchedule":
        """Read either the JSON or the ``t,s`` CSV form (chosen by extension)."""
        path = Path(path)
        if path.suffix.lower() == ".csv":
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                if set(reader.fieldnames or ()) != {"t", "s"}:
                    raise InputError(f"{path}: expected header t,s")
                pts = [[float(r["t"]), float(r["s"])] for r in reader]
            return cls(np.asarray(pts))
        return cls.from_dict(json.loads(path.read_text()))


def linear_schedule(total_time: float, n_points: int = 2) -> OptimizedSchedule:
    if not total_time > 0:
        raise InputError("total time must be positive")
    t = np.linspace(0.0, total_time, n_points)
    s = np.linspace(0.0, 1.0, n_points)
    return OptimizedSchedule(np.column_stack([t, s]))


def invert_and_resample(table: ScheduleTable, max_points: int | None = 12, slope_limit: float | None = 2.0,
                        target_total: float | None = None) -> OptimizedSchedule:
    """Invert ``t(s)`` to ``s(t)`` and sample ``max_points`` knots equally spaced in ``t``.

    Knot s values are fixed before any time rescaling: ``target_total``
    compresses or stretches time uniformly, and a slope violation is cured by
    the smallest uniform dilation (recorded in ``flags``).
    """
    t = np.asarray(table.t, dtype=float)
    s = np.asarray(table.s, dtype=float)
    if t.shape != s.shape or t.size < 2:
        raise InputError("schedule table needs at least two samples")
    if np.any(np.diff(t) <= 0) or np.any(np.diff(s) <= 0) or t[0] != 0.0:
        raise InputError("schedule table must start at t = 0 and increase strictly in t and s")
    if target_total is not None and not target_total > 0:
        raise InputError("target total time must be positive")
    flags: list[str] = []
    if max_points is None:
        knots_t, knots_s = t.copy(), s.copy()
        unit = t / t[-1]
    else:
        if max_points < 2:
            raise InputError("max_points must be >= 2")
        unit = np.linspace(0.0, 1.0, max_points)
        knots_s = np.interp(unit * t[-1], t, s)
    knots_s[0], knots_s[-1] = 0.0, 1.0
    total = t[-1] if target_total is None else float(target_total)
    knots_t = unit * total
    if slope_limit is not None:
        if not slope_limit > 0:
            raise InputError("slope limit must be positive")
        steepest = float(np.max(np.diff(knots_s) / np.diff(knots_t)))
        if steepest > slope_limit:
            factor = steepest / slope_limit * (1.0 + 1e-12)
            knots_t = knots_t * factor
            flags.append(f"slope limit {slope_limit:g} exceeded; total time dilated by {factor:.6g}")
    return OptimizedSchedule(np.column_stack([knots_t, knots_s]), flags)


def time_in_interval(table: ScheduleTable, lo: float, hi: float) -> float:
    """Time the schedule spends between ``s = lo`` and ``s = hi`` (linear in between nodes)."""
    return float(np.interp(hi, table.s, table.t) - np.interp(lo, table.s, table.t))
