"""Annealing-grid sweep with transfer learning between neighbouring grid points.

At every ``s`` on a uniform grid the ground network is trained on ``H(s)``
and the excited network on the Brauer-shifted (or overlap-penalized)
problem. Both networks start the next grid point from their trained
parameters. Optional exact diagonalization fills reference columns.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .ansatz import DEFAULT_HIDDEN, init_ansatz
from .errors import InputError, NQDTError
from .exact import ErrorStats, error_stats, exact_spectrum, relative_error
from .hamiltonian import AnnealCoefficients, IsingProblem, build_operator, d_operator_ds
from .training import (
    TrainingConfig,
    train_excited_brauer,
    train_excited_penalty,
    train_ground,
)

CSV_COLUMNS = (
    "s", "E0", "E1", "gap", "E0_ed", "E1_ed", "relerr0", "relerr1", "epochs0", "epochs1",
    "matrix_element",
)
STATE_EMBED_LIMIT = 4096


@dataclass
class SweepConfig:
    grid_steps: int = 21
    training: TrainingConfig = field(default_factory=TrainingConfig)
    hidden: int = DEFAULT_HIDDEN
    excited_method: str = "brauer"
    delta_policy: str = "abs_ground"
    fixed_delta: float = 0.0
    penalty_lambda: float | None = None
    with_ed: bool = True
    transfer: bool = True

    def __post_init__(self):
        if self.grid_steps < 2:
            raise InputError("grid_steps must be >= 2")
        if self.excited_method not in ("brauer", "penalty"):
            raise InputError(f"unknown excited method {self.excited_method!r}")
        if self.delta_policy not in ("abs_ground", "fixed"):
            raise InputError(f"unknown delta policy {self.delta_policy!r}")
        if self.penalty_lambda is not None and not self.penalty_lambda > 0:
            raise InputError("penalty_lambda must be positive")

    def grid(self) -> np.ndarray:
        g = np.linspace(0.0, 1.0, self.grid_steps)
        g[-1] = 1.0
        return g

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "training"}
        d["training"] = dict(self.training.__dict__)
        return d


@dataclass
class SpectralRecord:
    s: float
    E0: float
    E1: float
    epochs0: int
    epochs1: int
    psi0: np.ndarray | None = field(default=None, repr=False)
    psi1: np.ndarray | None = field(default=None, repr=False)
    matrix_element: float | None = None
    E0_ed: float | None = None
    E1_ed: float | None = None
    relerr0: float | None = None
    relerr1: float | None = None
    converged0: bool = True
    converged1: bool = True

    @property
    def gap(self) -> float:
        return self.E1 - self.E0

    def csv_row(self) -> list[str]:
        values = [self.s, self.E0, self.E1, self.gap, self.E0_ed, self.E1_ed,
                  self.relerr0, self.relerr1, self.epochs0, self.epochs1, self.matrix_element]
        return [_fmt(v) for v in values]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.10g" % v


def default_penalty_lambda(H) -> float:
    """Twice an infinity-norm bound on ``H``; always larger than any gap ``E1 - E0``."""
    bound = float(np.max(np.abs(H.diag))) + H.n * abs(H.transverse_weight)
    return max(2.0 * bound, 1.0)


def _with_s(err: NQDTError, s: float) -> NQDTError:
    err.s = s
    err.args = (f"at s={s:.6g}: {err.args[0] if err.args else err}",) + err.args[1:]
    return err


def run_sweep(p: IsingProblem, ac: AnnealCoefficients, cfg: SweepConfig | None = None, seed: int = 0,
              progress=None) -> list[SpectralRecord]:
    """Train ground and first-excited networks over the grid; one record per grid point.

    ``progress``, if given, is called with each finished record.
    """
    cfg = cfg or SweepConfig()
    tcfg = replace(cfg.training, seed=seed)
    ground_net = init_ansatz(p.n, cfg.hidden, seed)
    excited_net = init_ansatz(p.n, cfg.hidden, seed + 1)
    records = []
    for s in cfg.grid():
        s = float(s)
        try:
            rec, ground_out, excited_out = _grid_point(p, ac, s, cfg, tcfg, ground_net, excited_net)
        except NQDTError as err:
            raise _with_s(err, s) from None
        records.append(rec)
        if progress is not None:
            progress(rec)
        if cfg.transfer:
            ground_net, excited_net = ground_out.transfer(), excited_out.transfer()
        else:
            ground_net = init_ansatz(p.n, cfg.hidden, seed)
            excited_net = init_ansatz(p.n, cfg.hidden, seed + 1)
    return records


def _grid_point(p, ac, s, cfg, tcfg, ground_net, excited_net):
    H = build_operator(p, ac, s)
    g, rep0 = train_ground(H, ground_net, tcfg)
    psi0 = g.full_state().normalized()
    if cfg.excited_method == "brauer":
        delta = None if cfg.delta_policy == "abs_ground" else cfg.fixed_delta
        if delta is None:
            delta = abs(rep0.final_energy)
        e, rep1 = train_excited_brauer(H, psi0, excited_net, tcfg, delta=delta, check_promotion=cfg.with_ed)
    else:
        lam = cfg.penalty_lambda or default_penalty_lambda(H)
        e, rep1 = train_excited_penalty(H, [psi0], [lam], excited_net, tcfg)
    psi1 = e.full_state().normalized()
    # the Brauer trace holds energies of the shifted operator; report E1 under H itself
    E1 = float(psi1 @ H.matvec(psi1))
    dH = d_operator_ds(p, ac, s)
    rec = SpectralRecord(
        s=s,
        E0=rep0.final_energy,
        E1=E1,
        epochs0=rep0.epochs_run,
        epochs1=rep1.epochs_run,
        psi0=psi0,
        psi1=psi1,
        matrix_element=abs(float(psi0 @ dH.matvec(psi1))),
        converged0=rep0.converged,
        converged1=rep1.converged,
    )
    if cfg.with_ed:
        spec = exact_spectrum(H, k=2)
        rec.E0_ed = float(spec.eigenvalues[0])
        rec.E1_ed = float(spec.eigenvalues[1])
        rec.relerr0 = relative_error(rec.E0, rec.E0_ed)
        rec.relerr1 = relative_error(rec.E1, rec.E1_ed)
    return rec, g, e


def transfer_benefit(p: IsingProblem, ac: AnnealCoefficients, cfg: SweepConfig | None = None,
                     seed: int = 0):
    """Ground-network epochs per grid point with and without transfer.

    The cold arm starts every grid point from the same seeded initialization,
    so the first grid point is identical in both arms. Returns
    ``(epochs_with_transfer, epochs_cold, converged_with_transfer, converged_cold)``.
    """
    cfg = cfg or SweepConfig()
    if cfg.grid_steps < 3:
        raise InputError("transfer comparison needs at least 3 grid points")
    tcfg = replace(cfg.training, seed=seed)
    warm_epochs, cold_epochs, warm_ok, cold_ok = [], [], [], []
    net = init_ansatz(p.n, cfg.hidden, seed)
    for s in cfg.grid():
        s = float(s)
        H = build_operator(p, ac, s)
        try:
            net_out, warm = train_ground(H, net, tcfg)
            _, cold = train_ground(H, init_ansatz(p.n, cfg.hidden, seed), tcfg)
        except NQDTError as err:
            raise _with_s(err, s) from None
        warm_epochs.append(warm.epochs_run)
        cold_epochs.append(cold.epochs_run)
        warm_ok.append(warm.converged)
        cold_ok.append(cold.converged)
        net = net_out.transfer()
    return warm_epochs, cold_epochs, warm_ok, cold_ok


def gap_profile(records):
    """``([(s, gap), ...], index_of_min_gap)``; ties go to the smallest s."""
    if not records:
        raise InputError("no records")
    pairs = [(r.s, r.gap) for r in records]
    best = min(range(len(pairs)), key=lambda i: (pairs[i][1], i))
    return pairs, best


def sweep_stats(records) -> dict[str, ErrorStats]:
    """Relative-error statistics per target state (needs ED columns)."""
    e0 = [r.relerr0 for r in records if r.relerr0 is not None]
    e1 = [r.relerr1 for r in records if r.relerr1 is not None]
    if not e0 or not e1:
        raise InputError("records carry no exact-diagonalization errors")
    return {"ground": error_stats(e0), "excited": error_stats(e1)}


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.csv_row())


def _opt_float(text):
    return float(text) if text not in ("", None) else None


def read_csv(path) -> list[SpectralRecord]:
    """Records without state vectors. A missing ``matrix_element`` column reads as None."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"s", "E0", "E1"} - set(reader.fieldnames or ())
        if missing:
            raise InputError(f"{path}: missing columns {sorted(missing)}")
        records = []
        for row in reader:
            rec = SpectralRecord(
                s=float(row["s"]),
                E0=float(row["E0"]),
                E1=float(row["E1"]),
                epochs0=int(row.get("epochs0") or 0),
                epochs1=int(row.get("epochs1") or 0),
                matrix_element=_opt_float(row.get("matrix_element")),
                E0_ed=_opt_float(row.get("E0_ed")),
                E1_ed=_opt_float(row.get("E1_ed")),
                relerr0=_opt_float(row.get("relerr0")),
                relerr1=_opt_float(row.get("relerr1")),
            )
            records.append(rec)
    if not records:
        raise InputError(f"{path}: no rows")
    return records


def write_json(records, path, with_states: bool = True) -> None:
    """JSON variant; state vectors are embedded only up to ``STATE_EMBED_LIMIT`` amplitudes."""
    out = []
    for r in records:
        d = {k: getattr(r, k) for k in ("s", "E0", "E1", "gap", "E0_ed", "E1_ed", "relerr0",
                                       "relerr1", "epochs0", "epochs1", "matrix_element",
                                       "converged0", "converged1")}
        if with_states and r.psi0 is not None and r.psi0.size <= STATE_EMBED_LIMIT:
            d["psi0"] = r.psi0.tolist()
            d["psi1"] = r.psi1.tolist()
        out.append(d)
    Path(path).write_text(json.dumps({"records": out}, allow_nan=False, default=_json_default))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o))


def read_json(path) -> list[SpectralRecord]:
    doc = json.loads(Path(path).read_text())
    records = []
    for d in doc["records"]:
        psi0 = np.asarray(d["psi0"]) if "psi0" in d else None
        psi1 = np.asarray(d["psi1"]) if "psi1" in d else None
        records.append(SpectralRecord(
            s=d["s"], E0=d["E0"], E1=d["E1"], epochs0=d["epochs0"], epochs1=d["epochs1"],
            psi0=psi0, psi1=psi1, matrix_element=d.get("matrix_element"),
            E0_ed=d.get("E0_ed"), E1_ed=d.get("E1_ed"),
            relerr0=d.get("relerr0"), relerr1=d.get("relerr1"),
            converged0=d.get("converged0", True), converged1=d.get("converged1", True),
        ))
    return records
