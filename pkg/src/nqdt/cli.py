"""Command-line front end: ``nqdt gen | sweep | schedule | apt | compare``.

Exit codes: 0 success, 2 input error, 3 capacity, 4 convergence failure.
Every output file gets a ``<output>.manifest.json`` next to it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
import warnings
from pathlib import Path

from . import __version__, kernels
from .errors import InputError, NQDTError
from .exact import error_stats

log = logging.getLogger("nqdt")


# -- manifests ----------------------------------------------------------------

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_path, command: str, args: argparse.Namespace, inputs, outputs, started: float,
                   extra: dict | None = None) -> Path:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    path = Path(f"{out_path}.manifest.json")
    path.write_text(json.dumps(manifest, indent=2, default=str))
    return path


# -- shared option groups -----------------------------------------------------

def _add_coefficient_options(p: argparse.ArgumentParser):
    g = p.add_argument_group("annealing coefficients")
    g.add_argument("--gamma", type=float, default=3.5, help="decay rate of A(s) (parametric)")
    g.add_argument("--mu", type=float, default=1.8, help="exponent of B(s) (parametric)")
    g.add_argument("--coeffs-file", type=Path, help="tabulated s,A,B CSV (overrides --gamma/--mu)")
    g.add_argument("--hardware-like", action="store_true",
                   help="use the packaged synthetic hardware-shaped table")


def _coefficients(args):
    from .hamiltonian import AnnealCoefficients

    if args.coeffs_file is not None:
        return AnnealCoefficients.from_csv(args.coeffs_file)
    if args.hardware_like:
        return AnnealCoefficients.packaged()
    return AnnealCoefficients.parametric(args.gamma, args.mu)


def _coefficient_inputs(args):
    return [args.coeffs_file] if args.coeffs_file is not None else []


# -- gen ----------------------------------------------------------------------

def cmd_gen(args) -> int:
    from .hamiltonian import qubo_to_ising, random_instance, random_qubo, tfim_instance

    started = time.time()
    if args.kind in ("random", "qubo") and args.seed is None:
        raise InputError(f"--seed is required for --kind {args.kind}")
    if args.kind == "tfim":
        problem = tfim_instance(args.n)
    elif args.kind == "random":
        problem = random_instance(args.n, args.seed)
    else:
        problem = qubo_to_ising(random_qubo(args.n, args.seed))
    out = args.out or Path(f"{args.kind}_n{args.n}" + (f"_seed{args.seed}" if args.seed is not None else "") + ".json")
    problem.save(out)
    write_manifest(out, "gen", args, [], [out], started)
    print(out)
    return 0


# -- sweep --------------------------------------------------------------------

def _stats_block(records) -> dict:
    from .sweep import sweep_stats

    return {name: st.as_row() for name, st in sweep_stats(records).items()}


def _print_stats(rows: dict, label: str = "") -> None:
    print(f"{'state':<22}{'avg (%)':>12}{'min (%)':>12}{'max (%)':>12}{'std (%)':>12}")
    for name, r in rows.items():
        tag = f"{label} {name}".strip()
        print(f"{tag:<22}{r['avg']:>12.4f}{r['min']:>12.4f}{r['max']:>12.4f}{r['std']:>12.4f}")


def cmd_sweep(args) -> int:
    from .hamiltonian import IsingProblem
    from .sweep import SweepConfig, run_sweep, write_csv, write_json
    from .training import TrainingConfig

    started = time.time()
    problem = IsingProblem.load(args.problem)
    ac = _coefficients(args)
    tcfg = TrainingConfig(learning_rate=args.lr, max_epochs=args.epochs, window=args.window, tol=args.tol)
    cfg = SweepConfig(
        grid_steps=args.grid_steps,
        training=tcfg,
        hidden=args.hidden,
        excited_method=args.excited,
        delta_policy="abs_ground" if args.delta is None else "fixed",
        fixed_delta=args.delta or 0.0,
        penalty_lambda=args.penalty_lambda,
        with_ed=args.ed,
    )

    def progress(rec):
        log.info("s=%.3f E0=%.8g E1=%.8g epochs=%d/%d", rec.s, rec.E0, rec.E1, rec.epochs0, rec.epochs1)
        if not (rec.converged0 and rec.converged1):
            print(f"warning: s={rec.s:.4g} hit max_epochs before the variance rule fired", file=sys.stderr)

    with warnings.catch_warnings():
        warnings.simplefilter("always")
        records = run_sweep(problem, ac, cfg, seed=args.seed, progress=progress)
    out = args.out or Path(Path(args.problem).stem + "_sweep.csv")
    write_csv(records, out)
    outputs = [out]
    if args.json is not None:
        write_json(records, args.json)
        outputs.append(args.json)
    extra = {}
    if args.ed:
        extra["stats"] = _stats_block(records)
        _print_stats(extra["stats"])
    for path in outputs:
        write_manifest(path, "sweep", args, [args.problem, *_coefficient_inputs(args)], outputs, started, extra)
    print(out)
    return 0


# -- schedule -----------------------------------------------------------------

def _read_records(path):
    from .sweep import read_csv, read_json

    return read_json(path) if Path(path).suffix.lower() == ".json" else read_csv(path)


def cmd_schedule(args) -> int:
    from .control import TINY_REFERENCE, control_function, integrate_schedule, invert_and_resample, reference_value

    started = time.time()
    records = _read_records(args.sweep)
    samples = control_function(records)
    if args.verbose:
        print(f"{'s':>8}{'E0':>14}{'E1':>14}{'|<0|dH|1>|':>14}{'lambda':>14}")
        for c in samples:
            mark = "  (guarded)" if c.flagged else ""
            print(f"{c.s:>8.4g}{c.e0:>14.6g}{c.e0 + c.gap:>14.6g}{c.matrix_element:>14.6g}{c.lam:>14.6g}{mark}")
    for c in samples:
        if c.flagged:
            print(f"warning: |gap * E0| below guard at s={c.s:.4g}; lambda set to the grid maximum",
                  file=sys.stderr)
    ref = reference_value(samples, args.sr)
    peak = max(c.lam for c in samples)
    if 0 < ref < TINY_REFERENCE * peak:
        print(f"warning: lambda(s_r={args.sr:g}) = {ref:.3g} is tiny relative to its peak {peak:.3g}; "
              "the schedule will be dominated by the hard region", file=sys.stderr)
    table = integrate_schedule(samples, args.total_time, args.sr)
    if args.unconstrained:
        sched = invert_and_resample(table, None, None, args.target_total)
    else:
        sched = invert_and_resample(table, args.max_points, args.slope_limit, args.target_total)
    for flag in sched.flags:
        print(f"warning: {flag}", file=sys.stderr)
    out = args.out or Path(Path(args.sweep).stem + "_schedule.json")
    if Path(out).suffix.lower() == ".csv":
        sched.save_csv(out)
    else:
        sched.save_json(out)
    write_manifest(out, "schedule", args, [args.sweep], [out], started,
                   {"lambda": [[c.s, c.lam] for c in samples]})
    print(out)
    return 0


# -- apt ----------------------------------------------------------------------

def cmd_apt(args) -> int:
    from .apt import apt_levels, exact_propagation, save_results
    from .control import OptimizedSchedule
    from .hamiltonian import IsingProblem

    started = time.time()
    problem = IsingProblem.load(args.problem)
    ac = _coefficients(args)
    sched = OptimizedSchedule.load(args.schedule)
    results = apt_levels(problem, ac, sched, args.levels, args.quad)
    oracle = exact_propagation(problem, ac, sched, dt=args.dt) if args.oracle else None
    for r in results:
        line = f"m={r.level}  P_first_order={r.probability:.6e}"
        if oracle is not None:
            line += f"  P_exact={oracle[r.level]:.6e}"
        print(line)
    out = args.out or Path(Path(args.schedule).stem + "_apt.json")
    save_results(results, out, oracle)
    write_manifest(out, "apt", args, [args.problem, args.schedule, *_coefficient_inputs(args)], [out], started)
    print(out)
    return 0


# -- compare ------------------------------------------------------------------

def cmd_compare(args) -> int:
    from .sweep import read_csv

    started = time.time()
    per_file = {}
    pooled = {"ground": [], "excited": []}
    for path in args.sweeps:
        records = read_csv(path)
        e0 = [r.relerr0 for r in records if r.relerr0 is not None]
        e1 = [r.relerr1 for r in records if r.relerr1 is not None]
        if not e0 or not e1:
            raise InputError(f"{path}: relerr columns are empty (run the sweep with --ed)")
        per_file[str(path)] = {"ground": error_stats(e0).as_row(), "excited": error_stats(e1).as_row()}
        pooled["ground"] += e0
        pooled["excited"] += e1
    for path, rows in per_file.items():
        _print_stats(rows, Path(path).stem)
    doc = {"files": per_file}
    if len(per_file) > 1:
        doc["aggregate"] = {k: error_stats(v).as_row() for k, v in pooled.items()}
        doc["instances"] = len(per_file)
        _print_stats(doc["aggregate"], f"all {len(per_file)}")
    if args.json is not None:
        Path(args.json).write_text(json.dumps(doc, indent=2))
        write_manifest(args.json, "compare", args, args.sweeps, [args.json], started)
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nqdt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING", help="logging level (INFO shows progress)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a problem instance as JSON")
    p.add_argument("--kind", choices=["tfim", "random", "qubo"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, help="required for random and qubo instances")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sweep", help="train ground/excited networks across the annealing grid")
    p.add_argument("problem", type=Path)
    p.add_argument("--grid-steps", type=int, default=21)
    p.add_argument("--epochs", type=int, default=10000)
    p.add_argument("--lr", type=float, default=0.003)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--excited", choices=["brauer", "penalty"], default="brauer")
    p.add_argument("--delta", type=float, help="fixed Brauer shift (default |E0|)")
    p.add_argument("--penalty-lambda", type=float, help="overlap penalty (default: twice a norm bound)")
    p.add_argument("--ed", action="store_true", help="fill exact-diagonalization columns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="sweep CSV path")
    p.add_argument("--json", type=Path, help="also write the JSON variant with state vectors")
    _add_coefficient_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("schedule", help="build an optimized (t, s) schedule from a sweep")
    p.add_argument("sweep", type=Path, help="sweep CSV (or JSON) with a matrix_element column")
    p.add_argument("--total-time", type=float, default=1.0, help="reference time T in t(s) = T * ...")
    p.add_argument("--sr", type=float, default=0.0, help="reference point s_r")
    p.add_argument("--max-points", type=int, default=12)
    p.add_argument("--slope-limit", type=float, default=2.0)
    p.add_argument("--target-total", type=float, help="uniformly rescale to this total time")
    p.add_argument("--unconstrained", action="store_true", help="skip point budget and slope limit")
    p.add_argument("--verbose", action="store_true", help="print the control-function table")
    p.add_argument("--out", type=Path, help=".json or .csv")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("apt", help="first-order diabatic transition estimate for a schedule")
    p.add_argument("problem", type=Path)
    p.add_argument("schedule", type=Path)
    p.add_argument("--levels", type=int, default=1, help="report m = 1..levels")
    p.add_argument("--quad", type=int, default=64, help="quadrature points per segment")
    p.add_argument("--oracle", action="store_true", help="also run exact unitary propagation")
    p.add_argument("--dt", type=float, default=0.02, help="oracle time step")
    p.add_argument("--out", type=Path)
    _add_coefficient_options(p)
    p.set_defaults(func=cmd_apt)

    p = sub.add_parser("compare", help="relative-error statistics of one or more sweeps")
    p.add_argument("sweeps", type=Path, nargs="+")
    p.add_argument("--json", type=Path)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NQDTError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
