from __future__ import annotations

import math

import numpy as np
import pytest

from nqdt.errors import DegenerateStateError, InputError
from nqdt.exact import exact_spectrum
from nqdt.hamiltonian import AnnealCoefficients, build_operator, random_instance, tfim_instance
from nqdt.sweep import (
    CSV_COLUMNS,
    SpectralRecord,
    SweepConfig,
    default_penalty_lambda,
    gap_profile,
    read_csv,
    read_json,
    run_sweep,
    sweep_stats,
    transfer_benefit,
    write_csv,
    write_json,
)
from nqdt.training import TrainingConfig

PARAM = AnnealCoefficients.parametric()


@pytest.fixture(scope="module")
def tfim4():
    return run_sweep(tfim_instance(4), PARAM, SweepConfig(), seed=0)


@pytest.fixture(scope="module")
def tfim6():
    return run_sweep(tfim_instance(6), PARAM, SweepConfig(), seed=0)


def test_config_grid():
    g = SweepConfig().grid()
    assert len(g) == 21 and g[0] == 0.0 and g[-1] == 1.0
    assert np.allclose(np.diff(g), 0.05)
    with pytest.raises(InputError):
        SweepConfig(grid_steps=1)
    with pytest.raises(InputError):
        SweepConfig(excited_method="rayleigh")
    assert SweepConfig().to_dict()["training"]["learning_rate"] == 0.003


def test_two_point_grid_starts_in_transverse_ground_state():
    n = 4
    recs = run_sweep(tfim_instance(n), PARAM, SweepConfig(grid_steps=2), seed=0)
    assert [r.s for r in recs] == [0.0, 1.0]
    expected = -n * PARAM(0.0)[0] / 2
    assert abs(recs[0].E0 - expected) / abs(expected) < 0.005


def test_record_invariants(tfim4):
    assert len(tfim4) == 21
    assert np.all(np.diff([r.s for r in tfim4]) > 0)
    for r in tfim4:
        assert r.gap == r.E1 - r.E0
        assert r.E0 >= r.E0_ed - 1e-9
        assert np.linalg.norm(r.psi0) == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.norm(r.psi1) == pytest.approx(1.0, abs=1e-10)
        if r.E1_ed - r.E0_ed > 0.1:
            assert abs(float(r.psi0 @ r.psi1)) <= 0.05


def test_tfim4_error_gates(tfim4):
    stats = sweep_stats(tfim4)
    assert stats["ground"].avg <= 0.5 and stats["ground"].max <= 1.5
    assert stats["excited"].avg <= 1.0 and stats["excited"].max <= 2.0


def test_tfim6_error_gates_and_final_gap(tfim6):
    stats = sweep_stats(tfim6)
    assert stats["ground"].avg <= 0.5 and stats["ground"].max <= 1.5
    assert stats["excited"].avg <= 1.0 and stats["excited"].max <= 2.0
    last = tfim6[-1]
    allowed = 2 * (0.015 * abs(last.E0_ed) + 0.02 * abs(last.E1_ed))
    assert abs(last.gap - (last.E1_ed - last.E0_ed)) <= allowed


def test_hard_random_instance_gap_location():
    recs = run_sweep(random_instance(6, 32), PARAM, SweepConfig(), seed=0)
    _, best = gap_profile(recs)
    assert 0.25 <= recs[best].s <= 0.55
    assert sweep_stats(recs)["excited"].max <= 2.0


def test_penalty_sweep_tracks_ed():
    cfg = SweepConfig(grid_steps=6, excited_method="penalty")
    recs = run_sweep(tfim_instance(3), PARAM, cfg, seed=1)
    for r in recs[:-1]:
        assert r.relerr1 < 2.0


def test_default_penalty_exceeds_gap():
    for s in (0.0, 0.5, 1.0):
        H = build_operator(random_instance(4, 1), PARAM, s)
        ev = exact_spectrum(H).eigenvalues
        assert default_penalty_lambda(H) > ev[1] - ev[0]


def test_gap_profile_tie_break():
    recs = [SpectralRecord(s, -1.0, -0.5, 0, 0) for s in (0.0, 0.5, 1.0)]
    pairs, best = gap_profile(recs)
    assert best == 0 and pairs == [(0.0, 0.5), (0.5, 0.5), (1.0, 0.5)]
    with pytest.raises(InputError):
        gap_profile([])


def test_sweep_is_deterministic():
    cfg = SweepConfig(grid_steps=4)
    a = run_sweep(tfim_instance(3), PARAM, cfg, seed=5)
    b = run_sweep(tfim_instance(3), PARAM, cfg, seed=5)
    assert [r.csv_row() for r in a] == [r.csv_row() for r in b]
    assert all(np.array_equal(x.psi1, y.psi1) for x, y in zip(a, b))


def test_errors_carry_grid_point(monkeypatch):
    import nqdt.sweep as sweep_mod

    def boom(*args, **kwargs):
        raise DegenerateStateError("collapsed")

    monkeypatch.setattr(sweep_mod, "train_ground", boom)
    with pytest.raises(DegenerateStateError, match="s=0"):
        run_sweep(tfim_instance(2), PARAM, SweepConfig(grid_steps=2))


def test_csv_and_json_roundtrip(tmp_path):
    recs = run_sweep(tfim_instance(2), PARAM, SweepConfig(grid_steps=3), seed=0)
    write_csv(recs, tmp_path / "s.csv")
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    back = read_csv(tmp_path / "s.csv")
    for r, b in zip(recs, back):
        assert b.E0 == pytest.approx(r.E0, rel=1e-9) and b.relerr1 == pytest.approx(r.relerr1, rel=1e-9)
        assert b.psi0 is None and b.matrix_element == pytest.approx(r.matrix_element, rel=1e-9)
    write_json(recs, tmp_path / "s.json")
    back = read_json(tmp_path / "s.json")
    assert all(np.array_equal(r.psi0, b.psi0) and r.E1 == b.E1 for r, b in zip(recs, back))


def test_csv_without_optional_columns(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("s,E0,E1\n0,-1,-0.5\n1,-2,-1\n")
    recs = read_csv(path)
    assert recs[1].gap == 1.0 and recs[0].matrix_element is None
    with pytest.raises(InputError):
        sweep_stats(recs)
    path.write_text("s,E0\n0,-1\n")
    with pytest.raises(InputError):
        read_csv(path)


@pytest.fixture(scope="module")
def transfer_arms():
    return transfer_benefit(tfim_instance(4), PARAM, SweepConfig(with_ed=False), seed=0)


def test_transfer_benefit_arms(transfer_arms):
    warm, cold, _, _ = transfer_arms
    assert warm[0] == cold[0]
    assert np.median(warm[1:]) < np.median(cold[1:])
    with pytest.raises(InputError):
        transfer_benefit(tfim_instance(4), PARAM, SweepConfig(grid_steps=2))


def test_transfer_arms_converge_where_gap_is_resolved(transfer_arms):
    _, _, warm_ok, cold_ok = transfer_arms
    for s, w, c in zip(SweepConfig().grid(), warm_ok, cold_ok):
        ev = exact_spectrum(build_operator(tfim_instance(4), PARAM, float(s))).eigenvalues
        if ev[1] - ev[0] > 1e-5:
            assert w and c, f"no convergence at s={s}"


@pytest.mark.xfail(strict=True, reason="RMSprop bursts keep the window std above tol once the gap is < 1e-5")
def test_transfer_arms_converge_everywhere(transfer_arms):
    _, _, warm_ok, cold_ok = transfer_arms
    assert all(warm_ok) and all(cold_ok)


def test_without_transfer_every_point_starts_fresh():
    cfg = SweepConfig(grid_steps=3, transfer=False, training=TrainingConfig(max_epochs=300))
    recs = run_sweep(tfim_instance(2), PARAM, cfg, seed=0)
    assert all(math.isfinite(r.E0) for r in recs)
