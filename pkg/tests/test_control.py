from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nqdt.control import (
    DENOMINATOR_GUARD,
    OptimizedSchedule,
    ScheduleTable,
    control_function,
    control_samples,
    integrate_schedule,
    invert_and_resample,
    linear_schedule,
    reference_value,
    relative_rate,
    time_in_interval,
)
from nqdt.errors import InputError
from nqdt.hamiltonian import AnnealCoefficients, d_operator_ds, tfim_instance
from nqdt.sweep import SpectralRecord

GOLDEN_S = [0.0, 0.5, 1.0]
GOLDEN_E0 = [-0.9, -0.5, -0.3]
GOLDEN_E1 = [-0.7, -0.45, -0.1]
GOLDEN_M = [0.08, 0.12, 0.05]


def golden():
    return control_samples(GOLDEN_S, GOLDEN_E0, GOLDEN_E1, GOLDEN_M)


def test_golden_control_values():
    lam = [c.lam for c in golden()]
    for got, want in zip(lam, [0.444, 4.8, 0.833]):
        assert got == pytest.approx(want, rel=5e-3)
    assert all(not c.flagged for c in golden())


def test_golden_relative_rate():
    assert relative_rate(golden(), 0.5) == pytest.approx(0.0925, rel=5e-3)


def test_control_function_from_states_matches_stored_element(rng):
    p = tfim_instance(2)
    ac = AnnealCoefficients.parametric()
    records = []
    for s in (0.0, 0.5, 1.0):
        psi0, psi1 = np.linalg.qr(rng.standard_normal((4, 2)))[0].T
        mel = abs(float(psi0 @ d_operator_ds(p, ac, s).matvec(psi1)))
        records.append(SpectralRecord(s, -1.0 - s, -0.5, 0, 0, psi0=psi0, psi1=psi1))
        records[-1].matrix_element = mel
    from_states = control_function(records, p, ac)
    from_column = control_function([SpectralRecord(r.s, r.E0, r.E1, 0, 0, matrix_element=r.matrix_element)
                                    for r in records])
    assert [c.lam for c in from_states] == pytest.approx([c.lam for c in from_column], rel=1e-12)
    with pytest.raises(InputError):
        control_function([SpectralRecord(0.0, -1.0, -0.5, 0, 0)])


def test_denominator_guard_flags_and_caps():
    samples = control_samples([0.0, 0.5, 1.0], [-1.0, 0.0, -1.0], [-0.5, 0.3, -0.8], [0.1, 0.2, 0.3])
    assert samples[1].flagged and not samples[0].flagged
    assert samples[1].lam == max(samples[0].lam, samples[2].lam)
    assert abs(samples[1].gap * samples[1].e0) < DENOMINATOR_GUARD


def test_constant_control_gives_linear_time():
    samples = control_samples(np.linspace(0, 1, 11), [-1.0] * 11, [-0.5] * 11, [0.3] * 11)
    table = integrate_schedule(samples, 7.0)
    assert np.allclose(table.t, 7.0 * table.s, atol=1e-12, rtol=0)


def test_two_sample_trapezoid():
    samples = control_samples([0.0, 1.0], [-1.0, -1.0], [0.0, 0.0], [1.0, 3.0])
    assert integrate_schedule(samples, 5.0).total_time == pytest.approx(10.0)


def test_nonpositive_reference_rejected():
    samples = control_samples([0.0, 1.0], [-1.0, -1.0], [0.0, 0.0], [0.0, 3.0])
    with pytest.raises(InputError):
        integrate_schedule(samples, 1.0)
    assert integrate_schedule(samples, 1.0, s_r=1.0).total_time == pytest.approx(0.5)


def test_samples_must_cover_unit_interval():
    samples = control_samples([0.0, 0.5], [-1.0, -1.0], [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InputError):
        integrate_schedule(samples, 1.0)


def test_refinement_leaves_total_stable():
    s = np.linspace(0, 1, 11)
    lam = 1.0 + np.exp(-((s - 0.6) / 0.2) ** 2)
    samples = control_samples(s, -np.ones_like(s), -np.ones_like(s) + 1.0, lam)
    finer = np.linspace(0, 1, 21)
    lam_f = 1.0 + np.exp(-((finer - 0.6) / 0.2) ** 2)
    fine = control_samples(finer, -np.ones_like(finer), np.zeros_like(finer), lam_f)
    coarse_total = integrate_schedule(samples, 1.0).total_time
    fine_total = integrate_schedule(fine, 1.0).total_time
    assert abs(fine_total - coarse_total) / fine_total < 0.01
    assert integrate_schedule(samples, 1.0, refine=4).total_time == pytest.approx(coarse_total, rel=1e-12)


def test_slow_where_hard():
    table = integrate_schedule(golden(), 1.0, refine=20)
    assert time_in_interval(table, 0.4, 0.6) >= 2.0 * time_in_interval(table, 0.0, 0.2)


def test_linear_table_resampled_to_target():
    table = ScheduleTable(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    sched = invert_and_resample(table, max_points=12, target_total=20.0)
    assert len(sched.points) == 12 and sched.total_time == pytest.approx(20.0)
    assert np.allclose(sched.slopes(), 1 / 20)
    assert np.allclose(sched.s, sched.t / 20.0, atol=1e-15)
    assert not sched.flags


def test_compression_preserves_knot_s_values():
    base = integrate_schedule(golden(), 1.0)
    T = 41.62 / base.total_time
    table = integrate_schedule(golden(), T)
    assert table.total_time == pytest.approx(41.62)
    full = invert_and_resample(table, max_points=12, slope_limit=None)
    short = invert_and_resample(table, max_points=12, slope_limit=2.0, target_total=20.0)
    assert np.array_equal(full.s, short.s)
    assert np.allclose(short.t, full.t * 20.0 / 41.62, rtol=1e-14)
    assert short.total_time == pytest.approx(20.0) and not short.flags


@pytest.mark.parametrize(
    "t, s, max_points, total",
    [([0.0, 1 / 3], [0.0, 1.0], 2, 0.5), ([0.0, 0.1, 1.0], [0.0, 0.3, 1.0], None, 1.5)],
)
def test_slope_violation_dilates_time(t, s, max_points, total):
    sched = invert_and_resample(ScheduleTable(np.array(t), np.array(s)), max_points=max_points)
    assert sched.total_time == pytest.approx(total, rel=1e-9)
    assert np.max(sched.slopes()) <= 2.0
    assert sched.flags and "1.5" in sched.flags[0]


def test_non_monotone_table_rejected():
    with pytest.raises(InputError):
        invert_and_resample(ScheduleTable(np.array([0.0, 2.0, 1.0]), np.array([0.0, 0.5, 1.0])))
    with pytest.raises(InputError):
        invert_and_resample(ScheduleTable(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.6, 0.5])))


@given(
    st.lists(st.floats(0.01, 50.0), min_size=2, max_size=25),
    st.integers(2, 12),
    st.floats(0.05, 5.0),
    st.one_of(st.none(), st.floats(0.1, 100.0)),
)
def test_constrained_schedule_properties(lams, max_points, slope_limit, target):
    s = np.linspace(0, 1, len(lams))
    samples = control_samples(s, -np.ones_like(s), np.zeros_like(s), lams)
    sched = invert_and_resample(integrate_schedule(samples, 3.0), max_points, slope_limit, target)
    assert len(sched.points) <= max_points
    assert np.all(sched.slopes() <= slope_limit)
    assert np.all(np.diff(sched.t) > 0) and np.all(np.diff(sched.s) >= 0)
    assert sched.s[0] == 0.0 and sched.s[-1] == 1.0 and sched.t[0] == 0.0


def test_reference_value_interpolates():
    assert reference_value(golden(), 0.25) == pytest.approx(0.5 * (0.08 / 0.18 + 4.8))
    with pytest.raises(InputError):
        reference_value(golden(), 1.5)


def test_schedule_validation():
    with pytest.raises(InputError):
        OptimizedSchedule([[0.0, 0.0], [1.0, 0.5]])
    with pytest.raises(InputError):
        OptimizedSchedule([[0.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InputError):
        OptimizedSchedule([[0.0, 0.0], [1.0, 0.7], [2.0, 0.5], [3.0, 1.0]])


def test_schedule_io_roundtrip(tmp_path):
    sched = invert_and_resample(integrate_schedule(golden(), 2.0), 6)
    sched.flags.append("note")
    sched.save_json(tmp_path / "a.json")
    sched.save_csv(tmp_path / "a.csv")
    back = OptimizedSchedule.load(tmp_path / "a.json")
    assert np.array_equal(back.points, sched.points) and back.flags == ["note"]
    assert np.allclose(OptimizedSchedule.load(tmp_path / "a.csv").points, sched.points, rtol=1e-9)
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "t,s"
    lin = linear_schedule(4.0, 5)
    assert np.allclose(lin.s_at([1.0, 3.0]), [0.25, 0.75])
