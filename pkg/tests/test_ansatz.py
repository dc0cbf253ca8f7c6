from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nqdt._basis import spin_table
from nqdt.ansatz import (
    CHECKPOINT_FORMAT,
    StateVector,
    WavefunctionAnsatz,
    all_configurations,
    configuration_index,
    init_ansatz,
    n_params,
)
from nqdt.errors import DegenerateStateError, InputError


def test_init_deterministic_and_sized():
    a, b = init_ansatz(6, 64, 0), init_ansatz(6, 64, 0)
    assert np.array_equal(a.theta, b.theta)
    assert a.n_params == 513 == n_params(6, 64)
    assert not np.array_equal(a.theta, init_ansatz(6, 64, 1).theta)


def test_init_scale_and_zero_biases():
    a = init_ansatz(6, 64, 0)
    assert np.all(np.abs(a.W1) <= 1 / np.sqrt(6))
    assert np.all(np.abs(a.w2) <= 1 / 8)
    assert not a.b1.any() and a.b2 == 0.0


def test_init_rejects_bad_sizes():
    with pytest.raises(InputError):
        init_ansatz(0, 4)
    with pytest.raises(InputError):
        init_ansatz(3, 0)


@given(st.integers(1, 7), st.integers(1, 20), st.integers(0, 2 ** 31 - 1))
def test_outputs_finite_and_bounded(n, hidden, seed):
    amps = init_ansatz(n, hidden, seed).amplitudes()
    assert amps.shape == (2 ** n,)
    assert np.all(np.isfinite(amps)) and np.all(np.abs(amps) < 1)


def test_eval_matches_full_state():
    a = init_ansatz(4, 8, 2)
    a.theta += np.random.default_rng(0).normal(0, 0.3, a.n_params)
    amps = a.amplitudes()
    for x, spins in enumerate(all_configurations(4)):
        assert a.eval(spins) == pytest.approx(amps[x], abs=1e-14)
        assert configuration_index(spins) == x


def test_eval_is_explicit_mlp():
    a = init_ansatz(3, 5, 7)
    a.theta += np.random.default_rng(1).normal(0, 0.5, a.n_params)
    x = np.array([1.0, -1.0, -1.0])
    hidden = np.maximum(a.W1 @ x + a.b1, 0.0)
    assert a.eval(x) == pytest.approx(np.tanh(hidden @ a.w2 + a.b2))


def test_eval_dimension_mismatch():
    with pytest.raises(InputError):
        init_ansatz(3, 4).eval([1, 1])


def test_eval_deterministic():
    a = init_ansatz(4, 16, 3)
    x = spin_table(4)[5]
    first = a.eval(x)
    assert all(a.eval(x) == first for _ in range(1000))


def test_zero_network_is_degenerate():
    a = WavefunctionAnsatz(4, 8, np.zeros(n_params(4, 8)))
    assert not a.amplitudes().any()
    with pytest.raises(DegenerateStateError):
        a.full_state()


def test_full_state_norm():
    a = init_ansatz(4, 16, 1)
    st_ = a.full_state()
    assert st_.norm_sq == pytest.approx(float(np.sum(a.amplitudes() ** 2)), rel=1e-12)
    assert len(init_ansatz(6, 64, 0).full_state().amps) == 64
    assert np.linalg.norm(st_.normalized()) == pytest.approx(1.0)
    assert st_.probabilities().sum() == pytest.approx(1.0)


def test_state_vector_from_amplitudes():
    sv = StateVector.from_amplitudes([3.0, 4.0])
    assert sv.norm_sq == 25.0


def test_transfer_is_deep_copy():
    src = init_ansatz(4, 8, 3)
    before = src.theta.copy()
    dst = src.transfer()
    assert np.array_equal(dst.amplitudes(), src.amplitudes())
    dst.theta[:] += 1.0
    assert np.array_equal(src.theta, before)


def test_chained_transfer_preserves_parameter_count():
    a = init_ansatz(6, 64, 0)
    for _ in range(21):
        a = a.transfer()
    assert a.n_params == 513


def test_theta_shape_validated():
    with pytest.raises(InputError):
        WavefunctionAnsatz(3, 4, np.zeros(5))


def test_checkpoint_roundtrip(tmp_path):
    a = init_ansatz(5, 12, 9)
    path = tmp_path / "net.json"
    a.save(path)
    doc = json.loads(path.read_text())
    assert doc["format"] == CHECKPOINT_FORMAT
    assert [layer["name"] for layer in doc["layers"]] == ["W1", "b1", "w2", "b2"]
    b = WavefunctionAnsatz.load(path)
    assert np.array_equal(a.theta, b.theta) and (b.n_in, b.hidden) == (5, 12)
    path.write_text(json.dumps({"format": "other"}))
    with pytest.raises(InputError):
        WavefunctionAnsatz.load(path)
