"""Real-valued MLP wavefunction: spins (+-1) -> ReLU hidden layer -> tanh amplitude."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from ._basis import spin_table, spins_to_index
from .errors import DegenerateStateError, InputError

CHECKPOINT_FORMAT = "nqdt-ansatz-v1"
DEFAULT_HIDDEN = 64


def n_params(n: int, hidden: int) -> int:
    return n * hidden + hidden + hidden + 1


@dataclass
class StateVector:
    """Unnormalized amplitudes over the full basis together with Z = sum amps**2."""

    amps: np.ndarray
    norm_sq: float

    @classmethod
    def from_amplitudes(cls, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=float)
        return cls(amps, float(amps @ amps))

    def normalized(self) -> np.ndarray:
        return self.amps / math.sqrt(self.norm_sq)

    def probabilities(self) -> np.ndarray:
        return self.amps ** 2 / self.norm_sq


@dataclass
class WavefunctionAnsatz:
    """One-hidden-layer perceptron. Parameters live in one flat vector ``theta``.

    Layout: ``W1`` (hidden x n_in, row-major), ``b1``, ``w2``, ``b2``.
    """

    n_in: int
    hidden: int
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.ascontiguousarray(self.theta, dtype=float)
        if self.theta.shape != (n_params(self.n_in, self.hidden),):
            raise InputError(
                f"expected {n_params(self.n_in, self.hidden)} parameters, got {self.theta.shape}"
            )

    @property
    def n_params(self) -> int:
        return self.theta.size

    @property
    def W1(self) -> np.ndarray:
        return self.theta[: self.hidden * self.n_in].reshape(self.hidden, self.n_in)

    @property
    def b1(self) -> np.ndarray:
        o = self.hidden * self.n_in
        return self.theta[o:o + self.hidden]

    @property
    def w2(self) -> np.ndarray:
        o = self.hidden * self.n_in + self.hidden
        return self.theta[o:o + self.hidden]

    @property
    def b2(self) -> float:
        return float(self.theta[-1])

    def eval(self, spins) -> float:
        """Amplitude of a single configuration given as +-1 spins."""
        x = np.asarray(spins, dtype=float)
        if x.shape != (self.n_in,):
            raise InputError(f"expected {self.n_in} spins, got shape {x.shape}")
        pre = self.W1 @ x + self.b1
        return math.tanh(float(np.maximum(pre, 0.0) @ self.w2) + self.b2)

    def amplitudes(self) -> np.ndarray:
        return kernels.amplitudes(self.theta, self.n_in, self.hidden)

    def full_state(self) -> StateVector:
        """Amplitudes of all 2**n configurations, indexed as in ``_basis``."""
        state = StateVector.from_amplitudes(self.amplitudes())
        if not state.norm_sq > kernels.python.NORM_FLOOR:
            raise DegenerateStateError("network output vanishes on every configuration")
        return state

    def transfer(self) -> "WavefunctionAnsatz":
        """Independent copy, used to warm-start the next grid point."""
        return WavefunctionAnsatz(self.n_in, self.hidden, self.theta.copy())

    def save(self, path) -> None:
        layers = [
            {"name": "W1", "shape": [self.hidden, self.n_in], "data": self.W1.ravel().tolist()},
            {"name": "b1", "shape": [self.hidden], "data": self.b1.tolist()},
            {"name": "w2", "shape": [1, self.hidden], "data": self.w2.tolist()},
            {"name": "b2", "shape": [1], "data": [self.b2]},
        ]
        doc = {"format": CHECKPOINT_FORMAT, "n_in": self.n_in, "hidden": self.hidden, "layers": layers}
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def load(cls, path) -> "WavefunctionAnsatz":
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise InputError(f"{path}: not an {CHECKPOINT_FORMAT} checkpoint")
        theta = np.concatenate([np.asarray(layer["data"], dtype=float) for layer in doc["layers"]])
        return cls(int(doc["n_in"]), int(doc["hidden"]), theta)


def init_ansatz(n: int, hidden: int = DEFAULT_HIDDEN, seed: int = 0) -> WavefunctionAnsatz:
    """Seeded init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero."""
    if n < 1 or hidden < 1:
        raise InputError("n and hidden must be >= 1")
    rng = np.random.default_rng(seed)
    theta = np.zeros(n_params(n, hidden))
    lim1 = 1.0 / math.sqrt(n)
    theta[: hidden * n] = rng.uniform(-lim1, lim1, size=hidden * n)
    lim2 = 1.0 / math.sqrt(hidden)
    o = hidden * n + hidden
    theta[o:o + hidden] = rng.uniform(-lim2, lim2, size=hidden)
    return WavefunctionAnsatz(n, hidden, theta)


def configuration_index(spins) -> int:
    return spins_to_index(spins)


def all_configurations(n: int) -> np.ndarray:
    return spin_table(n)
