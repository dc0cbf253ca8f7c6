"""Computational-basis bookkeeping for n spins.

Index ``x`` encodes spin ``i`` in bit ``i``: bit 0 means sigma_z = +1,
bit 1 means sigma_z = -1.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def spin_table(n: int) -> np.ndarray:
    """(2**n, n) array of +-1 spins; row x holds the spins of index x."""
    idx = np.arange(1 << n)[:, None]
    bits = (idx >> np.arange(n)[None, :]) & 1
    table = (1 - 2 * bits).astype(np.float64)
    table.flags.writeable = False
    return table


@lru_cache(maxsize=32)
def flip_table(n: int) -> np.ndarray:
    """(2**n, n) array; entry [x, i] is the index of x with spin i flipped."""
    idx = np.arange(1 << n)[:, None]
    table = idx ^ (1 << np.arange(n))[None, :]
    table.flags.writeable = False
    return table


def index_to_spins(index: int, n: int) -> np.ndarray:
    if not 0 <= index < (1 << n):
        raise ValueError(f"index {index} out of range for {n} spins")
    return np.array([1 - 2 * ((index >> i) & 1) for i in range(n)], dtype=np.float64)


def spins_to_index(spins) -> int:
    index = 0
    for i, s in enumerate(spins):
        if s == -1:
            index |= 1 << i
        elif s != 1:
            raise ValueError(f"spin values must be +1 or -1, got {s!r}")
    return index
