"""Pure-Python (numpy) implementations of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them loop for
loop. Both share one calling convention so ``nqdt.kernels`` can swap them.

Parameter vector layout for a one-hidden-layer network with ``n`` inputs and
``hidden`` units::

    [ W1 (hidden x n, row-major) | b1 (hidden) | w2 (hidden) | b2 (1) ]
"""
from __future__ import annotations

import math

import numpy as np

from ._basis import flip_table, spin_table

NORM_FLOOR = 1e-300


def _unpack(theta, n, hidden):
    nw = hidden * n
    W1 = theta[:nw].reshape(hidden, n)
    b1 = theta[nw:nw + hidden]
    w2 = theta[nw + hidden:nw + 2 * hidden]
    b2 = theta[nw + 2 * hidden]
    return W1, b1, w2, b2


def amplitudes(theta, n, hidden):
    W1, b1, w2, b2 = _unpack(theta, n, hidden)
    pre = spin_table(n) @ W1.T + b1
    return np.tanh(np.maximum(pre, 0.0) @ w2 + b2)


def value_and_grad(theta, n, hidden, diag, tw, r1_deltas, r1_states,
                   pen_lams, pen_states, grad):
    """Rayleigh quotient (plus optional overlap penalties) and its gradient.

    Returns ``(energy, norm_sq, overlap, loss)`` and writes d(loss)/d(theta)
    into ``grad``. ``r1_states`` and ``pen_states`` rows must be unit vectors.
    On a degenerate state (norm_sq below the floor) the gradient is zeroed
    and the energy is NaN.
    """
    W1, b1, w2, b2 = _unpack(theta, n, hidden)
    X = spin_table(n)
    pre = X @ W1.T + b1
    hid = np.maximum(pre, 0.0)
    psi = np.tanh(hid @ w2 + b2)
    Z = float(psi @ psi)
    if not Z > NORM_FLOOR:
        grad[:] = 0.0
        return math.nan, Z, math.nan, math.nan

    hpsi = diag * psi + tw * psi[flip_table(n)].sum(axis=1)
    for delta, u in zip(r1_deltas, r1_states):
        hpsi += (delta * float(u @ psi)) * u
    energy = float(psi @ hpsi) / Z
    gpsi = 2.0 * (hpsi - energy * psi) / Z

    loss = energy
    overlap = 0.0
    for lam, q in zip(pen_lams, pen_states):
        ov = float(q @ psi)
        o = ov * ov / Z
        overlap += o
        loss += lam * o
        gpsi += lam * (2.0 * ov * q - 2.0 * o * psi) / Z

    gout = gpsi * (1.0 - psi * psi)
    gpre = np.outer(gout, w2) * (pre > 0.0)
    nw = hidden * n
    grad[:nw] = (gpre.T @ X).ravel()
    grad[nw:nw + hidden] = gpre.sum(axis=0)
    grad[nw + hidden:nw + 2 * hidden] = hid.T @ gout
    grad[nw + 2 * hidden] = gout.sum()
    return energy, Z, overlap, loss


def rmsprop_step(theta, grad, sq, lr, decay, eps):
    sq *= decay
    sq += (1.0 - decay) * grad * grad
    theta -= lr * grad / (np.sqrt(sq) + eps)


def tred2(V):
    """Householder reduction of the symmetric matrix in ``V`` (in place).

    On return ``V`` holds the orthogonal transformation and the returned
    ``(d, e)`` are the diagonal and subdiagonal (``e[0] == 0``) of the
    tridiagonal matrix.
    """
    n = V.shape[0]
    d = V[n - 1].copy()
    e = np.zeros(n)
    for i in range(n - 1, 0, -1):
        scale = float(np.abs(d[:i]).sum())
        h = 0.0
        if scale == 0.0:
            e[i] = d[i - 1]
            d[:i] = V[i - 1, :i]
            V[i, :i] = 0.0
            V[:i, i] = 0.0
        else:
            d[:i] /= scale
            h = float(d[:i] @ d[:i])
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h -= f * g
            d[i - 1] = f - g
            V[:i, i] = d[:i]
            L = np.tril(V[:i, :i])
            e[:i] = L @ d[:i] + np.tril(L, -1).T @ d[:i]
            e[:i] /= h
            f = float(e[:i] @ d[:i])
            hh = f / (h + h)
            e[:i] -= hh * d[:i]
            upd = np.outer(e[:i], d[:i]) + np.outer(d[:i], e[:i])
            V[:i, :i] -= np.tril(upd)
            d[:i] = V[i - 1, :i]
            V[i, :i] = 0.0
        d[i] = h

    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            dk = V[:i + 1, i + 1] / h
            g = V[:i + 1, i + 1] @ V[:i + 1, :i + 1]
            V[:i + 1, :i + 1] -= np.outer(dk, g)
        V[:i + 1, i + 1] = 0.0
    d[:] = V[n - 1]
    V[n - 1] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0
    return d, e


def tql2(d, e, V, max_iter=60):
    """Implicit-shift QL iteration on a symmetric tridiagonal matrix.

    ``d``/``e`` as returned by :func:`tred2`; rotations are accumulated into
    the columns of ``V``. Eigenvalues are left unsorted in ``d``. Returns
    ``False`` if some eigenvalue needed more than ``max_iter`` sweeps.
    """
    n = d.shape[0]
    e[:n - 1] = e[1:].copy()
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0 ** -52
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    return False
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2:] -= h
                f += h
                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    vi = V[:, i].copy()
                    vi1 = V[:, i + 1]
                    V[:, i] = c * vi - s * vi1
                    V[:, i + 1] = s * vi + c * vi1
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if not abs(e[l]) > eps * tst1:
                    break
        d[l] += f
        e[l] = 0.0
    return True
