# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``.

Same signatures and semantics; see the Python module for documentation.
"""
import numpy as np
from libc.math cimport tanh, sqrt, fabs, hypot, NAN

cdef double NORM_FLOOR = 1e-300


cdef void _forward(const double[::1] theta, int n, int hidden, double[:, ::1] pre, double[::1] psi) noexcept nogil:
    """Pre-activations row by row: clearing the top set bit of x flips one spin back to +1."""
    cdef Py_ssize_t M = 1 << n
    cdef Py_ssize_t x, a, i, top
    cdef Py_ssize_t b1o = hidden * n, w2o = b1o + hidden, b2o = w2o + hidden
    cdef double out
    for a in range(hidden):
        out = theta[b1o + a]
        for i in range(n):
            out += theta[a * n + i]
        pre[0, a] = out
    top = 0
    for x in range(1, M):
        if x >> (top + 1):
            top += 1
        for a in range(hidden):
            pre[x, a] = pre[x ^ (1 << top), a] - 2.0 * theta[a * n + top]
    for x in range(M):
        out = theta[b2o]
        for a in range(hidden):
            if pre[x, a] > 0.0:
                out += theta[w2o + a] * pre[x, a]
        psi[x] = tanh(out)


def amplitudes(const double[::1] theta, int n, int hidden):
    pre_arr = np.empty((1 << n, hidden))
    psi_arr = np.empty(1 << n)
    _forward(theta, n, hidden, pre_arr, psi_arr)
    return psi_arr


def value_and_grad(const double[::1] theta, int n, int hidden,
                   const double[::1] diag, double tw,
                   const double[::1] r1_deltas, const double[:, ::1] r1_states,
                   const double[::1] pen_lams, const double[:, ::1] pen_states,
                   double[::1] grad):
    cdef Py_ssize_t M = 1 << n
    cdef Py_ssize_t P = hidden * n + 2 * hidden + 1
    cdef Py_ssize_t b1o = hidden * n, w2o = b1o + hidden, b2o = w2o + hidden
    cdef Py_ssize_t x, a, i, k
    cdef double acc, Z, num, energy, c, ov, o, lam, go, sp, loss, overlap
    pre_arr = np.empty((M, hidden))
    psi_arr = np.empty(M)
    hpsi_arr = np.empty(M)
    gpsi_arr = np.empty(M)
    gpre_arr = np.empty(hidden)
    gWt_arr = np.zeros((n, hidden))
    cdef double[:, ::1] pre = pre_arr
    cdef double[::1] psi = psi_arr
    cdef double[::1] hpsi = hpsi_arr
    cdef double[::1] gpsi = gpsi_arr
    cdef double[::1] gpre = gpre_arr
    cdef double[:, ::1] gWt = gWt_arr

    _forward(theta, n, hidden, pre, psi)
    Z = 0.0
    for x in range(M):
        Z += psi[x] * psi[x]

    if not Z > NORM_FLOOR:
        for k in range(P):
            grad[k] = 0.0
        return NAN, Z, NAN, NAN

    for x in range(M):
        acc = 0.0
        for i in range(n):
            acc += psi[x ^ (1 << i)]
        hpsi[x] = diag[x] * psi[x] + tw * acc
    for k in range(r1_deltas.shape[0]):
        c = 0.0
        for x in range(M):
            c += r1_states[k, x] * psi[x]
        c *= r1_deltas[k]
        for x in range(M):
            hpsi[x] += c * r1_states[k, x]

    num = 0.0
    for x in range(M):
        num += psi[x] * hpsi[x]
    energy = num / Z
    for x in range(M):
        gpsi[x] = 2.0 * (hpsi[x] - energy * psi[x]) / Z

    loss = energy
    overlap = 0.0
    for k in range(pen_lams.shape[0]):
        lam = pen_lams[k]
        ov = 0.0
        for x in range(M):
            ov += pen_states[k, x] * psi[x]
        o = ov * ov / Z
        overlap += o
        loss += lam * o
        for x in range(M):
            gpsi[x] += lam * (2.0 * ov * pen_states[k, x] - 2.0 * o * psi[x]) / Z

    for k in range(P):
        grad[k] = 0.0
    for x in range(M):
        go = gpsi[x] * (1.0 - psi[x] * psi[x])
        grad[b2o] += go
        for a in range(hidden):
            if pre[x, a] > 0.0:
                grad[w2o + a] += go * pre[x, a]
                gpre[a] = go * theta[w2o + a]
            else:
                gpre[a] = 0.0
        for a in range(hidden):
            grad[b1o + a] += gpre[a]
        for i in range(n):
            sp = -1.0 if (x >> i) & 1 else 1.0
            for a in range(hidden):
                gWt[i, a] += sp * gpre[a]
    for a in range(hidden):
        for i in range(n):
            grad[a * n + i] = gWt[i, a]
    return energy, Z, overlap, loss


def rmsprop_step(double[::1] theta, const double[::1] grad, double[::1] sq,
                 double lr, double decay, double eps):
    cdef Py_ssize_t j
    cdef double g
    for j in range(theta.shape[0]):
        g = grad[j]
        sq[j] = decay * sq[j] + (1.0 - decay) * g * g
        theta[j] -= lr * g / (sqrt(sq[j]) + eps)


def tred2(double[:, ::1] V):
    cdef Py_ssize_t n = V.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double scale, h, f, g, hh
    d_arr = np.empty(n)
    e_arr = np.zeros(n)
    cdef double[::1] d = d_arr
    cdef double[::1] e = e_arr
    for j in range(n):
        d[j] = V[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += fabs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
                V[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                for k in range(j + 1, i):
                    g += V[k, j] * d[k]
                    e[k] += V[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    V[k, j] -= (f * e[k] + g * d[k])
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h

    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = V[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += V[k, i + 1] * V[k, j]
                for k in range(i + 1):
                    V[k, j] -= g * d[k]
        for k in range(i + 1):
            V[k, i + 1] = 0.0
    for j in range(n):
        d[j] = V[n - 1, j]
        V[n - 1, j] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0
    return d_arr, e_arr


def tql2(double[::1] d, double[::1] e, double[:, ::1] V, int max_iter=60):
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, k, l, m
    cdef int it
    cdef double f = 0.0, tst1 = 0.0, eps = 2.220446049250313e-16
    cdef double g, p, r, dl1, h, c, c2, c3, el1, s, s2
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    for l in range(n):
        tst1 = max(tst1, fabs(d[l]) + fabs(e[l]))
        m = l
        while m < n:
            if fabs(e[m]) <= eps * tst1:
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
                r = hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f = f + h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = V[k, i + 1]
                        V[k, i + 1] = s * V[k, i] + c * h
                        V[k, i] = c * V[k, i] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if not fabs(e[l]) > eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return True
