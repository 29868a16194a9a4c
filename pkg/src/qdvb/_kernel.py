"""Compiled per-pixel steady-state kernel used by the propagation inner loop.

Same generator as ``qd_dynamics.liouvillian_batch`` followed by the trace-
closed linear solve, fused into one pass per field point.  The numpy
implementation stays the reference; tests pin the two together.
"""

from __future__ import annotations

import warnings

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is too old; numba falls back to another layer but warns each process
warnings.filterwarnings("ignore", message="The TBB threading layer")

OK = 0
SINGULAR = 1
OUT_OF_RANGE = 2


@njit(cache=True, inline="always")
def _spline4(delta, knots, coeffs, out):
    n_int = knots.shape[0] - 1
    h = knots[1] - knots[0]
    i = int(np.floor((delta - knots[0]) / h))
    if i < 0:
        i = 0
    elif i > n_int - 1:
        i = n_int - 1
    dx = delta - knots[i]
    for comp in range(4):
        v = coeffs[0, i, comp]
        v = v * dx + coeffs[1, i, comp]
        v = v * dx + coeffs[2, i, comp]
        v = v * dx + coeffs[3, i, comp]
        out[comp] = v


@njit(cache=True, inline="always")
def _mm(a, b, out):
    for i in range(4):
        for j in range(4):
            t = 0j
            for k in range(4):
                t += a[i, k] * b[k, j]
            out[i, j] = t


@njit(cache=True, inline="always")
def _mhm(a, b, out):
    """out = a^dag @ b"""
    for i in range(4):
        for j in range(4):
            t = 0j
            for k in range(4):
                t += np.conj(a[k, i]) * b[k, j]
            out[i, j] = t


@njit(cache=True, inline="always")
def _mmh(a, b, out):
    """out = a @ b^dag"""
    for i in range(4):
        for j in range(4):
            t = 0j
            for k in range(4):
                t += a[i, k] * np.conj(b[j, k])
            out[i, j] = t


@njit(cache=True)
def _solve_inplace(a, b):
    """Gaussian elimination with partial pivoting; returns False if singular."""
    n = a.shape[0]
    for k in range(n):
        p = k
        best = abs(a[k, k])
        for r in range(k + 1, n):
            m = abs(a[r, k])
            if m > best:
                best = m
                p = r
        if best == 0.0 or not np.isfinite(best):
            return False
        if p != k:
            for c in range(n):
                tmp = a[k, c]
                a[k, c] = a[p, c]
                a[p, c] = tmp
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp
        inv = 1.0 / a[k, k]
        for r in range(k + 1, n):
            f = a[r, k] * inv
            if f != 0:
                for c in range(k + 1, n):
                    a[r, c] -= f * a[k, c]
                b[r] -= f * b[k]
    for k in range(n - 1, -1, -1):
        s = b[k]
        for c in range(k + 1, n):
            s -= a[k, c] * b[c]
        b[k] = s / a[k, k]
    return True


@njit(cache=True)
def _pixel(f, diag, b_mean, lind, use_tcl, bare, knots, coeffs, delta_max, rho_out):
    d = np.zeros((4, 4), dtype=np.complex128)
    d[1, 0] = f[0]
    d[2, 0] = f[1]
    d[3, 1] = f[2]
    d[3, 2] = f[3]
    xg = d + np.conj(d.T)
    xu = 1j * d - 1j * np.conj(d.T)
    h = b_mean * xg
    for i in range(4):
        h[i, i] += diag[i]
    lm = lind.copy()
    for a in range(4):
        for bb in range(4):
            for c in range(4):
                lm[a + 4 * bb, c + 4 * bb] += -1j * h[a, c]
                lm[c + 4 * a, c + 4 * bb] += 1j * h[bb, a]
    if use_tcl:
        if bare:
            hp = np.zeros((4, 4), dtype=np.complex128)
            for i in range(4):
                hp[i, i] = diag[i]
        else:
            hp = h
        w, v = np.linalg.eigh(hp)
        kv = np.empty(4)
        kg = np.empty((4, 4), dtype=np.complex128)
        ku = np.empty((4, 4), dtype=np.complex128)
        for a in range(4):
            for bb in range(4):
                delta = -(w[a] - w[bb])
                if abs(delta) > delta_max:
                    return OUT_OF_RANGE
                _spline4(delta, knots, coeffs, kv)
                kg[a, bb] = kv[0] + 1j * kv[1]
                ku[a, bb] = kv[2] + 1j * kv[3]
        t1 = np.empty((4, 4), dtype=np.complex128)
        t2 = np.empty((4, 4), dtype=np.complex128)
        xt = np.empty((4, 4), dtype=np.complex128)
        xxt = np.empty((4, 4), dtype=np.complex128)
        m = np.empty((4, 4), dtype=np.complex128)
        for j in range(2):
            x = xg if j == 0 else xu
            k = kg if j == 0 else ku
            _mm(x, v, t1)
            _mhm(v, t1, t2)
            for a in range(4):
                for bb in range(4):
                    t2[a, bb] *= k[a, bb]
            _mm(v, t2, t1)
            _mmh(t1, v, xt)
            _mm(x, xt, xxt)
            _mhm(xt, x, m)
            for a in range(4):
                for bb in range(4):
                    for c in range(4):
                        lm[a + 4 * bb, c + 4 * bb] -= xxt[a, c]
                        lm[c + 4 * a, c + 4 * bb] -= m[bb, a]
                        for dd in range(4):
                            lm[a + 4 * bb, c + 4 * dd] += xt[a, c] * x[dd, bb] + x[a, c] * np.conj(xt[bb, dd])
    for c in range(16):
        lm[0, c] = 0.0
    for i in range(4):
        lm[0, i + 4 * i] = 1.0
    rhs = np.zeros(16, dtype=np.complex128)
    rhs[0] = 1.0
    if not _solve_inplace(lm, rhs):
        return SINGULAR
    for a in range(4):
        for bb in range(4):
            rho_out[a, bb] = rhs[a + 4 * bb]
    return OK


@njit(cache=True, parallel=True)
def steady_states(fields, diag, b_mean, lind, use_tcl, bare, knots, coeffs, delta_max, rho, status):
    for n in prange(fields.shape[0]):
        status[n] = _pixel(fields[n], diag, b_mean, lind, use_tcl, bare, knots, coeffs, delta_max, rho[n])


def set_threads(n: int | None) -> None:
    if n:
        numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))
