"""Compiled inner loops: UCB ascent over the unit ball and Dykstra projection.

``pga_ball`` mirrors the batched numpy loop in ``action_sets.maximize_ucb``
row by row.
"""

import math

import numpy as np
from numba import njit

_E = math.e


@njit(cache=True)
def _eval(x, est, inv, c, root_d, log_scale, mode, grad):
    d = x.shape[0]
    q = 0.0
    val = 0.0
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += inv[i, j] * x[j]
        grad[i] = s
        q += x[i] * s
        val += x[i] * est[i]
    if q < -1e-12:
        raise ArithmeticError("negative quadratic form in UCB index")
    if q <= 0.0:
        for i in range(d):
            grad[i] = est[i]
        return val
    w = math.sqrt(q)
    if mode == 2:
        lvl = 0.0
        w_dlvl = 0.0
    else:
        log_z = log_scale + 2.0 * math.log(w)
        if mode == 0:
            lp = log_z if log_z > 0.0 else 0.0
            lvl = math.sqrt(math.log(_E + lp))
            w_dlvl = 1.0 / (lvl * (_E + lp)) if log_z > 0.0 else 0.0
        else:
            lvl = math.sqrt(log_z if log_z > 1.0 else 1.0)
            w_dlvl = 1.0 / lvl if log_z > 1.0 else 0.0
    val += c * (root_d + lvl) * w
    coef = c * (root_d + lvl + w_dlvl) / w
    for i in range(d):
        grad[i] = est[i] + coef * grad[i]
    return val


@njit(cache=True)
def _ascent_step(x, g, eta, out):
    d = x.shape[0]
    n2 = 0.0
    for i in range(d):
        out[i] = x[i] + eta * g[i]
        n2 += out[i] * out[i]
    if n2 > 1.0:
        n = math.sqrt(n2)
        for i in range(d):
            out[i] /= n


@njit(cache=True)
def _certificate(x, g, buf):
    _ascent_step(x, g, 1.0, buf)
    s = 0.0
    for i in range(x.shape[0]):
        s += (buf[i] - x[i]) ** 2
    return 2.0 * math.sqrt(s)


@njit(cache=True)
def pga_ball(X, est, inv, c, root_d, log_scale, mode, slack, max_iter, step, armijo, shrink):
    """Ascend every row of ``X`` in place; return (iterations, best row, value, certificate)."""
    k, d = X.shape
    F = np.empty(k)
    G = np.empty((k, d))
    eta = np.full(k, step)
    cert = np.empty(k)
    active = np.empty(k, dtype=np.bool_)
    y = np.empty(d)
    gy = np.empty(d)
    buf = np.empty(d)
    n_active = 0
    for r in range(k):
        F[r] = _eval(X[r], est, inv, c, root_d, log_scale, mode, G[r])
        cert[r] = _certificate(X[r], G[r], buf)
        active[r] = cert[r] > slack
        n_active += active[r]
    it = 0
    while it < max_iter and n_active > 0:
        it += 1
        n_active = 0
        for r in range(k):
            if not active[r]:
                continue
            _ascent_step(X[r], G[r], eta[r], y)
            fy = _eval(y, est, inv, c, root_d, log_scale, mode, gy)
            lin = 0.0
            for i in range(d):
                lin += G[r, i] * (y[i] - X[r, i])
            if fy >= F[r] + armijo * lin:
                for i in range(d):
                    X[r, i] = y[i]
                    G[r, i] = gy[i]
                F[r] = fy
                eta[r] = min(eta[r] * 2.0, 1e6)
            else:
                eta[r] *= shrink
            cert[r] = _certificate(X[r], G[r], buf)
            active[r] = cert[r] > slack and eta[r] > 1e-14
            n_active += active[r]
    best = 0
    for r in range(1, k):
        if F[r] > F[best]:
            best = r
    return it, best, F[best], cert[best]


@njit(cache=True)
def dykstra(p, A, b, tol, max_cycles):
    """Project ``p`` onto the unit ball intersected with ``A x <= b``; return (x, cycles)."""
    m, d = A.shape
    norms2 = np.empty(m)
    for i in range(m):
        s = 0.0
        for j in range(d):
            s += A[i, j] * A[i, j]
        norms2[i] = s
    x = p.copy()
    x_start = np.empty(d)
    y = np.empty(d)
    corr = np.zeros((m + 1, d))
    for cycle in range(max_cycles):
        for j in range(d):
            x_start[j] = x[j]
        n2 = 0.0
        for j in range(d):
            y[j] = x[j] + corr[0, j]
            n2 += y[j] * y[j]
        scale = 1.0 / math.sqrt(n2) if n2 > 1.0 else 1.0
        for j in range(d):
            x[j] = y[j] * scale
            corr[0, j] = y[j] - x[j]
        for i in range(m):
            excess = -b[i]
            for j in range(d):
                y[j] = x[j] + corr[i + 1, j]
                excess += A[i, j] * y[j]
            f = excess / norms2[i] if excess > 0.0 else 0.0
            for j in range(d):
                x[j] = y[j] - f * A[i, j]
                corr[i + 1, j] = y[j] - x[j]
        moved = 0.0
        for j in range(d):
            moved = max(moved, abs(x[j] - x_start[j]))
        if moved <= tol:
            feasible = True
            n2 = 0.0
            for j in range(d):
                n2 += x[j] * x[j]
            if n2 > (1.0 + tol) ** 2:
                feasible = False
            for i in range(m):
                s = 0.0
                for j in range(d):
                    s += A[i, j] * x[j]
                if s > b[i] + tol:
                    feasible = False
            if feasible:
                return x, cycle + 1
    return x, max_cycles
