"""Hot inner loops, each in two flavours.

``*_nb`` functions are compiled with numba (when available); ``*_np``
functions are the pure numpy/scipy path. The public wrappers at the bottom
dispatch on :data:`volterra_msm._accel.USE_NUMBA` unless an explicit
``backend`` is passed, which is what the benchmark and the backend-parity
tests do.

Conventions shared by the march kernels: ``K`` holds kernel values for a
block of rows, ``K[i, s] = k(x_{n_lo + i}, x_s)``; ``u`` is the global
solution array indexed by grid node; a return value of ``-1`` means success,
anything else is the row ``n`` at which the diagonal kernel value dropped
below :data:`DIAG_MIN`.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from . import _accel
from ._accel import njit

DIAG_MIN = 0.5


# -- power series ----------------------------------------------------------


@njit
def _series_divide_nb(num, den, n):
    out = np.zeros(n)
    d = den.shape[0]
    inv0 = 1.0 / den[0]
    for k in range(n):
        acc = num[k] if k < num.shape[0] else 0.0
        jmax = min(k, d - 1)
        for j in range(1, jmax + 1):
            acc -= den[j] * out[k - j]
        out[k] = acc * inv0
    return out


def _series_divide_np(num, den, n):
    if n == 0 or num.shape[0] == 0:
        return np.zeros(n)
    impulse = np.zeros(n)
    impulse[0] = 1.0
    return lfilter(num, den, impulse)


# -- start columns of the running weights ------------------------------------


@njit
def _start_columns_nb(alpha, beta, mu, wtil, N):
    m = alpha.shape[0] - 1
    nb = beta.shape[0]
    W = np.zeros((N + 1, m))
    for t in range(1, min(m, N + 1)):
        for s in range(m):
            W[t, s] = wtil[t - 1, s]
    inv0 = 1.0 / alpha[0]
    for n in range(m, N + 1):
        for s in range(m):
            k = n - mu - s
            acc = beta[k] if 0 <= k < nb else 0.0
            for j in range(1, m + 1):
                acc -= alpha[j] * W[n - j, s]
            W[n, s] = acc * inv0
    return W


def _start_columns_np(alpha, beta, mu, wtil, N):
    m = alpha.shape[0] - 1
    W = np.zeros((N + 1, m))
    if m == 0:
        return W
    # Writing x_t = w_{ts}, the defining equations say (alpha * x)_n = g_n for
    # n >= m. Extending g to n < m by the seeds makes x = g / alpha a plain
    # series division, which lfilter does in C.
    for s in range(m):
        seeds = np.zeros(m)
        seeds[1:] = wtil[:, s]
        g = np.zeros(N + 1)
        head = np.convolve(alpha, seeds)[:m]
        g[: min(m, N + 1)] = head[: min(m, N + 1)]
        lo = mu + s
        idx = np.arange(max(m, lo), min(N + 1, lo + beta.shape[0]))
        g[idx] = beta[idx - lo]
        W[:, s] = lfilter([1.0], alpha, g)
    return W


# -- weight-form march -------------------------------------------------------


@njit
def _march_weightform_nb(K, n_lo, n_hi, gamma, Wst, f, h, m, mu, u):
    g0 = gamma[0]
    for n in range(n_lo, n_hi):
        i = n - n_lo
        top = n - mu
        acc = 0.0
        for s in range(m):
            acc += Wst[n, s] * K[i, s] * u[s]
        for s in range(m, top):
            acc += gamma[top - s] * K[i, s] * u[s]
        d = K[i, top]
        if abs(d) < 0.5:
            return n
        u[top] = (f[n] / h - acc) / (g0 * d)
    return -1


def _march_weightform_np(K, n_lo, n_hi, gamma, Wst, f, h, m, mu, u):
    g0 = gamma[0]
    for n in range(n_lo, n_hi):
        i = n - n_lo
        top = n - mu
        row = K[i]
        acc = np.dot(Wst[n, :m] * row[:m], u[:m])
        if top > m:
            acc += np.dot(gamma[top - m : 0 : -1] * row[m:top], u[m:top])
        d = row[top]
        if abs(d) < DIAG_MIN:
            return n
        u[top] = (f[n] / h - acc) / (g0 * d)
    return -1


# -- recursive march (multistep recursion rebuilt for every row) -------------


@njit
def _march_recursive_nb(K, n_lo, n_hi, a, b, mu, wtil, f, h, u):
    m = a.shape[0] - 1
    q = m - mu
    phi = np.zeros(n_hi + 1)
    psi = np.zeros(n_hi + 1)
    for n in range(n_lo, n_hi):
        i = n - n_lo
        top = n - mu
        for s in range(top):
            psi[s] = K[i, s] * u[s]
        phi[0] = 0.0
        for r in range(1, m):
            acc = 0.0
            for s in range(m):
                acc += wtil[r - 1, s] * psi[s]
            phi[r] = h * acc
        for r in range(n - m):
            acc = 0.0
            for j in range(q + 1):
                acc += b[j] * psi[r + j]
            acc *= h
            for j in range(m):
                acc -= a[j] * phi[r + j]
            phi[r + m] = acc / a[m]
        phi[n] = f[n]
        r = n - m
        lhs = 0.0
        for j in range(m + 1):
            lhs += a[j] * phi[r + j]
        for j in range(q):
            lhs -= h * b[j] * psi[r + j]
        p = lhs / (h * b[q])
        d = K[i, top]
        if abs(d) < 0.5:
            return n
        u[top] = p / d
    return -1


def _march_recursive_np(K, n_lo, n_hi, a, b, mu, wtil, f, h, u):
    m = a.shape[0] - 1
    q = m - mu
    alpha = a[::-1].copy()
    bq = b[: q + 1]
    for n in range(n_lo, n_hi):
        i = n - n_lo
        top = n - mu
        psi = np.zeros(n + 1)
        psi[:top] = K[i, :top] * u[:top]
        seeds = np.zeros(m)
        if m > 1:
            seeds[1:] = h * (wtil @ psi[:m])
        # rhs of the recursion for r = 0..n-m-1, then phi = rhs / alpha
        g = np.zeros(n)
        g[:m] = np.convolve(alpha, seeds)[:m]
        if n > m:
            g[m:] = h * np.correlate(psi[: n - m - 1 + q + 1], bq, mode="valid")[: n - m]
        phi = np.empty(n + 1)
        phi[:n] = lfilter([1.0], alpha, g)
        phi[n] = f[n]
        r = n - m
        lhs = np.dot(a, phi[r : r + m + 1]) - h * np.dot(bq[:q], psi[r : r + q])
        d = K[i, top]
        if abs(d) < DIAG_MIN:
            return n
        u[top] = lhs / (h * bq[q]) / d
    return -1


# -- forward quadrature by recursion ------------------------------------------


@njit
def _integrate_recursive_nb(a, b, wtil, psi, h, n):
    m = a.shape[0] - 1
    phi = np.zeros(n + 1)
    for r in range(1, m):
        acc = 0.0
        for s in range(m):
            acc += wtil[r - 1, s] * psi[s]
        phi[r] = h * acc
    for r in range(n - m + 1):
        acc = 0.0
        for j in range(m + 1):
            if r + j < psi.shape[0]:
                acc += b[j] * psi[r + j]
        acc *= h
        for j in range(m):
            acc -= a[j] * phi[r + j]
        phi[r + m] = acc / a[m]
    return phi


def _integrate_recursive_np(a, b, wtil, psi, h, n):
    m = a.shape[0] - 1
    alpha = a[::-1].copy()
    seeds = np.zeros(m)
    if m > 1:
        seeds[1:] = h * (wtil @ psi[:m])
    padded = np.zeros(n + 1)
    k = min(n + 1, psi.shape[0])
    padded[:k] = psi[:k]
    g = np.zeros(n + 1)
    g[:m] = np.convolve(alpha, seeds)[:m]
    g[m:] = h * np.correlate(padded, b, mode="valid")[: n - m + 1]
    return lfilter([1.0], alpha, g)


# -- dispatch ----------------------------------------------------------------

_IMPLS = {
    "series_divide": (_series_divide_nb, _series_divide_np),
    "start_columns": (_start_columns_nb, _start_columns_np),
    "march_weightform": (_march_weightform_nb, _march_weightform_np),
    "march_recursive": (_march_recursive_nb, _march_recursive_np),
    "integrate_recursive": (_integrate_recursive_nb, _integrate_recursive_np),
}


def impl(name: str, backend: str | None = None):
    """Return the implementation of kernel ``name`` for ``backend``."""
    nb_fn, np_fn = _IMPLS[name]
    if backend is None:
        backend = _accel.backend_name()
    if backend == "numba":
        if not _accel.HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return nb_fn
    if backend == "numpy":
        return np_fn
    raise ValueError(f"unknown backend {backend!r}")


def series_divide(num, den, n, backend=None):
    return impl("series_divide", backend)(
        np.ascontiguousarray(num, dtype=float), np.ascontiguousarray(den, dtype=float), int(n)
    )


def start_columns(alpha, beta, mu, wtil, N, backend=None):
    return impl("start_columns", backend)(
        np.ascontiguousarray(alpha, dtype=float),
        np.ascontiguousarray(beta, dtype=float),
        int(mu),
        np.ascontiguousarray(wtil, dtype=float),
        int(N),
    )


def march_weightform(K, n_lo, n_hi, gamma, Wst, f, h, m, mu, u, backend=None):
    return impl("march_weightform", backend)(
        K, int(n_lo), int(n_hi), gamma, Wst, f, float(h), int(m), int(mu), u
    )


def march_recursive(K, n_lo, n_hi, a, b, mu, wtil, f, h, u, backend=None):
    return impl("march_recursive", backend)(
        K, int(n_lo), int(n_hi), a, b, int(mu), wtil, f, float(h), u
    )


def integrate_recursive(a, b, wtil, psi, h, n, backend=None):
    return impl("integrate_recursive", backend)(
        np.ascontiguousarray(a, dtype=float),
        np.ascontiguousarray(b, dtype=float),
        np.ascontiguousarray(wtil, dtype=float),
        np.ascontiguousarray(psi, dtype=float),
        float(h),
        int(n),
    )
