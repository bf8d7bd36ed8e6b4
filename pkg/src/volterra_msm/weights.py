"""Reducible quadrature generated by a multistep method.

The method plus the interpolatory starting rule turn into a quadrature
``phi_n = h * sum_{s <= n-mu} w_{ns} psi_s``. For ``s >= m`` the weights
depend only on ``n - mu - s`` (they are the gamma sequence); the first m
columns are obtained by running the defining convolution recursion forward.
Only those two pieces are stored, never the dense N x N table.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .errors import LengthMismatch
from .methods import MultistepMethod, check_admitted
from .polyalg import Polynomial, SeriesCoeffs, series_divide


@functools.lru_cache(maxsize=8)
def _exact_start_rows(m: int) -> tuple[tuple[Fraction, ...], ...]:
    # Gauss-Jordan on the moment system sum_s w_s s^q = r^(q+1)/(q+1) in
    # rationals; the Vandermonde matrix on 0..m-1 is too ill-conditioned
    # at m = 7, 8 for a float solve to stay at rounding level.
    rows = []
    for r in range(1, m + 1):
        A = [[Fraction(s) ** q for s in range(m)] + [Fraction(r ** (q + 1), q + 1)] for q in range(m)]
        for k in range(m):
            piv = next(i for i in range(k, m) if A[i][k] != 0)
            A[k], A[piv] = A[piv], A[k]
            inv = 1 / A[k][k]
            A[k] = [v * inv for v in A[k]]
            for i in range(m):
                if i != k and A[i][k] != 0:
                    f = A[i][k]
                    A[i] = [vi - f * vk for vi, vk in zip(A[i], A[k])]
        rows.append(tuple(A[q][m] for q in range(m)))
    return tuple(rows)


def starting_weights(m: int) -> np.ndarray:
    """Interpolatory weights on nodes 0..m-1, rows r = 1..m.

    Row ``r`` integrates every polynomial of degree <= m-1 exactly over
    ``[0, r]`` in index units. The r = m row is kept because the starting
    system of the solver needs it. Weights are exact rationals rounded once.
    """
    if not 1 <= m <= 8:
        raise ValueError("starting weights are provided for 1 <= m <= 8")
    return np.array([[float(v) for v in row] for row in _exact_start_rows(m)])


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Quadrature weights w_{ns} for m+mu <= n <= N, 0 <= s <= n-mu."""

    method: MultistepMethod
    N: int
    start_weights: np.ndarray  # rows r = 1..m, columns s = 0..m-1
    gamma: SeriesCoeffs  # length N+1
    start_cols: np.ndarray  # (N+1) x m, start_cols[n, s] = w_{ns} for s < m

    @property
    def n_min(self) -> int:
        return self.method.m + self.method.mu

    def weight(self, n: int, s: int) -> float:
        m, mu = self.method.m, self.method.mu
        if not (self.n_min <= n <= self.N and 0 <= s <= n - mu):
            raise IndexError(f"w[{n},{s}] outside the realised table")
        if s < m:
            return float(self.start_cols[n, s])
        return float(self.gamma[n - mu - s])

    def row(self, n: int) -> np.ndarray:
        """All weights w_{n,0..n-mu}."""
        m, mu = self.method.m, self.method.mu
        if not self.n_min <= n <= self.N:
            raise IndexError(f"row {n} outside {self.n_min}..{self.N}")
        top = n - mu
        out = np.empty(top + 1)
        out[:m] = self.start_cols[n]
        out[m:] = self.gamma.values[top - m :: -1][: top + 1 - m]
        return out

    def sup_abs(self) -> float:
        m, mu = self.method.m, self.method.mu
        band = np.abs(self.gamma.values[: self.N - mu - m + 1]).max()
        return float(max(band, np.abs(self.start_cols[self.n_min :]).max()))

    def start_weight_sum_max(self) -> float:
        """max over n = m+mu..N of sum_{s<m} |w_{ns}|."""
        return float(np.abs(self.start_cols[self.n_min :]).sum(axis=1).max())


def _build(method: MultistepMethod, N: int, backend=None) -> WeightTable:
    m, mu = method.m, method.mu
    if N < m + mu:
        raise LengthMismatch(f"need N >= m + mu = {m + mu}, got {N}")
    wst = starting_weights(m)
    gamma = series_divide(Polynomial(method.beta), Polynomial(method.alpha), N + 1)
    cols = kernels.start_columns(method.alpha, method.beta, mu, wst[: m - 1], N, backend=backend)
    for arr in (wst, cols):
        arr.setflags(write=False)
    return WeightTable(method, N, wst, gamma, cols)


def running_weights(method: MultistepMethod, N: int, backend=None) -> WeightTable:
    """Weight table for an admitted method (raises MethodNotAdmitted otherwise)."""
    check_admitted(method)
    return _build(method, N, backend)


class ForwardIntegral(NamedTuple):
    recursive: float
    weighted: float


def integrate_forward(method: MultistepMethod, psi, h: float, backend=None) -> ForwardIntegral:
    """phi_n from samples psi_0..psi_{n-mu}, by recursion and by weights.

    Both values come from the same quadrature and must agree to rounding.
    Works for any method; admissibility is not required for the identity.
    """
    psi = np.asarray(psi, dtype=float)
    m, mu = method.m, method.mu
    n = len(psi) - 1 + mu
    if psi.ndim != 1 or n < m + mu:
        raise LengthMismatch(f"need at least {m + 1} samples, got {psi.shape}")
    wst = starting_weights(m)
    phi = kernels.integrate_recursive(method.a, method.b, wst[: m - 1], psi, h, n, backend=backend)
    table = _build(method, n, backend)
    return ForwardIntegral(float(phi[n]), float(h * (table.row(n) @ psi)))


def local_truncation_error(
    method: MultistepMethod,
    psi: Callable[[np.ndarray], np.ndarray],
    antiderivative: Callable[[np.ndarray], np.ndarray],
    y: float,
    h: float,
) -> float:
    """sum_j a_j phi(y + j h) - h sum_j b_j psi(y + j h)."""
    x = y + h * np.arange(method.m + 1)
    a = np.asarray(method.a)
    b = np.asarray(method.b)
    return float(a @ antiderivative(x) - h * (b @ psi(x)))
