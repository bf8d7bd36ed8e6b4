"""Small dense kernels: pivoted linear solves, polynomial roots, and
truncated power-series arithmetic.

Everything here operates on tiny objects (degree <= ~8, systems of size
<= 8) except the series routines, which may be asked for tens of thousands
of coefficients and therefore go through :mod:`volterra_msm.kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import NoConvergence, SingularMatrix, ZeroConstantTerm

PIVOT_RTOL = 1e-14
ABERTH_MAXITER = 200


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with coefficients in ascending degree.

    Trailing (highest-degree) zeros are trimmed on construction, so the zero
    polynomial has ``coeffs == ()``.
    """

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        c = [float(v) for v in coeffs]
        while c and c[-1] == 0.0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def __call__(self, x):
        acc = np.zeros_like(np.asarray(x, dtype=np.result_type(x, float)))
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def deriv(self) -> "Polynomial":
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=float)

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coeffs)})"


@dataclass(frozen=True)
class SeriesCoeffs:
    """First ``declared_length`` coefficients of a formal power series."""

    values: np.ndarray
    declared_length: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.declared_length:
            raise ValueError(
                f"series has {v.shape} values, declared length {self.declared_length}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.declared_length

    def __getitem__(self, idx):
        return self.values[idx]

    def __iter__(self):
        return iter(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _as_poly(p) -> Polynomial:
    return p if isinstance(p, Polynomial) else Polynomial(p)


def solve_dense(matrix, rhs) -> np.ndarray:
    """Gaussian elimination with partial pivoting.

    Raises :class:`SingularMatrix` as soon as a pivot falls below
    ``1e-14 * ||matrix||_inf``.
    """
    A = np.array(matrix, dtype=float)
    b = np.array(rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"need a square matrix, got shape {A.shape}")
    m = A.shape[0]
    if b.shape != (m,):
        raise ValueError(f"rhs shape {b.shape} does not match matrix {A.shape}")
    scale = np.abs(A).sum(axis=1).max()
    tol = PIVOT_RTOL * scale
    for k in range(m):
        piv = k + int(np.argmax(np.abs(A[k:, k])))
        if not abs(A[piv, k]) >= tol or scale == 0.0:
            raise SingularMatrix(f"pivot {abs(A[piv, k]):.3e} below {tol:.3e} at column {k}")
        if piv != k:
            A[[k, piv]] = A[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        f = A[k + 1 :, k] / A[k, k]
        A[k + 1 :, k:] -= np.outer(f, A[k, k:])
        b[k + 1 :] -= f * b[k]
    x = np.empty(m)
    for k in range(m - 1, -1, -1):
        x[k] = (b[k] - A[k, k + 1 :] @ x[k + 1 :]) / A[k, k]
    return x


def _aberth(c: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """Aberth-Ehrlich iteration on a monic polynomial (ascending coeffs)."""
    n = len(c) - 1
    dc = c[1:] * np.arange(1, n + 1)
    # radius from the Cauchy-type bound max |c_k|^(1/(n-k))
    radius = max(abs(c[k]) ** (1.0 / (n - k)) for k in range(n))
    radius = radius if radius > 0 else 1.0
    theta = 2 * np.pi * (np.arange(n) + rng.uniform(0.1, 0.4)) / n
    z = radius * np.exp(1j * (theta + rng.uniform(-0.05, 0.05, size=n)))
    for _ in range(ABERTH_MAXITER):
        pz = np.polynomial.polynomial.polyval(z, c)
        dpz = np.polynomial.polynomial.polyval(z, dc)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dpz
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            step = ratio / (1.0 - ratio * inv.sum(axis=1))
        step = np.where(pz == 0, 0.0, step)
        if not np.all(np.isfinite(step)):
            return z, False
        z = z - step
        if np.all(np.abs(step) <= 4e-16 * (1.0 + np.abs(z))):
            return z, True
    return z, False


def _residual_ok(c: np.ndarray, z: np.ndarray) -> bool:
    # normwise backward error: |p(z)| <= tol * max|c_k| * sum |z|^k
    bound = 1e-8 * np.abs(c).max() * np.polynomial.polynomial.polyval(np.abs(z), np.ones_like(c))
    return bool(np.all(np.abs(np.polynomial.polynomial.polyval(z, c)) <= bound))


def roots(p) -> np.ndarray:
    """All complex roots of ``p`` (with multiplicity).

    Exact zero roots are split off first; the remaining factor goes through
    Aberth-Ehrlich, falling back to companion-matrix eigenvalues if the
    iteration stalls.
    """
    poly = _as_poly(p)
    if poly.degree < 1:
        raise ValueError("roots() needs degree >= 1")
    c = poly.as_array()
    nzero = int(np.argmax(c != 0.0))
    out = [np.zeros(nzero, dtype=complex)]
    c = c[nzero:]
    if len(c) > 1:
        monic = c / c[-1]
        if len(monic) == 2:
            z = np.array([-monic[0] + 0j])
        else:
            z, converged = _aberth(monic, np.random.default_rng(0x5EED))
            if not (converged and _residual_ok(c, z)):
                z = np.roots(c[::-1]).astype(complex)
                if not _residual_ok(c, z):
                    raise NoConvergence(f"no root set for {poly!r} meets the residual bound")
        out.append(z)
    return np.concatenate(out)


def convolve(a: Sequence[float], b: Sequence[float], n: int | None = None) -> np.ndarray:
    """Cauchy product of two coefficient sequences, optionally truncated to ``n``."""
    full = np.convolve(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if n is None:
        return full
    out = np.zeros(n)
    k = min(n, len(full))
    out[:k] = full[:k]
    return out


def series_divide(num, den, n: int) -> SeriesCoeffs:
    """First ``n`` coefficients of ``num(xi) / den(xi)``."""
    num_c = _as_poly(num).as_array()
    den_c = _as_poly(den).as_array()
    if len(den_c) == 0 or den_c[0] == 0.0:
        raise ZeroConstantTerm("denominator has zero constant term")
    if n < 0:
        raise ValueError("series length must be non-negative")
    return SeriesCoeffs(kernels.series_divide(num_c, den_c, int(n)), int(n))


def series_inverse(p, n: int) -> SeriesCoeffs:
    """First ``n`` coefficients of ``1 / p(xi)``."""
    return series_divide(Polynomial([1.0]), p, n)
