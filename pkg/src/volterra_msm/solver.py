"""Noisy-data solver for first-kind Volterra equations
``int_a^x k(x, y) u(y) dy = f(x)`` with ``k(x, x) = 1``.

Two equivalent marches are provided. :func:`solve_weightform` solves the
quadrature equations row by row and is the default; :func:`solve_recursive`
re-runs the multistep recursion for every row exactly as the algorithm is
stated and serves as the oracle for the former.

Kernels and right-hand sides are plain vectorised callables: ``kernel(x, y)``
must broadcast over numpy arrays.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import (
    DiagonalKernelTooSmall,
    LengthMismatch,
    SingularMatrix,
    SingularStartSystem,
)
from .methods import MultistepMethod, check_admitted
from .polyalg import solve_dense
from .weights import WeightTable, _build, starting_weights

log = logging.getLogger(__name__)

Fn = Callable[[np.ndarray], np.ndarray]
Kern = Callable[[np.ndarray, np.ndarray], np.ndarray]

BLOCK_ENTRIES = 1 << 22


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    kernel: Kern
    rhs: Fn
    a: float = 0.0
    b: float = 1.0
    exact_solution: Fn | None = None
    lipschitz_L: float = 0.0
    kernel_sup: float = 1.0
    smoothness_p: int = 1
    rhs_sup: float | None = None

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("need a < b")
        if self.lipschitz_L < 0 or not self.kernel_sup > 0:
            raise ValueError("need lipschitz_L >= 0 and kernel_sup > 0")
        xs = np.linspace(self.a, self.b, 101)
        diag = np.asarray(self.kernel(xs, xs), dtype=float)
        if np.max(np.abs(diag - 1.0)) > 1e-10:
            raise ValueError(f"{self.name}: kernel must satisfy k(x, x) = 1")

    @property
    def length(self) -> float:
        return self.b - self.a

    def grid(self, N: int) -> np.ndarray:
        return self.a + (self.b - self.a) * np.arange(N + 1) / N


@dataclass(frozen=True, eq=False)
class NoisySamples:
    """f_n^delta for n = 1..N; ``values[n - 1]`` belongs to node x_n."""

    values: np.ndarray
    delta: float
    seed: int | None
    N: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.N,):
            raise LengthMismatch(f"expected {self.N} samples, got {v.shape}")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def padded(self) -> np.ndarray:
        """Length N+1 array indexed by node number (index 0 is unused)."""
        out = np.zeros(self.N + 1)
        out[1:] = self.values
        return out

    def restrict(self, N_coarse: int) -> "NoisySamples":
        """Samples on a coarser nested grid (N must be a multiple of N_coarse)."""
        if self.N % N_coarse:
            raise LengthMismatch(f"grid {N_coarse} is not nested in {self.N}")
        stride = self.N // N_coarse
        return NoisySamples(self.padded()[stride::stride], self.delta, self.seed, N_coarse)


def noise_vector(N: int, delta: float, seed: int | None) -> np.ndarray:
    """Uniform perturbations on [-delta, delta] from a counter-based generator."""
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.uniform(-delta, delta, size=N)


def make_samples(problem: Problem, N: int, delta: float, seed: int | None = 0) -> NoisySamples:
    x = problem.grid(N)[1:]
    exact = np.asarray(problem.rhs(x), dtype=float)
    if delta == 0:
        return NoisySamples(exact, 0.0, seed, N)
    return NoisySamples(exact + noise_vector(N, delta, seed), float(delta), seed, N)


@dataclass(frozen=True, eq=False)
class SolveResult:
    method: str
    N: int
    h: float
    grid: np.ndarray
    u: np.ndarray
    u_exact: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray | None:
        return None if self.u_exact is None else np.abs(self.u - self.u_exact)

    @property
    def max_error(self) -> float | None:
        e = self.errors
        return None if e is None else float(e.max())

    def at_nodes(self, x: np.ndarray) -> np.ndarray:
        """Values at grid points ``x`` (which must be nodes of this grid)."""
        idx = np.rint((np.asarray(x, dtype=float) - self.grid[0]) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= len(self.u)):
            raise LengthMismatch("requested points are not nodes of this grid")
        if not np.allclose(self.grid[idx], x, rtol=0, atol=1e-9 * self.h):
            raise LengthMismatch("requested points are not nodes of this grid")
        return self.u[idx]


@functools.lru_cache(maxsize=16)
def _table(method: MultistepMethod, N: int) -> WeightTable:
    return _build(method, N)


def _skips_start(method: MultistepMethod) -> bool:
    return method.m == 1 and method.mu == 0


def starting_values(
    problem: Problem, samples: NoisySamples, method: MultistepMethod
) -> tuple[np.ndarray, float]:
    """Solve the m x m starting system; returns (u_0..u_{m-1}, cond_inf(S_h)).

    One-step methods with mu = 0 need no starting block and get an empty
    array back.
    """
    m = method.m
    if _skips_start(method):
        return np.zeros(0), 1.0
    N = samples.N
    if N < m:
        raise LengthMismatch(f"need N >= m = {m}")
    h = problem.length / N
    x = problem.grid(N)
    S = starting_weights(m) * np.asarray(problem.kernel(x[1 : m + 1, None], x[None, :m]), dtype=float)
    try:
        u0 = solve_dense(h * S, samples.values[:m])
        S_inv = np.column_stack([solve_dense(S, e) for e in np.eye(m)])
    except SingularMatrix as exc:
        raise SingularStartSystem(f"starting system singular at h = {h:g}: {exc}") from exc
    cond = float(np.abs(S).sum(axis=1).max() * np.abs(S_inv).sum(axis=1).max())
    return u0, cond


def _march(problem, samples, method, path, backend):
    check_admitted(method)
    m, mu, N = method.m, method.mu, samples.N
    if N < m + mu:
        raise LengthMismatch(f"need N >= m + mu = {m + mu}, got {N}")
    h = problem.length / N
    x = problem.grid(N)
    f = samples.padded()
    u = np.zeros(N - mu + 1)
    u0, cond = starting_values(problem, samples, method)
    u[: len(u0)] = u0

    if path == "weightform":
        table = _table(method, N)
        gamma = np.ascontiguousarray(table.gamma.values)
        cols = np.ascontiguousarray(table.start_cols)
    else:
        a = np.asarray(method.a)
        b = np.asarray(method.b)
        wtil = np.ascontiguousarray(starting_weights(m)[: m - 1])

    n = m + mu
    while n <= N:
        width = max(1, min(N + 1 - n, BLOCK_ENTRIES // (N + 1)))
        n_hi = n + width
        K = np.ascontiguousarray(
            np.broadcast_to(problem.kernel(x[n:n_hi, None], x[None, : n_hi - mu]), (width, n_hi - mu)),
            dtype=float,
        )
        if path == "weightform":
            bad = kernels.march_weightform(K, n, n_hi, gamma, cols, f, h, m, mu, u, backend=backend)
        else:
            bad = kernels.march_recursive(K, n, n_hi, a, b, mu, wtil, f, h, u, backend=backend)
        if bad >= 0:
            raise DiagonalKernelTooSmall(
                f"|k(x_{bad}, x_{bad - mu})| < {kernels.DIAG_MIN} at h = {h:g}; step too large"
            )
        n = n_hi

    grid = x[: N - mu + 1]
    if _skips_start(method):
        grid, u = grid[1:], u[1:]
    exact = None
    if problem.exact_solution is not None:
        exact = np.asarray(problem.exact_solution(grid), dtype=float) * np.ones_like(grid)
    diag = {"cond_start": cond, "path": path, "backend": backend or kernels._accel.backend_name()}
    return SolveResult(method.name, N, h, grid, u, exact, diag)


def solve_weightform(problem: Problem, samples: NoisySamples, method: MultistepMethod, backend=None) -> SolveResult:
    return _march(problem, samples, method, "weightform", backend)


def solve_recursive(problem: Problem, samples: NoisySamples, method: MultistepMethod, backend=None) -> SolveResult:
    return _march(problem, samples, method, "recursive", backend)


def solve(problem: Problem, samples: NoisySamples, method: MultistepMethod, path: str = "weightform", backend=None) -> SolveResult:
    if path not in ("weightform", "recursive"):
        raise ValueError(f"unknown path {path!r}")
    return _march(problem, samples, method, path, backend)
