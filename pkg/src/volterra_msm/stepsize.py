"""Step-size selection: the a-priori rule h ~ delta^(1/(p+1)) and the
early-stopping balancing principle on a nested ladder of step sizes.

The balancing threshold needs the noise-propagation constant ``C2`` in the
bound ``max |u_n - u(x_n)| <= C1 h^p + C2 delta / h``;
:func:`balancing_constants` computes it (and all its factors) from the
method and the kernel's Lipschitz data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyLadder, LengthMismatch, NotSchur
from .methods import MultistepMethod, check_admitted, classify_stability, gamma_inv_bounds, gamma_sup
from .polyalg import solve_dense
from .solver import NoisySamples, Problem, SolveResult, _table, solve
from .weights import starting_weights

_FLOOR_EPS = 1e-9


def apriori_h(delta: float, p: int, interval_length: float = 1.0, N_min: int = 1) -> tuple[float, int]:
    """(h, N) with N the smallest power of two >= max(L / delta^(1/(p+1)), N_min)."""
    if not delta > 0 or p < 1:
        raise DomainError("need delta > 0 and p >= 1")
    target = max(interval_length / delta ** (1.0 / (p + 1)), float(N_min), 1.0)
    N = 1 << max(0, math.ceil(math.log2(target) - _FLOOR_EPS))
    return interval_length / N, N


@dataclass(frozen=True)
class BalancingConstants:
    C2a: float
    C2b: float
    C3: float
    C2: float
    T_inv_norm: float
    cond_T: float
    gamma_inv_sum: float
    gamma_sup: float
    gamma_inv_weighted: float
    start_weight_sum_max: float
    h_bar: float
    h_max: float
    lipschitz_L: float
    kernel_sup: float
    mu: int
    interval_length: float

    def compose(self) -> float:
        """Recompute C2 from the stored factors."""
        return compose_c2(
            self.T_inv_norm,
            self.gamma_inv_sum,
            self.gamma_sup,
            self.gamma_inv_weighted,
            self.start_weight_sum_max,
            self.lipschitz_L,
            self.kernel_sup,
            self.mu,
            self.interval_length,
        )[3]


def compose_c2(T_inv_norm, gamma_inv_sum, gsup, gamma_inv_weighted, swsm, L, ksup, mu, length):
    """(C2a, C2b, C3, C2) from their ingredients."""
    C2a = (1.0 + L) * T_inv_norm
    C3 = gsup * gamma_inv_weighted
    C2b = (1.0 + mu * L) * gamma_inv_sum * math.exp((1.0 + mu * L) * C3 * L * length)
    C2 = max(C2a, C2b * (1.0 + C2a * ksup * swsm))
    return C2a, C2b, C3, C2


def _inf_norm_inverse(T: np.ndarray) -> float:
    inv = np.column_stack([solve_dense(T, e) for e in np.eye(T.shape[0])])
    return float(np.abs(inv).sum(axis=1).max())


def balancing_constants(problem: Problem, method: MultistepMethod, N_ref: int, N_min: int | None = None) -> BalancingConstants:
    """All factors of C2 for ``method`` applied to ``problem``.

    ``N_ref`` bounds the scan for the largest start-column weight sum;
    ``N_min`` (default m + mu) fixes h_max = length / N_min.
    """
    if not classify_stability(method).sigma_schur:
        raise NotSchur(f"{method.name}: sigma is not Schur")
    check_admitted(method)
    m, mu = method.m, method.mu
    N_min = m + mu if N_min is None else N_min
    if N_ref < m + mu:
        raise LengthMismatch(f"N_ref must be >= m + mu = {m + mu}")
    T = starting_weights(m)
    T_inv = _inf_norm_inverse(T)
    cond_T = float(np.abs(T).sum(axis=1).max()) * T_inv
    tb = gamma_inv_bounds(method)
    gsup = gamma_sup(method, max(10_000, N_ref + 1))
    swsm = _table(method, N_ref).start_weight_sum_max()
    L, ksup, length = problem.lipschitz_L, problem.kernel_sup, problem.length
    C2a, C2b, C3, C2 = compose_c2(T_inv, tb.sum_abs, gsup, tb.sum_weighted, swsm, L, ksup, mu, length)
    h_max = length / N_min
    h_bar = h_max if L == 0 else min(1.0 / (m * (1.0 + L) * cond_T), h_max)
    return BalancingConstants(
        C2a=C2a,
        C2b=C2b,
        C3=C3,
        C2=C2,
        T_inv_norm=T_inv,
        cond_T=cond_T,
        gamma_inv_sum=tb.sum_abs,
        gamma_sup=gsup,
        gamma_inv_weighted=tb.sum_weighted,
        start_weight_sum_max=swsm,
        h_bar=h_bar,
        h_max=h_max,
        lipschitz_L=L,
        kernel_sup=ksup,
        mu=mu,
        interval_length=length,
    )


@dataclass(frozen=True)
class StepLadder:
    """Step sizes h_0 < h_1 < ... with N_s = N_lo * 2^(kappa (s_bar - s))."""

    N_list: tuple[int, ...]
    interval_length: float
    kappa: int
    delta: float
    constraints_met: dict = field(default_factory=dict, compare=False)

    @property
    def h_list(self) -> tuple[float, ...]:
        return tuple(self.interval_length / N for N in self.N_list)

    @property
    def s_bar(self) -> int:
        return len(self.N_list) - 1

    def __len__(self) -> int:
        return len(self.N_list)


def ladder_from_N(N_lo: int, s_bar: int, kappa: int = 1, interval_length: float = 1.0, delta: float = float("nan")) -> StepLadder:
    Ns = tuple(N_lo << (kappa * (s_bar - s)) for s in range(s_bar + 1))
    return StepLadder(Ns, interval_length, kappa, delta)


def build_ladder(delta: float, p0: int, h_bar: float, interval_length: float = 1.0, kappa: int = 1) -> StepLadder:
    """Coarsest rung: smallest step >= delta^(1/(p0+1)) (capped at h_bar);
    finest rung: largest ladder step <= delta^(1/2)."""
    if not delta > 0:
        raise DomainError("balancing needs delta > 0")
    if kappa < 1 or p0 < 1:
        raise DomainError("need kappa >= 1 and p0 >= 1")
    L = interval_length
    h_small = math.sqrt(delta)
    if h_small >= h_bar:
        raise EmptyLadder(f"delta^(1/2) = {h_small:.3g} >= h_bar = {h_bar:.3g}")
    h_large = delta ** (1.0 / (p0 + 1))
    N_lo = max(1, math.floor(L / h_large + _FLOOR_EPS))
    N_lo = max(N_lo, math.ceil(L / h_bar - _FLOOR_EPS))
    s_bar = 0
    while L / (N_lo << (kappa * s_bar)) > h_small * (1 + _FLOOR_EPS):
        s_bar += 1
    lad = ladder_from_N(N_lo, s_bar, kappa, L, delta)
    hs = lad.h_list
    met = {
        "h0_le_sqrt_delta": hs[0] <= h_small * (1 + _FLOOR_EPS),
        "hsbar_ge_delta_root": hs[-1] >= h_large * (1 - _FLOOR_EPS),
        "hsbar_le_h_bar": hs[-1] <= h_bar * (1 + _FLOOR_EPS),
    }
    return StepLadder(lad.N_list, L, kappa, delta, met)


@dataclass(frozen=True)
class Comparison:
    coarse_index: int
    fine_index: int
    h_coarse: float
    h_fine: float
    discrepancy: float
    threshold: float

    @property
    def accepted(self) -> bool:
        return self.discrepancy <= self.threshold


@dataclass(frozen=True, eq=False)
class BalanceOutcome:
    chosen_index: int
    chosen_h: float
    chosen_N: int
    comparisons: tuple[Comparison, ...]
    solutions: dict

    @property
    def chosen(self) -> SolveResult:
        return self.solutions[self.chosen_index]


def discrepancy(coarse: SolveResult, fine: SolveResult) -> float:
    """max over the coarse grid of |u(y; coarse) - u(y; fine)|."""
    return float(np.max(np.abs(coarse.u - fine.at_nodes(coarse.grid))))


def balance(
    problem: Problem,
    samples: NoisySamples,
    method: MultistepMethod,
    ladder: StepLadder,
    beta: float,
    constants: BalancingConstants | None = None,
    path: str = "weightform",
) -> BalanceOutcome:
    """Early-stopping balancing principle.

    ``samples`` live on the finest rung; every coarser rung reuses them at
    its own nodes. Rung s is accepted when its solution stays within
    ``beta * delta / h_t`` of every finer rung t; the first rejected rung
    stops the search and its predecessor is returned. Rungs past that point
    are never solved.
    """
    delta = samples.delta
    if not delta > 0:
        raise DomainError("balancing needs delta > 0")
    if constants is not None and not beta > 2 * constants.C2:
        raise DomainError(f"beta = {beta} must exceed 2*C2 = {2 * constants.C2:.6g}")
    if samples.N != ladder.N_list[0]:
        raise LengthMismatch(f"samples on N = {samples.N}, finest rung is N = {ladder.N_list[0]}")
    hs = ladder.h_list
    sols = {0: solve(problem, samples, method, path)}
    log: list[Comparison] = []
    chosen = ladder.s_bar
    for s in range(1, len(ladder)):
        sols[s] = solve(problem, samples.restrict(ladder.N_list[s]), method, path)
        ok = True
        for t in range(s):
            c = Comparison(s, t, hs[s], hs[t], discrepancy(sols[s], sols[t]), beta * delta / hs[t])
            log.append(c)
            if not c.accepted:
                ok = False
                break
        if not ok:
            chosen = s - 1
            break
    return BalanceOutcome(chosen, hs[chosen], ladder.N_list[chosen], tuple(log), sols)
