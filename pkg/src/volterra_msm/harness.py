"""Test-problem registry and the sweep drivers that regenerate the
a-priori tables and the balancing-principle table as CSV.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, UnknownProblem
from .methods import builtin
from .solver import Problem, make_samples, noise_vector, NoisySamples, solve
from .stepsize import balance, balancing_constants, build_ladder

RHS_SUP_SAMPLES = 10_000


def _ones(x, y):
    return np.ones(np.broadcast_shapes(np.shape(x), np.shape(y)))


def _hat(y):
    y = np.asarray(y, dtype=float)
    return np.where(y <= 0.5, 2.0 * y, 2.0 * (1.0 - y))


def _hat_integral(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.5, x * x, 2.0 * x - x * x - 0.5)


def _build_problem(pid: int) -> Problem:
    if pid == 1:
        return Problem(
            "cos-kernel, u = 1",
            lambda x, y: np.cos(x - y),
            np.sin,
            exact_solution=lambda y: np.ones_like(np.asarray(y, dtype=float)),
            lipschitz_L=1.0,
            kernel_sup=1.0,
            smoothness_p=2,
        )
    if pid == 2:
        return Problem(
            "cos-kernel, u = y",
            lambda x, y: np.cos(x - y),
            lambda x: 1.0 - np.cos(x),
            exact_solution=lambda y: np.asarray(y, dtype=float),
            lipschitz_L=1.0,
            kernel_sup=1.0,
            smoothness_p=4,
        )
    if pid == 3:
        return Problem(
            "linear kernel, u = y exp(-y)",
            lambda x, y: 1.0 + x - y,
            lambda x: x - 1.0 + np.exp(-x),
            exact_solution=lambda y: y * np.exp(-y),
            lipschitz_L=1.0,
            kernel_sup=2.0,
            smoothness_p=2,
        )
    if pid == 4:
        return Problem(
            "differentiation of a hat function",
            _ones,
            _hat_integral,
            exact_solution=_hat,
            lipschitz_L=0.0,
            kernel_sup=1.0,
            smoothness_p=1,
        )
    raise UnknownProblem(f"unknown problem {pid!r}; known: 1, 2, 3, 4")


_PROBLEMS: dict[int, Problem] = {}


def problem(pid) -> Problem:
    try:
        pid = int(pid)
    except (TypeError, ValueError):
        raise UnknownProblem(f"unknown problem {pid!r}") from None
    if pid not in _PROBLEMS:
        _PROBLEMS[pid] = _build_problem(pid)
    return _PROBLEMS[pid]


def rhs_sup(prob: Problem) -> float:
    """||f||_inf over [a, b] from dense sampling."""
    x = np.linspace(prob.a, prob.b, RHS_SUP_SAMPLES + 1)
    return float(np.max(np.abs(prob.rhs(x))))


# Noise levels of the balancing experiment: 1e-5 / 4^k.
BALANCE_DELTAS = tuple(1e-5 / 4**k for k in range(5))


@dataclass(frozen=True)
class ExperimentSpec:
    problem_id: int
    method_name: str
    mode: str = "apriori_sweep"
    nu_range: tuple[int, ...] = ()
    delta_list: tuple[float, ...] = ()
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    beta: float | None = None
    kappa: int = 1
    output_path: str | None = None

    def __post_init__(self):
        if self.mode not in ("apriori_sweep", "balance_sweep"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if not self.seeds:
            raise DomainError("seeds must be nonempty")
        if self.mode == "apriori_sweep":
            if not self.nu_range or not all(3 <= nu <= 14 for nu in self.nu_range):
                raise DomainError("nu_range must be nonempty and within 3..14")
        elif not self.delta_list or not all(d > 0 for d in self.delta_list):
            raise DomainError("delta_list must be nonempty and positive")


@dataclass(frozen=True)
class TableRow:
    N: int
    delta: float
    rel_delta_pct: float
    max_err: float
    ratio: float
    N_chosen: int | None = None
    h_over_sqrt_delta: float | None = None


APRIORI_COLUMNS = ("N", "delta", "rel_delta_pct", "max_err", "ratio")
BALANCE_COLUMNS = ("delta", "rel_delta_pct", "N_chosen", "h_over_sqrt_delta", "max_err", "err_over_sqrt_delta")


def run_apriori_sweep(spec: ExperimentSpec) -> list[TableRow]:
    """h = 2^-nu, delta = h^(p0+1); one solve per seed, seed-median error."""
    if spec.mode != "apriori_sweep":
        raise DomainError("spec is not an a-priori sweep")
    prob = problem(spec.problem_id)
    meth = builtin(spec.method_name)
    fsup = rhs_sup(prob)
    p = prob.smoothness_p
    rows = []
    for nu in sorted(spec.nu_range):
        N = 2**nu
        h = prob.length / N
        delta = h ** (meth.p0 + 1)
        errs = [solve(prob, make_samples(prob, N, delta, seed), meth).max_error for seed in spec.seeds]
        err = float(np.median(errs))
        rows.append(TableRow(N, delta, 100.0 * delta / fsup, err, err / delta ** (p / (p + 1))))
    return rows


def balance_once(prob: Problem, meth, delta: float, seed: int, beta: float | None = None, kappa: int = 1):
    """Constants, ladder and balancing outcome for one noise realisation."""
    c0 = balancing_constants(prob, meth, meth.m + meth.mu)
    ladder = build_ladder(delta, meth.p0, c0.h_bar, prob.length, kappa)
    consts = balancing_constants(prob, meth, ladder.N_list[0])
    if beta is None:
        beta = 2.05 * consts.C2
    exact = prob.rhs(prob.grid(ladder.N_list[0])[1:])
    samples = NoisySamples(exact + noise_vector(ladder.N_list[0], delta, seed), delta, seed, ladder.N_list[0])
    return consts, ladder, balance(prob, samples, meth, ladder, beta, consts)


def run_balance_sweep(spec: ExperimentSpec) -> list[TableRow]:
    if spec.mode != "balance_sweep":
        raise DomainError("spec is not a balance sweep")
    prob = problem(spec.problem_id)
    meth = builtin(spec.method_name)
    fsup = rhs_sup(prob)
    rows = []
    for delta in spec.delta_list:
        Ns, ratios, errs = [], [], []
        for seed in spec.seeds:
            _, _, out = balance_once(prob, meth, delta, seed, spec.beta, spec.kappa)
            Ns.append(out.chosen_N)
            ratios.append(out.chosen_h / math.sqrt(delta))
            errs.append(out.chosen.max_error)
        err = float(np.median(errs))
        rows.append(
            TableRow(
                N=statistics.median_low(Ns),
                delta=delta,
                rel_delta_pct=100.0 * delta / fsup,
                max_err=err,
                ratio=err / math.sqrt(delta),
                N_chosen=statistics.median_low(Ns),
                h_over_sqrt_delta=float(np.median(ratios)),
            )
        )
    return rows


def run(spec: ExperimentSpec) -> list[TableRow]:
    rows = run_apriori_sweep(spec) if spec.mode == "apriori_sweep" else run_balance_sweep(spec)
    if spec.output_path:
        with open(spec.output_path, "w", newline="") as fh:
            fh.write(rows_to_csv(rows, spec.mode))
    return rows


# -- CSV -------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.2e}"


def _row_values(row: TableRow, mode: str) -> list:
    if mode == "apriori_sweep":
        return [row.N, row.delta, row.rel_delta_pct, row.max_err, row.ratio]
    return [row.delta, row.rel_delta_pct, row.N_chosen, row.h_over_sqrt_delta, row.max_err, row.ratio]


def rows_to_csv(rows: Iterable[TableRow], mode: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(APRIORI_COLUMNS if mode == "apriori_sweep" else BALANCE_COLUMNS)
    for row in rows:
        w.writerow([_fmt(v) for v in _row_values(row, mode)])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[TableRow]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        if "N_chosen" in rec:
            Nc = int(rec["N_chosen"])
            out.append(
                TableRow(
                    N=Nc,
                    delta=float(rec["delta"]),
                    rel_delta_pct=float(rec["rel_delta_pct"]),
                    max_err=float(rec["max_err"]),
                    ratio=float(rec["err_over_sqrt_delta"]),
                    N_chosen=Nc,
                    h_over_sqrt_delta=float(rec["h_over_sqrt_delta"]),
                )
            )
        else:
            out.append(TableRow(*(int(rec["N"]),) + tuple(float(rec[k]) for k in APRIORI_COLUMNS[1:])))
    return out


def row_dicts(rows: Sequence[TableRow], mode: str) -> list[dict]:
    cols = APRIORI_COLUMNS if mode == "apriori_sweep" else BALANCE_COLUMNS
    return [dict(zip(cols, _row_values(r, mode))) for r in rows]
