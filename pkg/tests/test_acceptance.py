"""Acceptance criteria. Each test prints one PASS/FAIL line with the measured
quantities and then asserts the criterion at its stated tolerance."""

import time

import numpy as np
import pytest

from oracles import exhaustive_balance_index, pair_ratios

from volterra_msm.errors import NotSchur
from volterra_msm.harness import BALANCE_DELTAS, ExperimentSpec, problem, run_apriori_sweep, run_balance_sweep
from volterra_msm.methods import CATALOGUE, REGISTRY, builtin, classify_stability
from volterra_msm.solver import make_samples, solve, solve_recursive, solve_weightform
from volterra_msm.stepsize import balance, balancing_constants, ladder_from_N
from volterra_msm.weights import integrate_forward, starting_weights

ADMITTED = tuple(n for n in REGISTRY if CATALOGUE[n][2])
SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}")

    return emit


def _sweep(pid, meth, nus):
    t0 = time.perf_counter()
    rows = run_apriori_sweep(ExperimentSpec(pid, meth, nu_range=tuple(nus), seeds=SEEDS))
    return rows, time.perf_counter() - t0


def test_criterion_01_midpoint_sweep(report):
    rows, dt = _sweep(1, "nystrom2", range(5, 13))
    ratios = [r.ratio for r in rows]
    ok = all(0.4 <= q <= 4.0 for q in ratios) and dt < 60
    report(1, ok, f"midpoint ratios {min(ratios):.2f}..{max(ratios):.2f} in [0.4, 4.0]; {dt:.1f}s < 60s")
    assert ok


def test_criterion_02_bdf4_sweep(report):
    rows, _ = _sweep(2, "bdf4", range(5, 10))
    ratios = [r.ratio for r in rows]
    ok = all(3 <= q <= 20 for q in ratios)
    report(2, ok, f"bdf4 ratios {min(ratios):.2f}..{max(ratios):.2f} in [3, 20]")
    assert ok


def test_criterion_03_ab2_sweep(report):
    rows, _ = _sweep(3, "ab2", range(5, 13))
    ratios = [r.ratio for r in rows]
    ok = all(0.8 <= q <= 6 for q in ratios)
    report(3, ok, f"ab2 ratios {min(ratios):.2f}..{max(ratios):.2f} in [0.8, 6]")
    assert ok


def test_criterion_04_balancing_sweep(report):
    t0 = time.perf_counter()
    spec = ExperimentSpec(4, "ab2", mode="balance_sweep", delta_list=BALANCE_DELTAS, seeds=SEEDS, beta=13.0, kappa=1)
    rows = run_balance_sweep(spec)
    dt = time.perf_counter() - t0
    hr = [r.h_over_sqrt_delta for r in rows]
    er = [r.ratio for r in rows]
    ok = all(1.5 <= q <= 10 for q in hr) and all(2 <= q <= 12 for q in er) and dt < 120
    report(
        4,
        ok,
        f"N = {[r.N_chosen for r in rows]}, h/sqrt(d) {min(hr):.2f}..{max(hr):.2f} in [1.5, 10], "
        f"err/sqrt(d) {min(er):.2f}..{max(er):.2f} in [2, 12]; {dt:.1f}s < 120s",
    )
    assert ok


def test_criterion_05_constants(report):
    c = balancing_constants(problem(4), builtin("ab2"), 2048)
    dev = (abs(c.T_inv_norm - 2.5), abs(c.gamma_inv_sum - 4 / 3), abs(c.C2 - 19 / 3))
    ok = dev[0] <= 1e-12 and dev[1] <= 1e-12 and dev[2] <= 1e-10
    report(5, ok, f"|T^-1| = {c.T_inv_norm!r}, sum|g^-1| = {c.gamma_inv_sum!r}, C2 = {c.C2!r}; deviations {max(dev):.1e}")
    assert ok


def test_criterion_06_path_equivalence(report):
    worst, count = 0.0, 0
    for name in REGISTRY:
        meth = builtin(name)
        for pid in (1, 2, 3):
            prob = problem(pid)
            for N in (32, 64, 128):
                for delta in (0.0, 1e-6):
                    s = make_samples(prob, N, delta, 11)
                    if name not in ADMITTED:
                        # both paths refuse methods whose sigma is not Schur
                        for fn in (solve_weightform, solve_recursive):
                            with pytest.raises(NotSchur):
                                fn(prob, s, meth)
                        continue
                    a = solve_weightform(prob, s, meth)
                    b = solve_recursive(prob, s, meth)
                    worst = max(worst, np.max(np.abs(a.u - b.u)) / np.max(np.abs(a.u)))
                    count += 1
    ok = worst <= 1e-10
    report(6, ok, f"max relative path difference {worst:.2e} <= 1e-10 over {count} solves")
    assert ok


def test_criterion_07_noise_free_rates(report):
    Ns = np.array([32, 64, 128, 256])
    slopes = {}
    for pid, name, p in ((1, "nystrom2", 2), (2, "bdf4", 4), (3, "ab2", 2)):
        prob, meth = problem(pid), builtin(name)
        errs = [solve(prob, make_samples(prob, int(N), 0.0), meth).max_error for N in Ns]
        slopes[(pid, name, p)] = -np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    ok = all(abs(v - k[2]) <= 0.25 for k, v in slopes.items())
    report(7, ok, ", ".join(f"{n}: {v:.3f} (p={p})" for (_, n, p), v in slopes.items()))
    assert ok


def test_criterion_08_classification(report):
    mism = []
    for name in REGISTRY:
        rep = classify_stability(builtin(name))
        got = (rep.nullstable, rep.sigma_von_neumann, rep.sigma_schur, builtin(name).p0)
        if got != CATALOGUE[name]:
            mism.append(name)
    trap = classify_stability(builtin("trapezoidal"))
    simp = classify_stability(builtin("milne_simpson2"))
    ok = not mism and trap.sigma_von_neumann and not trap.sigma_schur and not simp.sigma_von_neumann
    report(8, ok, f"{len(REGISTRY) - len(mism)}/{len(REGISTRY)} match; trapezoidal vN-not-Schur, Milne-Simpson sigma non-vN")
    assert ok


def test_criterion_09_quadrature_exactness(report):
    rng = np.random.default_rng(9)
    moment_err = 0.0
    for m in range(1, 9):
        W = starting_weights(m)
        s = np.arange(m)
        for r in range(1, m + 1):
            for q in range(m):
                exact = r ** (q + 1) / (q + 1)
                moment_err = max(moment_err, abs(W[r - 1] @ s**q - exact) / (np.abs(W[r - 1]) @ s**q + exact))
    ident_err = 0.0
    for name in REGISTRY:
        meth = builtin(name)
        for _ in range(100):
            n = int(rng.integers(meth.m + meth.mu, 120))
            psi = rng.uniform(-1, 1, size=n - meth.mu + 1)
            h = float(rng.uniform(1e-3, 1))
            fi = integrate_forward(meth, psi, h)
            ident_err = max(ident_err, abs(fi.recursive - fi.weighted) / (h * np.abs(psi).sum()))
    ok = moment_err <= 1e-12 and ident_err <= 1e-12
    report(9, ok, f"moment identities {moment_err:.1e}, recursion vs weights {ident_err:.1e} (100 sequences x 12 methods)")
    assert ok


def test_criterion_10_early_stop_equivalence(report):
    rng = np.random.default_rng(10)
    agree, chosen = 0, []
    for _ in range(50):
        pid = int(rng.integers(1, 5))
        name = str(rng.choice(ADMITTED))
        prob, meth = problem(pid), builtin(name)
        s_bar = int(rng.integers(0, 5))
        N_lo = int(rng.integers(max(8, meth.m + meth.mu + 2), 33))
        lad = ladder_from_N(N_lo, s_bar)
        delta = float(10 ** rng.uniform(-7, -3))
        samples = make_samples(prob, lad.N_list[0], delta, int(rng.integers(0, 2**31)))
        # choose beta from the flip points of the pairwise comparisons so every
        # stopping position is exercised, not just "accept all"
        _, sols = exhaustive_balance_index(prob, samples, meth, lad, 1.0)
        flips = pair_ratios(sols, lad.h_list, delta)
        beta = float(np.quantile(flips, rng.uniform()) * rng.uniform(0.9, 1.1)) if len(flips) else 1.0
        beta = max(beta, 1e-12)
        seq = balance(prob, samples, meth, lad, beta)
        ref, _ = exhaustive_balance_index(prob, samples, meth, lad, beta)
        agree += seq.chosen_index == ref
        chosen.append(seq.chosen_index)
    ok = agree == 50
    report(10, ok, f"{agree}/50 instances agree; chosen indices span {sorted(set(chosen))}")
    assert ok
