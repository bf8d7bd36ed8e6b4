"""Independent reference computations shared by the test modules."""

import numpy as np

from volterra_msm.solver import solve


def exhaustive_balance_index(prob, samples, meth, ladder, beta):
    """max H^delta by direct evaluation of its definition.

    Every rung is solved; rung s belongs to H^delta when every pair
    t < s' <= s satisfies max |u(s') - u(t)| <= beta delta / h_t on the
    coarser grid of the pair.
    """
    hs = ladder.h_list
    sols = [solve(prob, samples.restrict(N), meth) for N in ladder.N_list]
    delta = samples.delta

    def ok(sp, t):
        coarse, fine = sols[sp], sols[t]
        return np.max(np.abs(coarse.u - fine.at_nodes(coarse.grid))) <= beta * delta / hs[t]

    members = [s for s in range(len(hs)) if all(ok(sp, t) for sp in range(1, s + 1) for t in range(sp))]
    return max(members), sols


def pair_ratios(sols, hs, delta):
    """discrepancy * h_t / delta for all ordered pairs, i.e. the beta at which
    each comparison flips."""
    out = []
    for sp in range(1, len(sols)):
        for t in range(sp):
            d = np.max(np.abs(sols[sp].u - sols[t].at_nodes(sols[sp].grid)))
            out.append(d * hs[t] / delta)
    return np.array(out)
