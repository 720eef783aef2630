"""Numba kernels for the permutation MCMC and the violations annealer.

All kernels are single-threaded and deterministic given the seed passed in;
they reseed numpy's (numba-local) generator on entry. Proposals are uniform
random rank swaps of two distinct nodes; likelihood deltas touch only edges
incident to the swapped pair, since the multiset of pairwise rank
differences is permutation-invariant and the no-edge penalty terms cancel.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def swap_delta(ranks, x, y, indptr, nbr, kind, la, lb, off):
    """Log-likelihood change from swapping the ranks of nodes x and y.

    kind: 0 = reciprocated edge, 1 = node claims neighbor, 2 = neighbor
    claims node. The shared x-y edge is handled once, in x's scan.
    """
    rx = ranks[x]
    ry = ranks[y]
    d = 0.0
    for e in range(indptr[x], indptr[x + 1]):
        w = nbr[e]
        k = kind[e]
        if w == y:
            if k == 1:  # x claims y: z = r_y - r_x flips sign
                d += lb[rx - ry + off] - lb[ry - rx + off]
            elif k == 2:  # y claims x: z = r_x - r_y flips sign
                d += lb[ry - rx + off] - lb[rx - ry + off]
            continue  # reciprocated: alpha symmetric, no change
        rw = ranks[w]
        if k == 0:
            d += la[ry - rw + off] - la[rx - rw + off]
        elif k == 1:  # x claims w: z = r_w - r_x
            d += lb[rw - ry + off] - lb[rw - rx + off]
        else:  # w claims x: z = r_x - r_w
            d += lb[ry - rw + off] - lb[rx - rw + off]
    for e in range(indptr[y], indptr[y + 1]):
        w = nbr[e]
        if w == x:
            continue
        k = kind[e]
        rw = ranks[w]
        if k == 0:
            d += la[rx - rw + off] - la[ry - rw + off]
        elif k == 1:
            d += lb[rw - rx + off] - lb[rw - ry + off]
        else:
            d += lb[rx - rw + off] - lb[ry - rw + off]
    return d


@njit(cache=True)
def mcmc_chain(
    ranks,
    s_i,
    s_j,
    t_u,
    t_v,
    indptr,
    nbr,
    kind,
    la,
    lb,
    burn_sweeps,
    n_samples,
    spacing,
    seed,
):
    """Run one Metropolis chain over rankings; ranks is mutated in place.

    One sweep is n proposals. After ``burn_sweeps`` sweeps, a sample is
    retained every ``spacing`` sweeps. Returns per-difference count
    accumulators (each S edge recorded at both signs), per-node rank sums,
    the per-sample data log-likelihood sum and sum of squares, and the
    accepted-proposal count.
    """
    n = ranks.shape[0]
    off = n - 1
    np.random.seed(seed)
    acc_a = np.zeros(2 * n - 1)
    acc_b = np.zeros(2 * n - 1)
    sum_r = np.zeros(n)
    sum_r2 = np.zeros(n)
    ll_sum = 0.0
    ll_sq = 0.0
    accepted = 0
    taken = 0
    total_sweeps = burn_sweeps + n_samples * spacing
    for sweep in range(total_sweeps):
        for _ in range(n):
            x = np.random.randint(n)
            y = np.random.randint(n - 1)
            if y >= x:
                y += 1
            d = swap_delta(ranks, x, y, indptr, nbr, kind, la, lb, off)
            if d >= 0.0 or np.log(np.random.random()) < d:
                tmp = ranks[x]
                ranks[x] = ranks[y]
                ranks[y] = tmp
                accepted += 1
        if sweep >= burn_sweeps and (sweep - burn_sweeps) % spacing == spacing - 1:
            ll = 0.0
            for e in range(s_i.shape[0]):
                dz = ranks[s_i[e]] - ranks[s_j[e]]
                acc_a[dz + off] += 1.0
                acc_a[-dz + off] += 1.0
                ll += la[dz + off]
            for e in range(t_u.shape[0]):
                dz = ranks[t_v[e]] - ranks[t_u[e]]
                acc_b[dz + off] += 1.0
                ll += lb[dz + off]
            for v in range(n):
                rv = float(ranks[v])
                sum_r[v] += rv
                sum_r2[v] += rv * rv
            ll_sum += ll
            ll_sq += ll * ll
            taken += 1
    return acc_a, acc_b, sum_r, sum_r2, ll_sum, ll_sq, accepted, taken


@njit(cache=True)
def mcmc_visit_codes(
    ranks, indptr, nbr, kind, la, lb, burn_sweeps, n_samples, spacing, seed
):
    """Sampled-state visit counts for tiny n, for distribution-level tests.

    States are encoded base (n+1): code = sum_v ranks[v] * (n+1)^v; the
    returned array has length (n+1)^n.
    """
    n = ranks.shape[0]
    off = n - 1
    np.random.seed(seed)
    size = 1
    for _ in range(n):
        size *= n + 1
    counts = np.zeros(size, dtype=np.int64)
    total_sweeps = burn_sweeps + n_samples * spacing
    for sweep in range(total_sweeps):
        for _ in range(n):
            x = np.random.randint(n)
            y = np.random.randint(n - 1)
            if y >= x:
                y += 1
            d = swap_delta(ranks, x, y, indptr, nbr, kind, la, lb, off)
            if d >= 0.0 or np.log(np.random.random()) < d:
                tmp = ranks[x]
                ranks[x] = ranks[y]
                ranks[y] = tmp
        if sweep >= burn_sweeps and (sweep - burn_sweeps) % spacing == spacing - 1:
            code = 0
            mult = 1
            for v in range(n):
                code += ranks[v] * mult
                mult *= n + 1
            counts[code] += 1
    return counts


@njit(cache=True)
def count_violations_kernel(ranks, t_u, t_v):
    c = 0
    for e in range(t_u.shape[0]):
        if ranks[t_u[e]] > ranks[t_v[e]]:
            c += 1
    return c


@njit(cache=True)
def mvr_swap_delta(ranks, x, y, indptr, eidx, t_u, t_v):
    """Violation-count change from swapping the ranks of nodes x and y."""
    rx = ranks[x]
    ry = ranks[y]
    d = 0
    for p in range(indptr[x], indptr[x + 1]):
        e = eidx[p]
        u = t_u[e]
        v = t_v[e]
        ru = ranks[u]
        rv = ranks[v]
        if u == x:
            nu = ry
        elif u == y:
            nu = rx
        else:
            nu = ru
        if v == x:
            nv = ry
        elif v == y:
            nv = rx
        else:
            nv = rv
        d += (1 if nu > nv else 0) - (1 if ru > rv else 0)
    for p in range(indptr[y], indptr[y + 1]):
        e = eidx[p]
        u = t_u[e]
        v = t_v[e]
        if u == x or v == x:
            continue  # shared edge already counted in x's scan
        ru = ranks[u]
        rv = ranks[v]
        nu = rx if u == y else ru
        nv = rx if v == y else rv
        d += (1 if nu > nv else 0) - (1 if ru > rv else 0)
    return d


@njit(cache=True)
def mvr_anneal(ranks, t_u, t_v, indptr, eidx, t0, cooling, stall_sweeps, seed):
    """Simulated annealing on the violation count with rank-swap proposals.

    Temperature cools geometrically once per sweep of n proposals; the run
    stops after ``stall_sweeps`` consecutive sweeps without improving the
    best count. Returns the best violation count found; ranks holds the best
    state on exit.
    """
    n = ranks.shape[0]
    np.random.seed(seed)
    cur = count_violations_kernel(ranks, t_u, t_v)
    best = cur
    best_ranks = ranks.copy()
    temp = t0
    stall = 0
    while stall < stall_sweeps:
        improved = False
        for _ in range(n):
            x = np.random.randint(n)
            y = np.random.randint(n - 1)
            if y >= x:
                y += 1
            d = mvr_swap_delta(ranks, x, y, indptr, eidx, t_u, t_v)
            if d <= 0 or np.random.random() < np.exp(-d / temp):
                tmp = ranks[x]
                ranks[x] = ranks[y]
                ranks[y] = tmp
                cur += d
                if cur < best:
                    best = cur
                    best_ranks[:] = ranks
                    improved = True
        temp *= cooling
        if temp < 1e-12:
            temp = 1e-12
        if improved:
            stall = 0
        else:
            stall += 1
    ranks[:] = best_ranks
    return best


@njit(cache=True)
def mvr_greedy_descent(ranks, t_u, t_v, indptr, eidx):
    """Repeated full pair-swap scans until no swap reduces violations.

    Certifies pair-swap local optimality of the final state. Returns the
    final violation count; ranks is updated in place.
    """
    n = ranks.shape[0]
    cur = count_violations_kernel(ranks, t_u, t_v)
    improved = True
    while improved:
        improved = False
        for x in range(n - 1):
            for y in range(x + 1, n):
                d = mvr_swap_delta(ranks, x, y, indptr, eidx, t_u, t_v)
                if d < 0:
                    tmp = ranks[x]
                    ranks[x] = ranks[y]
                    ranks[y] = tmp
                    cur += d
                    improved = True
    return cur
