"""Minimum violations ranking of the unreciprocated subnetwork.

A violation is a claim whose claimant outranks the claimed node; the MVR is
a permutation minimizing the violation count, found here by simulated
annealing over rank swaps followed by greedy swap descent. Reciprocated
edges are ignored throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._kernels import count_violations_kernel, mvr_anneal, mvr_greedy_descent
from .network import DirectedNetwork, check_ranking, network_from_claims
from .seeds import derive_seed


@dataclass(frozen=True)
class ViolationReport:
    """Violation count for one ranking of one network."""

    violations: int
    total_directed: int

    def __post_init__(self):
        if not 0 <= self.violations <= self.total_directed:
            raise ValueError("violations must lie in [0, total_directed]")

    @property
    def fraction_upward(self) -> float | None:
        """Share of claims pointing up-rank; None when there are no T edges."""
        if self.total_directed == 0:
            return None
        return 1.0 - self.violations / self.total_directed

    def to_dict(self) -> dict:
        return {
            "violations": self.violations,
            "total_directed": self.total_directed,
            "fraction_upward": self.fraction_upward,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class AnnealSchedule:
    """Annealing schedule: start temperature in per-violation units,
    geometric cooling per sweep of n proposals, stop after ``stall_sweeps``
    sweeps without improvement; ``restarts`` independent runs keep the best
    result (ties keep the incumbent)."""

    t0: float = 1.0
    cooling: float = 0.995
    stall_sweeps: int = 50
    restarts: int = 3

    def __post_init__(self):
        if self.t0 <= 0 or not 0 < self.cooling < 1:
            raise ValueError("t0 must be > 0 and cooling in (0, 1)")
        if self.stall_sweeps < 1 or self.restarts < 1:
            raise ValueError("stall_sweeps and restarts must be >= 1")


def _t_incidence(net: DirectedNetwork):
    """CSR edge-id incidence of T edges per node."""
    asym = net.asym_array()
    t_u = np.ascontiguousarray(asym[:, 0]) if len(asym) else np.empty(0, np.int64)
    t_v = np.ascontiguousarray(asym[:, 1]) if len(asym) else np.empty(0, np.int64)
    m = t_u.shape[0]
    nodes = np.concatenate([t_u, t_v])
    eidx = np.concatenate([np.arange(m), np.arange(m)])
    order = np.argsort(nodes, kind="stable")
    counts = np.bincount(nodes, minlength=net.n)
    indptr = np.zeros(net.n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return t_u, t_v, indptr, eidx[order].astype(np.int64)


def count_violations(net: DirectedNetwork, ranks: np.ndarray) -> ViolationReport:
    """Count claims running from higher to lower rank under ``ranks``."""
    ranks = check_ranking(ranks, net.n)
    asym = net.asym_array()
    if len(asym) == 0:
        return ViolationReport(0, 0)
    viol = int(np.sum(ranks[asym[:, 0]] > ranks[asym[:, 1]]))
    return ViolationReport(viol, len(asym))


def minimum_violations_ranking(
    net: DirectedNetwork,
    seed: int = 0,
    schedule: AnnealSchedule = AnnealSchedule(),
) -> tuple[np.ndarray, ViolationReport]:
    """Anneal to a pair-swap-locally-minimal violations ranking.

    Deterministic given the seed. The returned ranking is certified locally
    optimal by an exhaustive greedy swap descent; for small networks this
    reliably attains the exact minimum, while large networks get one good
    local optimum (the optimum is typically degenerate, which the CLI notes
    in its output metadata).
    """
    if net.n < 1:
        raise ValueError("network must have at least one node")
    if net.n == 1:
        return np.array([1], dtype=np.int64), ViolationReport(0, net.n_asym)
    t_u, t_v, indptr, eidx = _t_incidence(net)
    best_ranks = None
    best_viol = None
    for r in range(schedule.restarts):
        rng = np.random.default_rng(derive_seed(seed, f"mvr-restart-{r}"))
        ranks = rng.permutation(np.arange(1, net.n + 1)).astype(np.int64)
        kernel_seed = derive_seed(seed, f"mvr-anneal-{r}") & 0xFFFFFFFF
        mvr_anneal(
            ranks,
            t_u,
            t_v,
            indptr,
            eidx,
            schedule.t0,
            schedule.cooling,
            schedule.stall_sweeps,
            kernel_seed,
        )
        viol = int(mvr_greedy_descent(ranks, t_u, t_v, indptr, eidx))
        if best_viol is None or viol < best_viol:
            best_viol = viol
            best_ranks = ranks
    report = ViolationReport(best_viol, net.n_asym)
    return best_ranks, report


def randomize_directions(net: DirectedNetwork, seed: int) -> DirectedNetwork:
    """Flip each T edge independently with probability 1/2; S unchanged."""
    rng = np.random.default_rng(seed)
    claims = []
    for i, j in net.sym_edges:
        claims.append((i, j))
        claims.append((j, i))
    for u, v in net.asym_edges:
        if rng.random() < 0.5:
            claims.append((v, u))
        else:
            claims.append((u, v))
    return network_from_claims(net.labels, claims)
