"""Expectation-maximization fit of the rank model to an observed network.

The ranks are latent; the E-step computes posterior-expected edge counts per
rank difference, either exactly by enumerating all n! rankings (small n) or
by Metropolis sampling over permutations. The M-step maximizes the expected
log-likelihood over the alpha/beta parameters; the two blocks separate and
are optimized independently.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .model import (
    LOG_FLOOR,
    AlphaParams,
    BetaParams,
    ModelParams,
    _alpha_values,
    _beta_values,
    _cosine_basis,
    log_rate_tables,
)
from .mvr import minimum_violations_ranking
from .network import DirectedNetwork, check_ranking, degree_summary
from .seeds import derive_seed

logger = logging.getLogger(__name__)

EXACT_ESTEP_MAX_N = 8


@dataclass
class RankHistograms:
    """Posterior-expected edge counts per rank difference.

    ``a[z + n - 1]`` is the expected number of reciprocated edges between a
    pair at difference z (symmetric in z); ``b`` is the same for directed
    claims, recorded at z = rank(claimed) - rank(claimant), so positive z
    means a claim on a higher-ranked node.
    """

    n: int
    a: np.ndarray
    b: np.ndarray

    def zs(self) -> np.ndarray:
        return np.arange(-(self.n - 1), self.n)

    def pair_weights(self) -> np.ndarray:
        """Number of node pairs at each difference: n - |z|."""
        return self.n - np.abs(self.zs())

    def validate(self, tol: float = 1e-9) -> None:
        if self.a.shape != (2 * self.n - 1,) or self.b.shape != (2 * self.n - 1,):
            raise ValueError("histogram arrays must have length 2n-1")
        if np.any(self.a < -tol) or np.any(self.b < -tol):
            raise ValueError("histogram entries must be nonnegative")
        if abs(self.a[self.n - 1]) > tol or abs(self.b[self.n - 1]) > tol:
            raise ValueError("entries at z=0 must vanish (ranks are unique)")
        if np.max(np.abs(self.a - self.a[::-1])) > tol:
            raise ValueError("a(z) must be symmetric")


@dataclass
class PosteriorSummary:
    """Posterior mean and standard deviation of each node's rank."""

    mean_rank: np.ndarray
    std_rank: np.ndarray
    samples_used: int


@dataclass(frozen=True)
class McmcConfig:
    """Sampling configuration for the Monte Carlo E-step.

    A sweep is n proposals. Each chain discards ``burn_in_sweeps`` sweeps,
    then retains ``n_samples`` samples spaced ``sweep_spacing`` sweeps apart.
    """

    burn_in_sweeps: int = 200
    n_samples: int = 200
    sweep_spacing: int = 5
    n_chains: int = 4
    seed: int = 0

    def __post_init__(self):
        for name in ("burn_in_sweeps", "n_samples", "sweep_spacing", "n_chains"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class EmConfig:
    """EM driver configuration.

    ``tol`` is the convergence threshold on the mean absolute change in
    posterior mean ranks between iterations; None means 0.001 * n. The final
    posterior is recomputed with ``final_sample_factor`` times the per-chain
    sample count at the converged parameters.
    """

    max_iter: int = 100
    tol: float | None = None
    noise_multiplier: float = 2.0
    final_sample_factor: int = 4
    mstep_restarts: int = 3

    def __post_init__(self):
        if self.max_iter < 1 or self.final_sample_factor < 1:
            raise ValueError("max_iter and final_sample_factor must be >= 1")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class FitResult:
    """Converged parameters, rank posterior, histograms, and the EM trace."""

    params: ModelParams
    posterior: PosteriorSummary
    histograms: RankHistograms
    objective_trace: list[float]
    objective_stderr: list[float]
    em_iterations: int
    converged: bool
    labels: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "posterior": {
                "labels": list(self.labels),
                "mean_rank": self.posterior.mean_rank.tolist(),
                "std_rank": self.posterior.std_rank.tolist(),
                "samples_used": self.posterior.samples_used,
            },
            "histograms": {
                "z": self.histograms.zs().tolist(),
                "a": self.histograms.a.tolist(),
                "b": self.histograms.b.tolist(),
            },
            "objective_trace": self.objective_trace,
            "objective_stderr": self.objective_stderr,
            "em_iterations": self.em_iterations,
            "converged": self.converged,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        hist = d["histograms"]
        n = (len(hist["a"]) + 1) // 2
        post = d["posterior"]
        return cls(
            params=ModelParams.from_dict(d["params"]),
            posterior=PosteriorSummary(
                np.asarray(post["mean_rank"], dtype=float),
                np.asarray(post["std_rank"], dtype=float),
                int(post["samples_used"]),
            ),
            histograms=RankHistograms(
                n, np.asarray(hist["a"], dtype=float), np.asarray(hist["b"], dtype=float)
            ),
            objective_trace=list(d["objective_trace"]),
            objective_stderr=list(d["objective_stderr"]),
            em_iterations=int(d["em_iterations"]),
            converged=bool(d["converged"]),
            labels=tuple(post["labels"]),
            meta=dict(d.get("meta", {})),
        )


def _edge_arrays(net: DirectedNetwork):
    sym = net.sym_array()
    asym = net.asym_array()
    s_i = np.ascontiguousarray(sym[:, 0]) if len(sym) else np.empty(0, np.int64)
    s_j = np.ascontiguousarray(sym[:, 1]) if len(sym) else np.empty(0, np.int64)
    t_u = np.ascontiguousarray(asym[:, 0]) if len(asym) else np.empty(0, np.int64)
    t_v = np.ascontiguousarray(asym[:, 1]) if len(asym) else np.empty(0, np.int64)
    return s_i, s_j, t_u, t_v


def _incidence(net: DirectedNetwork):
    """Per-node CSR incidence: neighbor and edge kind (0 S, 1 out, 2 in)."""
    s_i, s_j, t_u, t_v = _edge_arrays(net)
    nodes = np.concatenate([s_i, s_j, t_u, t_v])
    nbrs = np.concatenate([s_j, s_i, t_v, t_u])
    kinds = np.concatenate(
        [
            np.zeros(len(s_i), np.int8),
            np.zeros(len(s_i), np.int8),
            np.ones(len(t_u), np.int8),
            np.full(len(t_u), 2, np.int8),
        ]
    )
    order = np.argsort(nodes, kind="stable")
    counts = np.bincount(nodes, minlength=net.n)
    indptr = np.zeros(net.n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, nbrs[order].astype(np.int64), kinds[order]


def log_likelihood(
    net: DirectedNetwork, ranks: np.ndarray, params: ModelParams
) -> float:
    """Joint log-likelihood of the network and one complete ranking.

    Sums data terms ln alpha over reciprocated pairs and ln beta over claims
    (at z = rank(claimed) - rank(claimant)), minus the rate totals over all
    pairs; factorial terms vanish for binary data. The rate totals depend
    only on the multiset of differences, which is the same for every
    permutation.
    """
    if net.n != params.n:
        raise ValueError(f"params.n = {params.n} does not match net.n = {net.n}")
    ranks = check_ranking(ranks, net.n)
    la, lb = log_rate_tables(params)
    off = net.n - 1
    total = 0.0
    sym = net.sym_array()
    asym = net.asym_array()
    if len(sym):
        total += float(np.sum(la[ranks[sym[:, 0]] - ranks[sym[:, 1]] + off]))
    if len(asym):
        total += float(np.sum(lb[ranks[asym[:, 1]] - ranks[asym[:, 0]] + off]))
    return total - _rate_penalty(params)


def _rate_penalty(params: ModelParams) -> float:
    """Sum of rates over all pairs: sum_z (n-z)[alpha(z) + beta(z) + beta(-z)]."""
    n = params.n
    z = np.arange(1, n)
    w = (n - z).astype(float)
    alpha = _alpha_values(params.alpha, z)
    beta_pos = _beta_values(params.beta, z, n)
    beta_neg = _beta_values(params.beta, -z, n)
    return float(np.sum(w * (alpha + beta_pos + beta_neg)))


def _all_rankings(n: int) -> np.ndarray:
    return np.array(
        list(itertools.permutations(range(1, n + 1))), dtype=np.int64
    )


def _exact_posterior(net: DirectedNetwork, params: ModelParams):
    """All n! rankings with their normalized posterior weights."""
    n = net.n
    if n > EXACT_ESTEP_MAX_N:
        raise ValueError(
            f"exact E-step enumerates n! rankings; refusing n = {n} > "
            f"{EXACT_ESTEP_MAX_N}"
        )
    perms = _all_rankings(n)
    la, lb = log_rate_tables(params)
    off = n - 1
    ll = np.zeros(len(perms))
    for i, j in net.sym_edges:
        ll += la[perms[:, i] - perms[:, j] + off]
    for u, v in net.asym_edges:
        ll += lb[perms[:, v] - perms[:, u] + off]
    ll -= ll.max()
    q = np.exp(ll)
    q /= q.sum()
    return perms, q


def exact_estep(
    net: DirectedNetwork, params: ModelParams
) -> tuple[RankHistograms, PosteriorSummary]:
    """Exhaustive-enumeration E-step; refuses n > 8."""
    n = net.n
    perms, q = _exact_posterior(net, params)
    off = n - 1
    acc_a = np.zeros(2 * n - 1)
    acc_b = np.zeros(2 * n - 1)
    for i, j in net.sym_edges:
        dz = perms[:, i] - perms[:, j]
        acc_a += np.bincount(dz + off, weights=q, minlength=2 * n - 1)
        acc_a += np.bincount(-dz + off, weights=q, minlength=2 * n - 1)
    for u, v in net.asym_edges:
        dz = perms[:, v] - perms[:, u]
        acc_b += np.bincount(dz + off, weights=q, minlength=2 * n - 1)
    weights = n - np.abs(np.arange(-(n - 1), n))
    hist = RankHistograms(n, acc_a / weights, acc_b / weights)
    mean = q @ perms
    second = q @ (perms.astype(float) ** 2)
    std = np.sqrt(np.maximum(second - mean**2, 0.0))
    return hist, PosteriorSummary(mean, std, len(perms))


@dataclass
class _EStepDetail:
    histograms: RankHistograms
    posterior: PosteriorSummary
    chain_histograms: list[RankHistograms]
    data_ll_mean: float
    data_ll_stderr: float
    acceptance_rate: float
    final_states: list[np.ndarray]

    def objective_with_stderr(
        self, params: ModelParams
    ) -> tuple[float, float]:
        """Expected log-likelihood at ``params`` under the pooled histograms,
        with its Monte Carlo standard error from the across-chain spread."""
        value = expected_log_likelihood(self.histograms, params)
        per_chain = [
            expected_log_likelihood(h, params) for h in self.chain_histograms
        ]
        if len(per_chain) > 1:
            stderr = float(
                np.std(per_chain, ddof=1) / math.sqrt(len(per_chain))
            )
        else:
            stderr = 0.0
        return value, stderr


def _run_chains(
    net: DirectedNetwork,
    params: ModelParams,
    cfg: McmcConfig,
    init_states: list[np.ndarray] | None = None,
) -> _EStepDetail:
    n = net.n
    if net.n != params.n:
        raise ValueError(f"params.n = {params.n} does not match net.n = {net.n}")
    s_i, s_j, t_u, t_v = _edge_arrays(net)
    indptr, nbrs, kinds = _incidence(net)
    la, lb = log_rate_tables(params)
    acc_a = np.zeros(2 * n - 1)
    acc_b = np.zeros(2 * n - 1)
    sum_r = np.zeros(n)
    sum_r2 = np.zeros(n)
    weights = n - np.abs(np.arange(-(n - 1), n))
    chain_hists = []
    chain_ll_means = []
    total_samples = 0
    total_accepted = 0
    final_states = []
    for c in range(cfg.n_chains):
        chain_seed = derive_seed(cfg.seed, f"chain-{c}")
        if init_states is not None:
            ranks = np.array(init_states[c], dtype=np.int64, copy=True)
            check_ranking(ranks, n)
        else:
            rng = np.random.default_rng(derive_seed(cfg.seed, f"chain-init-{c}"))
            ranks = rng.permutation(np.arange(1, n + 1)).astype(np.int64)
        a_c, b_c, r_c, r2_c, ll_sum, _, accepted, taken = _kernels.mcmc_chain(
            ranks,
            s_i,
            s_j,
            t_u,
            t_v,
            indptr,
            nbrs,
            kinds,
            la,
            lb,
            cfg.burn_in_sweeps,
            cfg.n_samples,
            cfg.sweep_spacing,
            chain_seed & 0xFFFFFFFF,
        )
        acc_a += a_c
        acc_b += b_c
        sum_r += r_c
        sum_r2 += r2_c
        chain_hists.append(
            RankHistograms(n, a_c / (weights * taken), b_c / (weights * taken))
        )
        chain_ll_means.append(ll_sum / taken)
        total_samples += taken
        total_accepted += accepted
        final_states.append(ranks)
    hist = RankHistograms(
        n, acc_a / (weights * total_samples), acc_b / (weights * total_samples)
    )
    mean = sum_r / total_samples
    std = np.sqrt(np.maximum(sum_r2 / total_samples - mean**2, 0.0))
    posterior = PosteriorSummary(mean, std, total_samples)
    data_ll_mean = float(np.mean(chain_ll_means))
    if cfg.n_chains > 1:
        stderr = float(np.std(chain_ll_means, ddof=1) / math.sqrt(cfg.n_chains))
    else:
        stderr = 0.0
    proposals = cfg.n_chains * (cfg.burn_in_sweeps + cfg.n_samples * cfg.sweep_spacing) * n
    return _EStepDetail(
        hist,
        posterior,
        chain_hists,
        data_ll_mean,
        stderr,
        total_accepted / proposals,
        final_states,
    )


def mcmc_estep(
    net: DirectedNetwork,
    params: ModelParams,
    cfg: McmcConfig,
    init_ranks: np.ndarray | None = None,
) -> tuple[RankHistograms, PosteriorSummary]:
    """Metropolis-sampled E-step over rankings.

    Proposals swap the ranks of a uniformly random node pair; the acceptance
    ratio is computed incrementally from edges incident to the swapped pair.
    Chains start from independent seeded random permutations (or all from
    ``init_ranks``); retained samples from all chains are pooled.
    Deterministic given cfg.seed.
    """
    init_states = None
    if init_ranks is not None:
        init_states = [np.asarray(init_ranks)] * cfg.n_chains
    detail = _run_chains(net, params, cfg, init_states)
    return detail.histograms, detail.posterior


def expected_log_likelihood(
    h: RankHistograms, params: ModelParams, floor: float = LOG_FLOOR
) -> float:
    """Posterior-averaged log-likelihood as a function of the parameters.

    sum_{z=1}^{n-1} (n-z) [a(z) ln alpha(z) - alpha(z) + b(z) ln beta(z)
    - beta(z) + b(-z) ln beta(-z) - beta(-z)], with logs floored at
    ``floor``. Only the z >= 1 entries of a enter, via symmetry.
    """
    if h.n != params.n:
        raise ValueError(f"params.n = {params.n} does not match histogram n = {h.n}")
    h.validate()
    return _alpha_block_value(h, params.alpha, floor) + _beta_block_value(
        h, params.beta, floor
    )


def _alpha_terms(h: RankHistograms):
    n = h.n
    z = np.arange(1, n)
    w = (n - z).astype(float)
    a_pos = h.a[n:]
    return z, w, a_pos


def _alpha_block_value(h: RankHistograms, alpha: AlphaParams, floor: float) -> float:
    z, w, a_pos = _alpha_terms(h)
    rate = _alpha_values(alpha, z)
    return float(np.sum(w * (a_pos * np.log(np.maximum(rate, floor)) - rate)))


def _beta_terms(h: RankHistograms):
    n = h.n
    z_pos = np.arange(1, n)
    z_all = np.concatenate([z_pos, -z_pos])
    w_all = (n - np.abs(z_all)).astype(float)
    b_all = np.concatenate([h.b[n:], h.b[: n - 1][::-1]])
    return z_all, w_all, b_all


def _beta_block_value(h: RankHistograms, beta: BetaParams, floor: float) -> float:
    z_all, w_all, b_all = _beta_terms(h)
    rate = _beta_values(beta, z_all, h.n)
    return float(np.sum(w_all * (b_all * np.log(np.maximum(rate, floor)) - rate)))


def _alpha_block_grad(
    h: RankHistograms, alpha: AlphaParams, floor: float
) -> np.ndarray:
    z, w, a_pos = _alpha_terms(h)
    g = np.exp(-(z.astype(float) ** 2) / (2.0 * alpha.sigma**2))
    rate = alpha.amp * g
    active = rate > floor
    coef = w * (np.where(active, a_pos / np.maximum(rate, floor), 0.0) - 1.0)
    d_amp = float(np.sum(coef * g))
    d_sigma = float(np.sum(coef * rate * z**2 / alpha.sigma**3))
    return np.array([d_amp, d_sigma])


def _beta_block_grad(h: RankHistograms, beta: BetaParams, floor: float) -> np.ndarray:
    z_all, w_all, b_all = _beta_terms(h)
    basis = _cosine_basis(z_all, h.n)
    series = basis @ np.asarray(beta.cos_coeffs)
    gp = np.exp(-(z_all.astype(float) ** 2) / (2.0 * beta.peak_sigma**2))
    rate = series**2 + beta.peak_amp * gp
    active = rate > floor
    coef = w_all * (np.where(active, b_all / np.maximum(rate, floor), 0.0) - 1.0)
    d_c = basis.T @ (coef * 2.0 * series)
    d_peak_amp = float(np.sum(coef * gp))
    d_peak_sigma = float(
        np.sum(coef * beta.peak_amp * gp * z_all**2 / beta.peak_sigma**3)
    )
    return np.concatenate([d_c, [d_peak_amp, d_peak_sigma]])


def objective_gradient(
    h: RankHistograms, params: ModelParams, floor: float = LOG_FLOOR
) -> np.ndarray:
    """Gradient of expected_log_likelihood in parameter order
    (amp, sigma, c0..c4, peak_amp, peak_sigma). This is the same gradient
    the M-step optimizer uses, block by block."""
    return np.concatenate(
        [
            _alpha_block_grad(h, params.alpha, floor),
            _beta_block_grad(h, params.beta, floor),
        ]
    )


_AMP_MIN = 1e-12
_SIGMA_MIN = 1e-2


def _optimize_alpha(
    h: RankHistograms, init: AlphaParams, floor: float
) -> AlphaParams:
    z, w, a_pos = _alpha_terms(h)
    sigma_max = 10.0 * h.n

    def negf(x):
        return -_alpha_block_value(h, AlphaParams(x[0], x[1]), floor)

    def negg(x):
        return -_alpha_block_grad(h, AlphaParams(x[0], x[1]), floor)

    starts = [np.array([init.amp, init.sigma])]
    wa = w * a_pos
    total = wa.sum()
    if total > 0:
        sigma_mm = max(math.sqrt(float((wa * z**2).sum() / total)), _SIGMA_MIN)
        g = np.exp(-(z.astype(float) ** 2) / (2.0 * sigma_mm**2))
        amp_mm = max(float(total / (w * g).sum()), _AMP_MIN)
        starts.append(np.array([amp_mm, sigma_mm]))
    best_x = starts[0]
    best_val = negf(best_x)
    for x0 in starts:
        res = minimize(
            negf,
            x0,
            jac=negg,
            method="L-BFGS-B",
            bounds=[(_AMP_MIN, None), (_SIGMA_MIN, sigma_max)],
        )
        if res.fun < best_val:
            best_val = res.fun
            best_x = res.x
    return AlphaParams(float(best_x[0]), float(best_x[1]))


def _optimize_beta(
    h: RankHistograms, init: BetaParams, floor: float, restarts: int, seed: int
) -> BetaParams:
    _, w_all, b_all = _beta_terms(h)
    sigma_max = 10.0 * h.n

    def unpack(x):
        return BetaParams(tuple(x[:5]), float(x[5]), float(x[6]))

    def negf(x):
        return -_beta_block_value(h, unpack(x), floor)

    def negg(x):
        return -_beta_block_grad(h, unpack(x), floor)

    x_init = np.array(
        list(init.cos_coeffs) + [init.peak_amp, init.peak_sigma], dtype=float
    )
    starts = [x_init]
    mean_b = float((w_all * b_all).sum() / w_all.sum())
    flat = np.zeros(7)
    flat[0] = math.sqrt(max(mean_b, floor))
    flat[5] = 0.0
    flat[6] = max(init.peak_sigma, _SIGMA_MIN)
    starts.append(flat)
    rng = np.random.default_rng(seed)
    scale = max(np.abs(x_init[:5]).max(), math.sqrt(max(mean_b, floor)))
    for _ in range(restarts):
        x = x_init.copy()
        x[:5] = x[:5] + rng.normal(0.0, 0.5 * scale + 1e-6, size=5)
        x[5] = abs(x[5] * rng.lognormal(0.0, 0.5) + rng.normal(0.0, 0.1 * mean_b))
        x[6] = max(x[6] * rng.lognormal(0.0, 0.3), _SIGMA_MIN)
        starts.append(x)
    bounds = [(None, None)] * 5 + [(0.0, None), (_SIGMA_MIN, sigma_max)]
    best_x = x_init
    best_val = negf(x_init)
    for x0 in starts:
        res = minimize(negf, x0, jac=negg, method="L-BFGS-B", bounds=bounds)
        if res.fun < best_val:
            best_val = res.fun
            best_x = res.x
    coeffs = np.array(best_x[:5])
    if coeffs[0] < 0:
        coeffs = -coeffs  # sign redundancy: beta depends on c only via the square
    return BetaParams(tuple(coeffs), float(best_x[5]), float(best_x[6]))


def mstep(
    h: RankHistograms,
    init: ModelParams,
    restarts: int = 3,
    seed: int = 0,
    floor: float = LOG_FLOOR,
) -> ModelParams:
    """Maximize the expected log-likelihood over parameters.

    The objective separates into alpha and beta blocks, optimized
    independently with L-BFGS-B and analytic gradients; the beta block gets
    ``restarts`` random restarts on top of the warm and flat starts. The
    initial parameters are always kept as candidates, so the objective never
    decreases across an M-step. The leading cosine coefficient is
    canonicalized nonnegative.
    """
    if h.n != init.n:
        raise ValueError(f"init.n = {init.n} does not match histogram n = {h.n}")
    h.validate()
    alpha = _optimize_alpha(h, init.alpha, floor)
    beta = _optimize_beta(h, init.beta, floor, restarts, seed)
    out = ModelParams(alpha=alpha, beta=beta, n=init.n)
    if expected_log_likelihood(h, out, floor) < expected_log_likelihood(
        h, init, floor
    ):
        logger.warning("M-step found no improvement; keeping previous parameters")
        return init
    return out


def initial_params(net: DirectedNetwork) -> ModelParams:
    """Documented EM initialization.

    alpha starts as a Gaussian whose width is the mean total degree, with
    amplitude set so the expected reciprocated-edge total matches |S| (the
    amplitude enters linearly, so the match is closed-form). beta starts
    flat at the level matching |T| over all ordered pairs, with no peak.
    """
    n = net.n
    mean_deg = degree_summary(net).mean_degree
    sigma = max(mean_deg, 1.0)
    z = np.arange(1, n)
    w = (n - z).astype(float)
    g = np.exp(-(z.astype(float) ** 2) / (2.0 * sigma**2))
    denom = float((w * g).sum())
    amp = max(net.n_sym / denom, 1e-8) if denom > 0 else 1e-8
    level = max(net.n_asym / (n * (n - 1.0)), 1e-10)
    beta = BetaParams(
        (math.sqrt(level), 0.0, 0.0, 0.0, 0.0), 0.0, sigma
    )
    return ModelParams(alpha=AlphaParams(amp, sigma), beta=beta, n=n)


def run_em(
    net: DirectedNetwork,
    em_cfg: EmConfig = EmConfig(),
    mcmc_cfg: McmcConfig = McmcConfig(),
) -> FitResult:
    """Alternate MCMC E-steps and M-steps until the rank posterior settles.

    Nodes are processed in sorted-label order internally, so results per
    external label do not depend on input node order. All chains start from
    a minimum violations ranking and are warm-started across iterations;
    every stage's seed derives from mcmc_cfg.seed by a fixed label. After
    convergence (mean absolute change in posterior mean ranks below tol,
    default 0.001 n) the posterior and histograms are recomputed with a
    longer run at the converged parameters. Non-convergence returns the
    last iterate with ``converged=False``.
    """
    if net.n < 3:
        raise ValueError(f"run_em requires n >= 3, got n = {net.n}")
    net_c, order = net.canonical_order()
    master = mcmc_cfg.seed
    tol = em_cfg.tol if em_cfg.tol is not None else 1e-3 * net.n

    mvr_ranks, mvr_report = minimum_violations_ranking(
        net_c, seed=derive_seed(master, "mvr-init")
    )
    params = initial_params(net_c)
    states = [mvr_ranks.copy() for _ in range(mcmc_cfg.n_chains)]

    trace: list[float] = []
    stderrs: list[float] = []
    prev_mean = None
    converged = False
    iterations = 0
    delta = None
    for it in range(em_cfg.max_iter):
        iterations = it + 1
        cfg_it = replace(mcmc_cfg, seed=derive_seed(master, f"estep-{it}"))
        detail = _run_chains(net_c, params, cfg_it, init_states=states)
        states = detail.final_states
        params = mstep(
            detail.histograms,
            params,
            restarts=em_cfg.mstep_restarts,
            seed=derive_seed(master, f"mstep-{it}"),
        )
        # The recorded objective is the post-M-step value on this E-step's
        # histograms (the classic EM quantity); its stderr comes from the
        # across-chain spread of the same evaluation.
        value, stderr = detail.objective_with_stderr(params)
        trace.append(value)
        stderrs.append(stderr)
        mean = detail.posterior.mean_rank
        if prev_mean is not None:
            delta = float(np.mean(np.abs(mean - prev_mean)))
            if delta < tol:
                prev_mean = mean
                converged = True
                break
        prev_mean = mean

    last_posterior = PosteriorSummary(prev_mean, np.array([]), 0)
    cfg_final = replace(
        mcmc_cfg,
        seed=derive_seed(master, "final"),
        n_samples=mcmc_cfg.n_samples * em_cfg.final_sample_factor,
    )
    final = _run_chains(net_c, params, cfg_final, init_states=states)
    final_value, final_stderr = final.objective_with_stderr(params)

    # Map canonical-order results back to the input node order.
    inv = np.empty(net.n, dtype=np.int64)
    inv[order] = np.arange(net.n)
    posterior = PosteriorSummary(
        final.posterior.mean_rank[inv],
        final.posterior.std_rank[inv],
        final.posterior.samples_used,
    )
    meta = {
        "mvr_init": mvr_report.to_dict(),
        "last_estep_mean_rank": last_posterior.mean_rank[inv].tolist(),
        "final_objective": final_value,
        "final_objective_stderr": final_stderr,
        "final_acceptance_rate": final.acceptance_rate,
        "last_delta": delta,
        "tol": tol,
        "noise_multiplier": em_cfg.noise_multiplier,
    }
    return FitResult(
        params=params,
        posterior=posterior,
        histograms=final.histograms,
        objective_trace=trace,
        objective_stderr=stderrs,
        em_iterations=iterations,
        converged=converged,
        labels=net.labels,
        meta=meta,
    )
