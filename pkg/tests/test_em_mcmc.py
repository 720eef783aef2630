import itertools

import numpy as np
import pytest
from scipy import stats as sp_stats

import statusrank as sr
from statusrank import _kernels
from statusrank.em import _edge_arrays, _exact_posterior, _incidence
from statusrank.model import log_rate_tables
from statusrank.network import network_from_claims

from conftest import random_network, random_params


class TestSwapDelta:
    def test_matches_full_log_likelihood_difference(self):
        rng = np.random.default_rng(0)
        for k in range(6):
            n = int(rng.integers(5, 25))
            net = random_network(rng, n, p_sym=0.2, p_dir=0.3)
            params = random_params(rng, n)
            la, lb = log_rate_tables(params)
            indptr, nbrs, kinds = _incidence(net)
            ranks = rng.permutation(np.arange(1, n + 1)).astype(np.int64)
            base = sr.log_likelihood(net, ranks, params)
            for _ in range(30):
                x, y = rng.choice(n, size=2, replace=False)
                delta = _kernels.swap_delta(
                    ranks, x, y, indptr, nbrs, kinds, la, lb, n - 1
                )
                swapped = ranks.copy()
                swapped[x], swapped[y] = swapped[y], swapped[x]
                full = sr.log_likelihood(net, swapped, params) - base
                assert delta == pytest.approx(full, abs=1e-10)

    def test_zero_delta_for_untouched_edges(self):
        # swapping two isolated nodes changes no edge difference
        net = network_from_claims(
            tuple(f"v{i}" for i in range(5)), [(0, 1), (1, 0), (0, 2)]
        )
        params = random_params(np.random.default_rng(1), 5)
        la, lb = log_rate_tables(params)
        indptr, nbrs, kinds = _incidence(net)
        ranks = np.array([1, 2, 3, 4, 5], dtype=np.int64)
        delta = _kernels.swap_delta(ranks, 3, 4, indptr, nbrs, kinds, la, lb, 4)
        assert delta == 0.0


class TestMcmcEstep:
    def test_zero_edge_network_uniform(self):
        n = 10
        net = sr.DirectedNetwork(tuple(f"v{i}" for i in range(n)), (), ())
        params = random_params(np.random.default_rng(2), n)
        cfg = sr.McmcConfig(
            burn_in_sweeps=50, n_samples=4000, sweep_spacing=2, n_chains=4, seed=3
        )
        hist, post = sr.mcmc_estep(net, params, cfg)
        assert np.all(hist.a == 0) and np.all(hist.b == 0)
        # mean rank of every node within 3 stderr of (n+1)/2 under the
        # uniform target; stderr is bounded by the iid value times a small
        # autocorrelation allowance
        sd = np.sqrt((n**2 - 1) / 12.0)
        stderr = sd / np.sqrt(post.samples_used / 10.0)
        assert np.max(np.abs(post.mean_rank - (n + 1) / 2.0)) < 3 * stderr

    def test_matches_exact_oracle(self, small_fixtures):
        # light version of the acceptance run: 10^5 retained samples
        net, params = small_fixtures[0]
        cfg = sr.McmcConfig(
            burn_in_sweeps=200, n_samples=25_000, sweep_spacing=1, n_chains=4, seed=11
        )
        hist_mc, post_mc = sr.mcmc_estep(net, params, cfg)
        hist_ex, post_ex = sr.exact_estep(net, params)
        assert np.max(np.abs(hist_mc.a - hist_ex.a)) < 0.05
        assert np.max(np.abs(hist_mc.b - hist_ex.b)) < 0.05
        assert np.max(np.abs(post_mc.mean_rank - post_ex.mean_rank)) < 0.1

    def test_identities_hold_per_sample(self, small_fixtures):
        for net, params in small_fixtures[:3]:
            cfg = sr.McmcConfig(
                burn_in_sweeps=20, n_samples=500, sweep_spacing=1, n_chains=2, seed=5
            )
            hist, post = sr.mcmc_estep(net, params, cfg)
            w = hist.pair_weights()
            assert np.max(np.abs(hist.a - hist.a[::-1])) <= 1e-9
            assert (w * hist.a).sum() == pytest.approx(2 * net.n_sym, rel=1e-9)
            assert (w * hist.b).sum() == pytest.approx(net.n_asym, rel=1e-9)
            assert post.mean_rank.sum() == pytest.approx(
                net.n * (net.n + 1) / 2, rel=1e-9
            )

    def test_deterministic_given_seed(self, small_fixtures):
        net, params = small_fixtures[1]
        cfg = sr.McmcConfig(
            burn_in_sweeps=20, n_samples=200, sweep_spacing=1, n_chains=2, seed=9
        )
        h1, p1 = sr.mcmc_estep(net, params, cfg)
        h2, p2 = sr.mcmc_estep(net, params, cfg)
        assert np.array_equal(h1.a, h2.a) and np.array_equal(h1.b, h2.b)
        assert np.array_equal(p1.mean_rank, p2.mean_rank)

    def test_init_ranks_respected(self, small_fixtures):
        net, params = small_fixtures[2]
        cfg = sr.McmcConfig(
            burn_in_sweeps=1, n_samples=10, sweep_spacing=1, n_chains=2, seed=13
        )
        init = np.arange(1, net.n + 1)
        hist, post = sr.mcmc_estep(net, params, cfg, init_ranks=init)
        assert post.samples_used == 20


class TestDetailedBalance:
    def test_sampled_distribution_matches_posterior(self):
        # n=4: compare the visit distribution over all 24 permutations with
        # the exact posterior by a chi-squared test at 10^6 samples; samples
        # spaced 10 sweeps apart are effectively independent at this size
        rng = np.random.default_rng(14)
        net = random_network(rng, 4, p_sym=0.3, p_dir=0.4)
        params = random_params(rng, 4)
        perms, q = _exact_posterior(net, params)

        indptr, nbrs, kinds = _incidence(net)
        la, lb = log_rate_tables(params)
        state = np.arange(1, 5, dtype=np.int64)
        codes = _kernels.mcmc_visit_codes(
            state, indptr, nbrs, kinds, la, lb, 200, 1_000_000, 10, 77
        )
        n = net.n
        perm_codes = (perms * (n + 1) ** np.arange(n)).sum(axis=1)
        counts = codes[perm_codes]
        assert counts.sum() == 1_000_000  # every sample is a permutation
        expected = q * counts.sum()
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        threshold = sp_stats.chi2.ppf(0.999, df=len(perms) - 1)
        assert chi2 < threshold
