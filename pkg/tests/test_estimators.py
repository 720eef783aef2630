import numpy as np
import pytest
from sklearn.base import clone

import statusrank as sr
from statusrank.estimators import network_from_adjacency

from conftest import random_network


def tiny_adjacency():
    # chain of claims 0->1->2->3 plus a reciprocated pair (0, 2)
    A = np.zeros((4, 4), dtype=int)
    A[0, 1] = A[1, 2] = A[2, 3] = 1
    A[0, 2] = A[2, 0] = 1
    return A


class TestNetworkFromAdjacency:
    def test_decomposition(self):
        net = network_from_adjacency(tiny_adjacency())
        assert net.sym_edges == ((0, 2),)
        assert net.asym_edges == ((0, 1), (1, 2), (2, 3))

    def test_sparse_accepted(self):
        from scipy.sparse import csr_matrix

        net = network_from_adjacency(csr_matrix(tiny_adjacency()))
        assert net.n == 4

    def test_rejects_nonsquare_selfloop_nonbinary(self):
        with pytest.raises(ValueError):
            network_from_adjacency(np.zeros((2, 3)))
        bad = np.zeros((2, 2), dtype=int)
        bad[0, 0] = 1
        with pytest.raises(ValueError):
            network_from_adjacency(bad)
        bad2 = np.zeros((2, 2))
        bad2[0, 1] = 2
        with pytest.raises(ValueError):
            network_from_adjacency(bad2)

    def test_passthrough(self):
        net = sr.parse_edge_list("a b\n")
        assert network_from_adjacency(net) is net


class TestStatusRanker:
    def small_ranker(self, **kw):
        defaults = dict(
            burn_in_sweeps=20,
            n_samples=50,
            sweep_spacing=2,
            n_chains=2,
            max_iter=4,
            final_sample_factor=2,
            random_state=7,
        )
        defaults.update(kw)
        return sr.StatusRanker(**defaults)

    def test_sklearn_param_conventions(self):
        est = self.small_ranker()
        params = est.get_params()
        assert params["n_samples"] == 50
        est2 = clone(est)
        assert est2.get_params() == params
        est2.set_params(n_samples=99)
        assert est2.n_samples == 99 and est.n_samples == 50

    def test_fit_on_network_and_adjacency(self):
        rng = np.random.default_rng(0)
        net = random_network(rng, 12, p_sym=0.25, p_dir=0.35)
        est = self.small_ranker().fit(net)
        assert est.ranking_.shape == (12,)
        assert np.isfinite(est.ranking_).all()
        assert est.predict().shape == (12,)
        # same network as an adjacency matrix: same labels "0".."11" order
        A = np.zeros((12, 12), dtype=int)
        for i, j in net.sym_edges:
            A[i, j] = A[j, i] = 1
        for u, v in net.asym_edges:
            A[u, v] = 1
        est2 = self.small_ranker().fit(A)
        assert est2.n_nodes_ == 12

    def test_fit_predict_matches_ranking(self):
        rng = np.random.default_rng(1)
        net = random_network(rng, 10, p_sym=0.3, p_dir=0.3)
        est = self.small_ranker()
        pred = est.fit_predict(net)
        np.testing.assert_array_equal(pred, est.ranking_)

    def test_component_restriction_gives_nan_outside(self):
        # two weak components: fit restricted to the larger one
        net = sr.parse_edge_list("a b\nb c\nc a\nx y\n")
        est = self.small_ranker(component="weak").fit(net)
        assert np.isnan(est.ranking_[-1]) or np.isnan(est.ranking_[-2])
        assert np.isfinite(est.ranking_[:3]).all()

    def test_unfitted_predict_raises(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            self.small_ranker().predict()

    def test_score_is_final_objective(self):
        rng = np.random.default_rng(2)
        net = random_network(rng, 8, p_sym=0.3, p_dir=0.3)
        est = self.small_ranker().fit(net)
        assert est.score() == est.result_.meta["final_objective"]


class TestMvrRanker:
    def test_chain(self):
        est = sr.MvrRanker(random_state=3).fit(sr.parse_edge_list("u v\nv w\n"))
        assert est.violations_ == 0
        assert est.fraction_upward_ == 1.0
        assert est.score() == 0.0

    def test_clone_and_params(self):
        est = sr.MvrRanker(restarts=5)
        assert clone(est).get_params()["restarts"] == 5

    def test_fit_predict_is_permutation(self):
        rng = np.random.default_rng(4)
        net = random_network(rng, 15, p_sym=0.1, p_dir=0.4)
        ranks = sr.MvrRanker(random_state=1).fit_predict(net)
        assert sorted(ranks.tolist()) == list(range(1, 16))
