"""Scikit-learn style estimators wrapping the ranking algorithms.

Both estimators fit on a DirectedNetwork or a square (dense or sparse)
binary adjacency matrix with A[u, v] = 1 meaning u claims v. They follow
the sklearn parameter conventions (get_params / set_params / clone) so they
compose with the wider ecosystem.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .em import EmConfig, McmcConfig, run_em
from .mvr import AnnealSchedule, minimum_violations_ranking
from .network import DirectedNetwork, largest_component, network_from_claims


def network_from_adjacency(A, labels=None) -> DirectedNetwork:
    """Decompose a square binary adjacency matrix into a DirectedNetwork.

    Mutual entries become reciprocated edges; single entries become claims.
    The diagonal must be zero.
    """
    if isinstance(A, DirectedNetwork):
        return A
    if sparse.issparse(A):
        A = A.toarray()
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {A.shape}")
    if not np.isin(A, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if np.any(np.diag(A) != 0):
        raise ValueError("adjacency must have a zero diagonal (no self-claims)")
    n = A.shape[0]
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    us, vs = np.nonzero(A)
    return network_from_claims(labels, zip(us.tolist(), vs.tolist()))


class StatusRanker(BaseEstimator):
    """Posterior-mean status ranking by EM with a Monte Carlo E-step.

    Parameters mirror the EM and sampler configuration; ``component``
    optionally restricts the fit to the largest strong or weak component
    (excluded nodes receive NaN ranks).

    Attributes (after fit)
    ----------------------
    ranking_ : posterior mean rank per input node
    rescaled_rank_ : mean rank mapped onto [0, 1]
    result_ : the full FitResult
    """

    def __init__(
        self,
        component: str | None = None,
        burn_in_sweeps: int = 200,
        n_samples: int = 200,
        sweep_spacing: int = 5,
        n_chains: int = 4,
        max_iter: int = 100,
        tol: float | None = None,
        final_sample_factor: int = 4,
        random_state: int = 0,
    ):
        self.component = component
        self.burn_in_sweeps = burn_in_sweeps
        self.n_samples = n_samples
        self.sweep_spacing = sweep_spacing
        self.n_chains = n_chains
        self.max_iter = max_iter
        self.tol = tol
        self.final_sample_factor = final_sample_factor
        self.random_state = random_state

    def fit(self, X, y=None):
        net = network_from_adjacency(X)
        fit_net = net
        if self.component is not None:
            fit_net = largest_component(net, mode=self.component)
        mcmc = McmcConfig(
            burn_in_sweeps=self.burn_in_sweeps,
            n_samples=self.n_samples,
            sweep_spacing=self.sweep_spacing,
            n_chains=self.n_chains,
            seed=self.random_state,
        )
        em = EmConfig(
            max_iter=self.max_iter,
            tol=self.tol,
            final_sample_factor=self.final_sample_factor,
        )
        result = run_em(fit_net, em, mcmc)
        by_label = dict(zip(result.labels, result.posterior.mean_rank))
        self.n_nodes_ = net.n
        self.labels_ = net.labels
        self.result_ = result
        self.params_ = result.params
        self.converged_ = result.converged
        self.ranking_ = np.array(
            [by_label.get(lab, np.nan) for lab in net.labels]
        )
        m = fit_net.n
        self.rescaled_rank_ = (self.ranking_ - 1.0) / (m - 1.0)
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).ranking_

    def predict(self, X=None) -> np.ndarray:
        """Posterior mean ranks of the fitted network's nodes."""
        check_is_fitted(self, "ranking_")
        return self.ranking_

    def score(self, X=None, y=None) -> float:
        """Final expected log-likelihood of the fit (long-run estimate)."""
        check_is_fitted(self, "result_")
        return self.result_.meta["final_objective"]


class MvrRanker(BaseEstimator):
    """Minimum violations ranking of the unreciprocated subnetwork."""

    def __init__(
        self,
        t0: float = 1.0,
        cooling: float = 0.995,
        stall_sweeps: int = 50,
        restarts: int = 3,
        random_state: int = 0,
    ):
        self.t0 = t0
        self.cooling = cooling
        self.stall_sweeps = stall_sweeps
        self.restarts = restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        net = network_from_adjacency(X)
        schedule = AnnealSchedule(
            t0=self.t0,
            cooling=self.cooling,
            stall_sweeps=self.stall_sweeps,
            restarts=self.restarts,
        )
        ranks, report = minimum_violations_ranking(
            net, seed=self.random_state, schedule=schedule
        )
        self.labels_ = net.labels
        self.ranking_ = ranks
        self.report_ = report
        self.violations_ = report.violations
        self.fraction_upward_ = report.fraction_upward
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).ranking_

    def predict(self, X=None) -> np.ndarray:
        check_is_fitted(self, "ranking_")
        return self.ranking_

    def score(self, X=None, y=None) -> float:
        """Negative violation count (higher is better)."""
        check_is_fitted(self, "report_")
        return -float(self.violations_)
