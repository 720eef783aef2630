import numpy as np
import pytest

import statusrank as sr
from statusrank.network import network_from_claims


def random_network(rng, n, p_sym=0.2, p_dir=0.25, labels=None):
    """Random small network with mixed S/T edges."""
    claims = set()
    for i in range(n):
        for j in range(i + 1, n):
            r = rng.random()
            if r < p_sym:
                claims.add((i, j))
                claims.add((j, i))
            elif r < p_sym + p_dir:
                if rng.random() < 0.5:
                    claims.add((i, j))
                else:
                    claims.add((j, i))
    if labels is None:
        labels = tuple(f"v{i}" for i in range(n))
    return network_from_claims(labels, claims)


def random_params(rng, n):
    """Random moderate model parameters, bounded away from the log floor."""
    coeffs = rng.normal(0.0, 0.25, size=5)
    coeffs[0] = rng.uniform(0.4, 0.9)
    return sr.ModelParams(
        alpha=sr.AlphaParams(rng.uniform(0.2, 0.8), rng.uniform(1.0, 3.0)),
        beta=sr.BetaParams(tuple(coeffs), rng.uniform(0.05, 0.4), rng.uniform(1.0, 3.0)),
        n=n,
    )


@pytest.fixture(scope="session")
def small_fixtures():
    """Ten seeded n=7 networks with random parameters, used as E-step oracles."""
    out = []
    for k in range(10):
        rng = np.random.default_rng(100 + k)
        net = random_network(rng, 7, p_sym=0.25, p_dir=0.3)
        out.append((net, random_params(rng, 7)))
    return out
