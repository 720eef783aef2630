import numpy as np
import pytest

import statusrank as sr
from statusrank.analysis import (
    AttributeTable,
    FigureSeries,
    _f_statistic,
    _perm_pvalue,
    attribute_rank_series,
    read_attributes,
)
from statusrank.em import FitResult, PosteriorSummary, RankHistograms

from conftest import random_params


def make_fit(mean_ranks, params=None, labels=None):
    """Minimal FitResult around given posterior mean ranks."""
    n = len(mean_ranks)
    if labels is None:
        labels = tuple(f"v{i}" for i in range(n))
    if params is None:
        params = random_params(np.random.default_rng(0), n)
    hist = RankHistograms(n, np.zeros(2 * n - 1), np.zeros(2 * n - 1))
    post = PosteriorSummary(
        np.asarray(mean_ranks, dtype=float), np.zeros(n), 1
    )
    return FitResult(
        params=params,
        posterior=post,
        histograms=hist,
        objective_trace=[0.0],
        objective_stderr=[0.0],
        em_iterations=1,
        converged=True,
        labels=labels,
    )


class TestRescaleRanks:
    def test_endpoints(self):
        out = sr.rescale_ranks(np.array([1.0, 10.0]), 10)
        assert out[0] == 0.0 and out[1] == 1.0

    def test_uniform_posterior_maps_to_half(self):
        n = 9
        out = sr.rescale_ranks(np.full(n, (n + 1) / 2.0), n)
        np.testing.assert_allclose(out, 0.5)

    def test_order_preserving(self):
        rng = np.random.default_rng(0)
        mean = rng.uniform(1, 50, 20)
        out = sr.rescale_ranks(mean, 50)
        assert np.array_equal(np.argsort(out), np.argsort(mean))

    def test_accepts_posterior_summary(self):
        post = PosteriorSummary(np.array([1.0, 3.0, 2.0]), np.zeros(3), 1)
        np.testing.assert_allclose(sr.rescale_ranks(post, 3), [0.0, 1.0, 0.5])


class TestKsUniform:
    def test_zero_when_matching_at_sample_points(self):
        n = 10
        x = np.arange(1, n + 1) / n
        assert sr.ks_uniform(x) == 0.0

    def test_bounded(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            vals = rng.uniform(0, 1, int(rng.integers(1, 40)))
            d = sr.ks_uniform(vals)
            assert 0.0 <= d <= 1.0

    def test_degenerate_sample(self):
        assert sr.ks_uniform(np.array([0.0])) == 1.0


class TestHistogramSeries:
    def test_alpha_series_symmetric_and_tail_normalized(self):
        rng = np.random.default_rng(2)
        n = 30
        net_lines = "\n".join(f"a{i} a{i+1}" for i in range(n - 1))
        net = sr.parse_edge_list(net_lines)
        params = random_params(rng, n)
        fit = make_fit(rng.uniform(1, n, n), params=params, labels=net.labels)
        series = {s.name: s for s in sr.histogram_series(fit, net)}
        alpha = series["fit_alpha"].y
        np.testing.assert_allclose(alpha, alpha[::-1], rtol=1e-12)
        # tail series of a peak-only beta is identically zero
        peak_only = sr.ModelParams(
            params.alpha, sr.BetaParams((0.0,) * 5, 0.3, 2.0), n
        )
        fit2 = make_fit(rng.uniform(1, n, n), params=peak_only, labels=net.labels)
        series2 = {s.name: s for s in sr.histogram_series(fit2, net)}
        assert np.all(series2["beta_tail"].y == 0.0)

    def test_tail_normalization_metadata(self):
        n = 5
        net = sr.parse_edge_list("a b\nb a\nb c\nc d\nd e\n")
        params = random_params(np.random.default_rng(3), n)
        fit = make_fit([1, 2, 3, 4, 5], params=params, labels=net.labels)
        series = {s.name: s for s in sr.histogram_series(fit, net)}
        p_mean = net.claim_count / (n * (n - 1))
        assert series["beta_tail"].metadata["mean_pair_probability"] == pytest.approx(
            p_mean
        )


class TestDegreeRankCurves:
    def test_beta_zero_in_equals_out(self):
        # with no directed claims every node has in == out, so the two
        # Spearman correlations agree exactly
        rng = np.random.default_rng(4)
        lines = []
        for k in range(0, 20, 2):
            lines.append(f"n{k} n{k+1}")
            lines.append(f"n{k+1} n{k}")
        lines.append("n0 n2")
        lines.append("n2 n0")
        net = sr.parse_edge_list("\n".join(lines))
        fit = make_fit(rng.permutation(np.arange(1, net.n + 1)), labels=net.labels)
        series = {s.name: s for s in sr.degree_rank_curves(fit, net)}
        rho_in = series["rank_vs_in_degree"].metadata["spearman_rho"]
        rho_out = series["rank_vs_out_degree"].metadata["spearman_rho"]
        assert rho_in == pytest.approx(rho_out, abs=1e-12)

    def test_small_bins_flagged(self):
        net = sr.parse_edge_list("a b\nb c\nc d\n")
        fit = make_fit([1, 2, 3, 4], labels=net.labels)
        series = sr.degree_rank_curves(fit, net)
        for s in series:
            assert s.metadata["small_bins"]  # n=4: every bin is small


class TestFigureSeries:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            FigureSeries("x", np.arange(3), np.arange(4))

    def test_csv_round_trip_values(self, tmp_path):
        s = FigureSeries(
            "demo",
            np.array([0.0, 0.5]),
            np.array([1.0, 2.0]),
            yerr=np.array([0.1, 0.2]),
            metadata={"normalization": "test"},
        )
        path = tmp_path / "demo.csv"
        s.write_csv(path)
        text = path.read_text()
        assert "# normalization: test" in text
        assert "x,y,yerr" in text
        assert "0.5,2.0,0.2" in text


class TestAttributeTable:
    def test_read_csv_with_missing_and_types(self, tmp_path):
        path = tmp_path / "attrs.csv"
        path.write_text(
            "label,grade,sex,club\n"
            "a,7,F,chess\n"
            "b,8,M,\n"
            "c,,F,chess\n"
        )
        table = read_attributes(path)
        assert table.columns["grade"] == (7, 8, None)
        assert table.columns["sex"] == ("F", "M", "F")
        assert table.columns["club"] == ("chess", None, "chess")

    def test_align_to_network_labels(self):
        table = AttributeTable(("a", "b"), {"grade": (7, 8)})
        assert table.column_for(("b", "c", "a"), "grade") == [8, None, 7]


class TestAttributeRankSummary:
    def test_single_group_skips_contrasts(self):
        fit = make_fit(np.arange(1, 11))
        attrs = AttributeTable(fit.labels, {"sex": ("F",) * 10})
        report = sr.attribute_rank_summary(fit, attrs, n_permutations=50)
        entry = report["attributes"]["sex"]
        assert entry["anova"] is None
        assert entry["contrasts"] == []
        assert "ks_uniform_d" in entry["groups"]["F"]

    def test_planted_attribute_detected(self):
        # attribute = quartile of the rank itself: separation is maximal
        n = 80
        ranks = np.arange(1, n + 1)
        fit = make_fit(ranks)
        quartile = tuple(int(q) for q in np.minimum((ranks - 1) * 4 // n, 3))
        attrs = AttributeTable(fit.labels, {"quartile": quartile})
        report = sr.attribute_rank_summary(fit, attrs, n_permutations=999, seed=1)
        assert report["attributes"]["quartile"]["anova"]["p_perm"] <= 0.01

    def test_null_pvalue_floor(self):
        # the add-one correction keeps p >= 1/(M+1)
        rng = np.random.default_rng(5)
        fit = make_fit(rng.permutation(np.arange(1, 31)))
        attrs = AttributeTable(
            fit.labels, {"coin": tuple(rng.choice(["H", "T"], 30))}
        )
        report = sr.attribute_rank_summary(fit, attrs, n_permutations=99, seed=2)
        p = report["attributes"]["coin"]["anova"]["p_perm"]
        assert p >= 1.0 / 100.0

    def test_integer_groups_get_consecutive_contrasts(self):
        rng = np.random.default_rng(6)
        fit = make_fit(rng.permutation(np.arange(1, 41)))
        grades = tuple(int(g) for g in rng.integers(7, 10, 40))
        attrs = AttributeTable(fit.labels, {"grade": grades})
        report = sr.attribute_rank_summary(fit, attrs, n_permutations=99, seed=3)
        pairs = [
            (c["group_a"], c["group_b"])
            for c in report["attributes"]["grade"]["contrasts"]
        ]
        assert pairs == [("7", "8"), ("8", "9")]

    def test_missing_values_excluded(self):
        fit = make_fit(np.arange(1, 7))
        attrs = AttributeTable(fit.labels, {"g": (1, 1, None, 2, 2, None)})
        report = sr.attribute_rank_summary(fit, attrs, n_permutations=50, seed=4)
        assert report["attributes"]["g"]["n_nodes"] == 4

    def test_attribute_series_for_integer_columns(self):
        fit = make_fit(np.arange(1, 9))
        attrs = AttributeTable(
            fit.labels, {"grade": (7, 7, 8, 8, 9, 9, 10, 10), "sex": ("F",) * 8}
        )
        series = attribute_rank_series(fit, attrs)
        assert [s.name for s in series] == ["rank_vs_grade"]
        assert series[0].x.tolist() == [7.0, 8.0, 9.0, 10.0]


class TestPermutationMachinery:
    def test_f_statistic_matches_scipy(self):
        from scipy import stats as sp_stats

        rng = np.random.default_rng(7)
        values = rng.normal(0, 1, 30)
        codes = rng.integers(0, 3, 30)
        ours = _f_statistic(values, codes, 3)
        groups = [values[codes == k] for k in range(3)]
        theirs = sp_stats.f_oneway(*groups).statistic
        assert ours == pytest.approx(theirs, rel=1e-10)

    def test_perm_pvalue_resolution(self):
        stats = np.arange(99, dtype=float)
        assert _perm_pvalue(1000.0, stats) == 1.0 / 100.0
        assert _perm_pvalue(-1.0, stats) == 1.0
