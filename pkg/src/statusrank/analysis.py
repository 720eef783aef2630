"""Downstream statistics on fitted rankings.

Produces figure-ready series (edge-count histograms against the fitted
rates, central-peak curves on the degree-scaled axis, the directed tail on
the rescaled axis), degree-rank curves, and attribute-rank reports with
permutation-based significance.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sp_stats

from .em import FitResult, PosteriorSummary
from .model import beta_peak_curve, beta_tail_curve, alpha_curve, beta_curve
from .network import DirectedNetwork, degree_summary


@dataclass(frozen=True)
class FigureSeries:
    """One plottable curve: x, y, optional y errors, and its normalization
    metadata."""

    name: str
    x: np.ndarray
    y: np.ndarray
    yerr: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.yerr is not None:
            object.__setattr__(self, "yerr", np.asarray(self.yerr, dtype=float))
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have equal length")
        if self.yerr is not None and self.yerr.shape != self.x.shape:
            raise ValueError("yerr must match x length")

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "metadata": self.metadata,
        }
        if self.yerr is not None:
            d["yerr"] = self.yerr.tolist()
        return d

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for key in sorted(self.metadata):
                fh.write(f"# {key}: {self.metadata[key]}\n")
            writer = csv.writer(fh)
            if self.yerr is None:
                writer.writerow(["x", "y"])
                writer.writerows(zip(self.x.tolist(), self.y.tolist()))
            else:
                writer.writerow(["x", "y", "yerr"])
                writer.writerows(
                    zip(self.x.tolist(), self.y.tolist(), self.yerr.tolist())
                )


@dataclass(frozen=True)
class AttributeTable:
    """Per-node attribute columns keyed by external label.

    Columns are categorical (string values) or numeric; missing entries are
    None. Unknown columns from a CSV ingest as categorical, except columns
    whose non-missing values are all integers, which keep integer values
    (school grade being the canonical case).
    """

    labels: tuple[str, ...]
    columns: dict[str, tuple]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("attribute labels must be unique")
        for name, col in self.columns.items():
            if len(col) != len(self.labels):
                raise ValueError(f"column {name!r} length mismatch")

    def column_for(self, labels: Sequence[str], name: str) -> list:
        """Column values aligned to ``labels``; missing labels map to None."""
        lookup = dict(zip(self.labels, self.columns[name]))
        return [lookup.get(lab) for lab in labels]


_MISSING = {"", "na", "nan", "none", "null"}


def _coerce_column(values: list[str]) -> tuple:
    out: list = [None if v.strip().lower() in _MISSING else v.strip() for v in values]
    present = [v for v in out if v is not None]
    try:
        ints = [int(v) for v in present]
    except ValueError:
        return tuple(out)
    it = iter(ints)
    return tuple(None if v is None else next(it) for v in out)


def read_attributes(path) -> AttributeTable:
    """Read a CSV attribute file: header row, first column = node label."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("attribute file is empty")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise ValueError("attribute file needs a label column plus attributes")
    data_rows = [r for r in rows[1:] if r and any(cell.strip() for cell in r)]
    labels = tuple(r[0].strip() for r in data_rows)
    columns = {}
    for k, name in enumerate(header[1:], start=1):
        raw = [r[k] if k < len(r) else "" for r in data_rows]
        columns[name] = _coerce_column(raw)
    return AttributeTable(labels, columns)


def rescale_ranks(posterior: PosteriorSummary | np.ndarray, n: int) -> np.ndarray:
    """Affine map of mean ranks onto [0, 1]: (r - 1) / (n - 1)."""
    if n < 2:
        raise ValueError("rescaling needs n >= 2")
    mean = (
        posterior.mean_rank
        if isinstance(posterior, PosteriorSummary)
        else np.asarray(posterior, dtype=float)
    )
    return (mean - 1.0) / (n - 1.0)


def ks_uniform(values: np.ndarray) -> float:
    """KS distance between the empirical CDF and Uniform[0, 1], evaluated at
    the sample points (right-continuous), so it is exactly 0 when the
    empirical distribution matches the reference at every sample point."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("ks_uniform needs at least one value")
    ref = np.clip(x, 0.0, 1.0)
    # empirical CDF at each sorted point, using the last index among ties
    emp = np.searchsorted(x, x, side="right") / x.size
    return float(np.max(np.abs(emp - ref)))


def histogram_series(fit: FitResult, net: DirectedNetwork) -> list[FigureSeries]:
    """Figure-ready curves from a fit.

    Emits (i) the measured a(z), b(z) and fitted rates on the rescaled
    difference axis z/(n-1); (ii) the fitted central peaks on the
    degree-scaled axis z/mean_degree; (iii) the directed tail (beta minus
    its Gaussian peak) on the rescaled axis, divided by the mean per-pair
    edge probability (2|S| + |T|) / (n (n-1)).
    """
    n = fit.histograms.n
    params = fit.params
    z = fit.histograms.zs()
    u = z / (n - 1)
    mean_deg = degree_summary(net).mean_degree
    p_mean = net.claim_count / (n * (n - 1.0))
    base_meta = {
        "n": n,
        "normalization": "expected edges per node pair at each rank difference",
    }
    series = [
        FigureSeries("hist_a", u, fit.histograms.a, metadata=dict(base_meta)),
        FigureSeries("hist_b", u, fit.histograms.b, metadata=dict(base_meta)),
        FigureSeries("fit_alpha", u, alpha_curve(params), metadata=dict(base_meta)),
        FigureSeries("fit_beta", u, beta_curve(params), metadata=dict(base_meta)),
    ]
    peak_meta = {"n": n, "mean_degree": mean_deg, "x_axis": "z / mean_degree"}
    x_deg = z / mean_deg if mean_deg > 0 else z.astype(float)
    series.append(
        FigureSeries(
            "peak_alpha_scaled", x_deg, alpha_curve(params), metadata=dict(peak_meta)
        )
    )
    series.append(
        FigureSeries(
            "peak_beta_scaled",
            x_deg,
            beta_peak_curve(params),
            metadata=dict(peak_meta),
        )
    )
    tail_meta = {
        "n": n,
        "mean_pair_probability": p_mean,
        "normalization": "beta minus fitted peak, divided by mean per-pair "
        "edge probability",
    }
    tail = beta_tail_curve(params)
    series.append(
        FigureSeries(
            "beta_tail",
            u,
            tail / p_mean if p_mean > 0 else tail,
            metadata=tail_meta,
        )
    )
    return series


def degree_rank_curves(fit: FitResult, net: DirectedNetwork) -> list[FigureSeries]:
    """Mean rescaled rank binned by exact degree, for in, out, and total
    degree, with standard errors and a Spearman correlation per degree type.
    Bins with fewer than 5 nodes are flagged in the metadata."""
    deg = degree_summary(net)
    rr = rescale_ranks(fit.posterior, net.n)
    out = []
    for kind, values in (
        ("in", deg.in_degree),
        ("out", deg.out_degree),
        ("total", deg.total_degree),
    ):
        uniq = np.unique(values)
        means = []
        errs = []
        small = []
        for d in uniq:
            sel = rr[values == d]
            means.append(float(sel.mean()))
            errs.append(float(sel.std(ddof=1) / np.sqrt(sel.size)) if sel.size > 1 else 0.0)
            if sel.size < 5:
                small.append(int(d))
        if np.all(values == values[0]) or np.all(rr == rr[0]):
            rho, pval = float("nan"), float("nan")
        else:
            rho, pval = sp_stats.spearmanr(values, rr)
        out.append(
            FigureSeries(
                f"rank_vs_{kind}_degree",
                uniq.astype(float),
                np.array(means),
                yerr=np.array(errs),
                metadata={
                    "degree_type": kind,
                    "spearman_rho": float(rho),
                    "spearman_p": float(pval),
                    "small_bins": small,
                },
            )
        )
    return out


def _f_statistic(values: np.ndarray, codes: np.ndarray, k: int) -> float:
    """One-way ANOVA F statistic over groups coded 0..k-1."""
    n = values.size
    counts = np.bincount(codes, minlength=k).astype(float)
    sums = np.bincount(codes, weights=values, minlength=k)
    grand = values.mean()
    group_means = sums / counts
    ss_between = float(np.sum(counts * (group_means - grand) ** 2))
    ss_within = float(np.sum((values - group_means[codes]) ** 2))
    df_between = k - 1
    df_within = n - k
    if df_within <= 0 or ss_within == 0.0:
        return float("inf") if ss_between > 0 else 0.0
    return (ss_between / df_between) / (ss_within / df_within)


def _t_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """Welch t statistic for the difference of two group means."""
    vx = x.var(ddof=1) / x.size if x.size > 1 else 0.0
    vy = y.var(ddof=1) / y.size if y.size > 1 else 0.0
    denom = np.sqrt(vx + vy)
    if denom == 0.0:
        return 0.0 if x.mean() == y.mean() else float("inf")
    return float((x.mean() - y.mean()) / denom)


def _perm_pvalue(observed: float, perm_stats: np.ndarray) -> float:
    """Permutation p-value with the add-one correction, so it is exact to
    resolution 1/(#permutations + 1)."""
    return float((1 + np.sum(perm_stats >= observed)) / (perm_stats.size + 1))


def attribute_rank_summary(
    fit: FitResult,
    attrs: AttributeTable,
    contrasts: Iterable[tuple[str, object, object]] | None = None,
    n_permutations: int = 10_000,
    seed: int = 0,
) -> dict:
    """Attribute-group rank statistics with permutation significance.

    For each attribute column: per-group mean rescaled rank and a
    group-vs-Uniform[0,1] KS statistic; a one-way F statistic across groups
    and Welch t statistics for designated pairwise contrasts, each with a
    label-shuffling permutation p-value. Default contrasts are consecutive
    value pairs of integer-valued columns (school grades). Columns with a
    single group skip the group-difference tests.
    """
    rr = rescale_ranks(fit.posterior, len(fit.labels))
    rng = np.random.default_rng(seed)
    report: dict = {
        "n_permutations": n_permutations,
        "seed": seed,
        "attributes": {},
    }
    contrasts = list(contrasts) if contrasts is not None else None
    for name in attrs.columns:
        aligned = attrs.column_for(fit.labels, name)
        mask = np.array([v is not None for v in aligned])
        if not mask.any():
            report["attributes"][name] = {"error": "no nodes with this attribute"}
            continue
        values = rr[mask]
        groups = [aligned[i] for i in np.flatnonzero(mask)]
        uniq = sorted(set(groups), key=lambda g: (str(type(g)), g))
        codes = np.array([uniq.index(g) for g in groups])
        k = len(uniq)
        entry: dict = {"n_nodes": int(mask.sum()), "groups": {}}
        for gi, g in enumerate(uniq):
            sel = values[codes == gi]
            entry["groups"][str(g)] = {
                "count": int(sel.size),
                "mean_rescaled_rank": float(sel.mean()),
                "ks_uniform_d": ks_uniform(sel),
            }
        if k >= 2:
            f_obs = _f_statistic(values, codes, k)
            perm = np.empty(n_permutations)
            for p in range(n_permutations):
                perm[p] = _f_statistic(values, rng.permutation(codes), k)
            entry["anova"] = {"f_stat": f_obs, "p_perm": _perm_pvalue(f_obs, perm)}
        else:
            entry["anova"] = None
        pairs = []
        if contrasts is not None:
            pairs = [(a, b) for col, a, b in contrasts if col == name]
        elif all(isinstance(g, int) for g in uniq) and k >= 2:
            pairs = list(zip(uniq[:-1], uniq[1:]))
        entry["contrasts"] = []
        for a, b in pairs:
            if a not in uniq or b not in uniq:
                entry["contrasts"].append(
                    {"group_a": str(a), "group_b": str(b), "error": "group missing"}
                )
                continue
            sel = (codes == uniq.index(a)) | (codes == uniq.index(b))
            sub_vals = values[sel]
            sub_is_a = codes[sel] == uniq.index(a)
            t_obs = abs(_t_statistic(sub_vals[sub_is_a], sub_vals[~sub_is_a]))
            perm = np.empty(n_permutations)
            for p in range(n_permutations):
                shuffled = rng.permutation(sub_is_a)
                perm[p] = abs(
                    _t_statistic(sub_vals[shuffled], sub_vals[~shuffled])
                )
            entry["contrasts"].append(
                {
                    "group_a": str(a),
                    "group_b": str(b),
                    "t_stat": t_obs,
                    "p_perm": _perm_pvalue(t_obs, perm),
                }
            )
        report["attributes"][name] = entry
    return report


def attribute_rank_series(fit: FitResult, attrs: AttributeTable) -> list[FigureSeries]:
    """Mean rescaled rank per group for integer-valued attribute columns."""
    rr = rescale_ranks(fit.posterior, len(fit.labels))
    out = []
    for name in attrs.columns:
        aligned = attrs.column_for(fit.labels, name)
        pairs = [(v, r) for v, r in zip(aligned, rr) if isinstance(v, int)]
        if not pairs:
            continue
        uniq = sorted(set(v for v, _ in pairs))
        xs = []
        ys = []
        es = []
        for g in uniq:
            sel = np.array([r for v, r in pairs if v == g])
            xs.append(float(g))
            ys.append(float(sel.mean()))
            es.append(float(sel.std(ddof=1) / np.sqrt(sel.size)) if sel.size > 1 else 0.0)
        out.append(
            FigureSeries(
                f"rank_vs_{name}",
                np.array(xs),
                np.array(ys),
                yerr=np.array(es),
                metadata={"attribute": name},
            )
        )
    return out


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
