"""Aggregate tables over Monte Carlo records: prediction accuracy and partial dependence.

Every table carries its bin counts so tolerance checks can be audited.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

CONSENSUS = ("all-D", "all-C")
MIN_BIN_COUNT = 30
DEFAULT_BINS = 20
DEFAULT_LAMBDA_BANDS = (0.0, 2.5, 5.0, 7.5, 10.0)


@dataclass
class Table:
    """A named CSV-ready table. ``empty`` marks a filter that left nothing."""
    name: str
    columns: list
    rows: list = field(default_factory=list)
    empty: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        if self.empty:
            writer.writerow(["EMPTY"] + [""] * (len(self.columns) - 1))
        for row in self.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows])


def quantile_bins(values, n_bins: int) -> np.ndarray:
    """Bin index per value for equal-count bins (ties broken by order)."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    idx = np.empty(values.size, dtype=int)
    idx[order] = np.arange(values.size) * n_bins // max(values.size, 1)
    return idx


def consensus_shares(records) -> dict:
    """Outcome shares, with and without nonconverged runs in the denominator."""
    outcomes = [r.outcome for r in records]
    total = len(outcomes)
    counts = {k: outcomes.count(k) for k in ("all-D", "all-C", "mixed", "nonconverged")}
    converged = total - counts["nonconverged"]
    n_cons = counts["all-D"] + counts["all-C"]
    return dict(
        total=total, **counts,
        consensus_share=n_cons / total if total else float("nan"),
        consensus_share_converged=n_cons / converged if converged else float("nan"),
        d_share=counts["all-D"] / n_cons if n_cons else float("nan"),
    )


def _scored(records):
    """Records usable for accuracy: unstable neutral state, defined prediction, consensus outcome."""
    return [r for r in records
            if r.kappa1 > 0 and r.prediction in ("D", "C") and r.outcome in CONSENSUS]


def _hit(r) -> bool:
    return r.outcome == "all-" + r.prediction


@dataclass
class AccuracySummary:
    by_class: Table
    by_sigma: Table
    n_unstable: int
    n_total: int

    @property
    def unstable_share(self) -> float:
        return self.n_unstable / self.n_total if self.n_total else float("nan")


def accuracy_summary(records, n_bins: int = DEFAULT_BINS) -> AccuracySummary:
    """Conditional accuracy of the influence prediction per predicted class and per sigma(q0) bin.

    Accuracy is scored on runs with kappa1 > 0 that ended in consensus;
    ``accuracy_incl_all`` also counts mixed and nonconverged runs as misses.
    """
    unstable = [r for r in records if r.kappa1 > 0 and r.prediction in ("D", "C")]
    scored = _scored(records)
    by_class = Table("accuracy", ["predicted", "count", "correct", "accuracy", "count_incl_all",
                                  "accuracy_incl_all"])
    by_sigma = Table("accuracy_by_sigma", ["bin", "sigma_lo", "sigma_hi", "count", "accuracy",
                                           "low_confidence"])
    if not scored:
        by_class.empty = by_sigma.empty = True
        return AccuracySummary(by_class, by_sigma, len(unstable), len(records))
    for cls in ("D", "C"):
        sub = [r for r in scored if r.prediction == cls]
        wide = [r for r in unstable if r.prediction == cls]
        hits = sum(_hit(r) for r in sub)
        by_class.rows.append([cls, len(sub), hits, hits / len(sub) if sub else float("nan"),
                              len(wide), hits / len(wide) if wide else float("nan")])
    sigma = np.array([r.sigma_q0 for r in scored])
    hit = np.array([_hit(r) for r in scored], dtype=float)
    bins = quantile_bins(sigma, min(n_bins, len(scored)))
    for b in range(bins.max() + 1):
        m = bins == b
        by_sigma.rows.append([b, float(sigma[m].min()), float(sigma[m].max()), int(m.sum()),
                              float(hit[m].mean()), int(m.sum() < MIN_BIN_COUNT)])
    return AccuracySummary(by_class, by_sigma, len(unstable), len(records))


def accuracy_below(records, sigma_max: float) -> tuple:
    """(count, accuracy) over scored records with sigma(q0) below ``sigma_max``."""
    sub = [r for r in _scored(records) if r.sigma_q0 < sigma_max]
    if not sub:
        return 0, float("nan")
    return len(sub), sum(_hit(r) for r in sub) / len(sub)


def max_rise(curve) -> float:
    """Largest increase of a later entry over any earlier one (0 for a nonincreasing curve)."""
    curve = np.asarray(curve, dtype=float)
    running_min = np.minimum.accumulate(curve)
    return float(np.max(curve - running_min))


def max_drop(curve) -> float:
    """Largest decrease of a later entry below any earlier one."""
    return max_rise(-np.asarray(curve, dtype=float))


STATISTICS = {"cr_centrality": "cr_q0_centrality", "cr_lambda": "cr_q0_lambda"}


def partial_dependence(records, statistic: str, n_bins: int = DEFAULT_BINS,
                       lambda_bands=None) -> Table:
    """Share of all-D outcomes per equal-count bin of a correlation statistic.

    With ``lambda_bands`` (edges on mu(lambda)) the binning runs separately in
    each band, and each band also gets the least-squares slope of the all-D
    indicator on the statistic.
    """
    attr = STATISTICS[statistic]
    table = Table("partial_dependence", ["statistic", "band", "mu_lambda_lo", "mu_lambda_hi", "bin",
                                         "stat_lo", "stat_hi", "stat_mean", "count", "freq_all_d",
                                         "low_confidence", "band_slope"])
    data = [(getattr(r, attr), r.mu_lambda, r.outcome == "all-D") for r in records
            if np.isfinite(getattr(r, attr))]
    if not data:
        table.empty = True
        return table
    stat, mu, is_d = (np.array(c, dtype=float) for c in zip(*data))
    edges = [(-np.inf, np.inf)] if lambda_bands is None else list(zip(lambda_bands[:-1], lambda_bands[1:]))
    for band, (lo, hi) in enumerate(edges):
        m = (mu >= lo) & (mu < hi) if band < len(edges) - 1 else (mu >= lo) & (mu <= hi)
        if m.sum() < 2:
            continue
        s, d = stat[m], is_d[m]
        slope = float(np.polyfit(s, d, 1)[0]) if np.ptp(s) > 0 else float("nan")
        bins = quantile_bins(s, min(n_bins, s.size))
        for b in range(bins.max() + 1):
            k = bins == b
            table.rows.append([statistic, band, float(lo), float(hi), b, float(s[k].min()),
                               float(s[k].max()), float(s[k].mean()), int(k.sum()),
                               float(d[k].mean()), int(k.sum() < MIN_BIN_COUNT), slope])
    return table


def band_slopes(table: Table) -> dict:
    """band index -> least-squares slope, read off a banded partial-dependence table."""
    return {row[1]: row[-1] for row in table.rows}


def band_counts(table: Table) -> dict:
    out = {}
    for row in table.rows:
        out[row[1]] = out.get(row[1], 0) + row[8]
    return out
