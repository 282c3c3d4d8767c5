"""Two-sample rank and distribution tests used to validate simulated bids."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import kolmogorov, ndtr
from scipy.stats import rankdata

from .errors import EmptySample
from .screens import RATIO_SCREENS


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n1: int
    n2: int
    raw: float = math.nan   # U for Mann-Whitney, D for Kolmogorov-Smirnov

    __test__ = False  # not a pytest class


def _clean(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).ravel()
    return a[~np.isnan(a)]


def mann_whitney(a, b) -> TestResult:
    """Two-sided Mann-Whitney (Wilcoxon rank-sum) test, normal approximation.

    Uses midranks for ties, the tie-corrected variance and a 0.5 continuity
    correction. ``statistic`` is the signed z; ``raw`` is U for sample ``a``.
    """
    a, b = _clean(a), _clean(b)
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise EmptySample("both samples need at least one value")
    ranks = rankdata(np.concatenate([a, b]))
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2)
    mu = n1 * n2 / 2
    n = n1 + n2
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts)) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12 * ((n + 1) - tie_term)
    if var <= 0:
        return TestResult(0.0, 1.0, n1, n2, u)
    num = max(abs(u - mu) - 0.5, 0.0)
    z = math.copysign(num / math.sqrt(var), u - mu) if num > 0 else 0.0
    p = min(1.0, 2.0 * float(ndtr(-abs(z))))
    return TestResult(z, p, n1, n2, u)


def ecdf_distance(a, b) -> float:
    """``sup |F_a - F_b|`` over the pooled sample."""
    a, b = np.sort(_clean(a)), np.sort(_clean(b))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a, b) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value.

    ``statistic`` is ``D * sqrt(n1 n2 / (n1 + n2))``; ``raw`` is ``D``.
    """
    a, b = _clean(a), _clean(b)
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise EmptySample("both samples need at least one value")
    d = ecdf_distance(a, b)
    ksa = d * math.sqrt(n1 * n2 / (n1 + n2))
    return TestResult(ksa, float(min(1.0, max(0.0, kolmogorov(ksa)))), n1, n2, d)


@dataclass(frozen=True)
class SuiteRow:
    screen: str
    mann_whitney: TestResult
    ks: TestResult


def screen_distribution_suite(sim: Mapping[str, Sequence[float]], real: Mapping[str, Sequence[float]],
                              screens: Sequence[str] = RATIO_SCREENS) -> list[SuiteRow]:
    """Mann-Whitney and KS result per screen (undefined values dropped)."""
    missing = [s for s in screens if s not in sim or s not in real]
    if missing:
        raise KeyError(f"screen tables lack {missing}")
    return [SuiteRow(s, mann_whitney(sim[s], real[s]), ks_two_sample(sim[s], real[s])) for s in screens]


SUITE_HEADER = ("Screens", "z-statistic", "p-value MW", "KSa", "p-value KS")


def suite_table(rows: Sequence[SuiteRow]) -> list[tuple]:
    return [(r.screen, r.mann_whitney.statistic, r.mann_whitney.p_value, r.ks.statistic, r.ks.p_value)
            for r in rows]
