"""Subgroup screens and predictor matrices for model specifications M1 to M5.

Screens are recomputed on every subset of 3 and of 4 bids in a tender and
reduced to their minimum, maximum, mean and median. Those summaries
(``MIN3CV``, ``MEDIAN4SPD``, ...) are the predictors that stay informative
when competitive bids dilute a cartel's pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateSpec, TooFewBids
from .screens import PERCENT_SCREENS, RATIO_SCREENS, batch_screens, screen_vector
from .tender import Dataset, Tender

SUBGROUP_SIZES = (3, 4)
STATS = ("MIN", "MAX", "MEAN", "MEDIAN")
SCREENS_BY_SIZE = {
    3: tuple(s for s in RATIO_SCREENS if s != "KURTO"),
    4: RATIO_SCREENS,
}
# D summaries are produced for descriptive tables only; no model spec uses them
EXTRA_SUMMARY_SCREENS = ("D",)


def summary_name(stat: str, k: int, screen: str) -> str:
    return f"{stat}{k}{screen}"


def _summary_names(k: int) -> tuple[str, ...]:
    return tuple(summary_name(st, k, sc) for sc in SCREENS_BY_SIZE[k] for st in STATS)


M1_NAMES = RATIO_SCREENS
M2_NAMES = _summary_names(3)
M3_NAMES = _summary_names(4)
M4_NAMES = M1_NAMES + M2_NAMES + M3_NAMES
M5_NAMES = M4_NAMES + ("MEANBIDS", "STDBIDS", "D", "NBRBIDS")


@dataclass(frozen=True)
class ModelSpec:
    id: str
    predictor_names: tuple[str, ...]

    @property
    def p(self) -> int:
        return len(self.predictor_names)

    def without(self, names: Iterable[str]) -> "ModelSpec":
        drop = set(names)
        unknown = drop - set(self.predictor_names)
        if unknown:
            raise KeyError(f"not in {self.id}: {sorted(unknown)}")
        kept = tuple(n for n in self.predictor_names if n not in drop)
        if not kept:
            raise DegenerateSpec(f"dropping {len(drop)} predictors leaves {self.id} empty")
        suffix = f"-{len(drop)}" if drop else ""
        return ModelSpec(self.id + suffix, kept)


MODEL_SPECS = {
    "M1": ModelSpec("M1", M1_NAMES),
    "M2": ModelSpec("M2", M2_NAMES),
    "M3": ModelSpec("M3", M3_NAMES),
    "M4": ModelSpec("M4", M4_NAMES),
    "M5": ModelSpec("M5", M5_NAMES),
}


def model_spec(spec: str | ModelSpec) -> ModelSpec:
    if isinstance(spec, ModelSpec):
        return spec
    try:
        return MODEL_SPECS[spec.upper()]
    except KeyError:
        raise KeyError(f"unknown model spec {spec!r}; choose from {sorted(MODEL_SPECS)}") from None


def base_screen(name: str) -> str:
    """``'MEDIAN4CV' -> 'CV'``; plain screen names pass through."""
    for st in STATS:
        if name.startswith(st) and len(name) > len(st) + 1 and name[len(st)] in "34":
            return name[len(st) + 1:]
    return name


def report_scale(name: str) -> float:
    """Multiplier applied to a predictor when printing it (CV and DIFFP in percent)."""
    return 100.0 if base_screen(name) in PERCENT_SCREENS else 1.0


@lru_cache(maxsize=None)
def _index_table(n: int, k: int) -> np.ndarray:
    idx = np.array(list(combinations(range(n), k)), dtype=np.intp).reshape(-1, k)
    idx.setflags(write=False)
    return idx


def enumerate_subgroups(t: Tender | int, k: int) -> list[tuple[int, ...]]:
    """All ``C(n, k)`` bid-index subsets of size ``k`` in lexicographic order."""
    n = t if isinstance(t, int) else t.n
    if n < k:
        raise TooFewBids(f"cannot form subgroups of {k} from {n} bids")
    return list(combinations(range(n), k))


@dataclass(frozen=True)
class SubgroupSummary:
    values: dict[str, float]
    subgroup_count_3: int
    subgroup_count_4: int

    def __getitem__(self, name: str) -> float:
        return self.values[name]


def _reduce(vals: np.ndarray) -> tuple[float, float, float, float]:
    v = vals[~np.isnan(vals)]
    if v.size == 0:
        return (math.nan,) * 4
    return float(v.min()), float(v.max()), float(v.mean()), float(np.median(v))


def subgroup_summary(t: Tender, kurtosis: str = "standard") -> SubgroupSummary:
    """Min/max/mean/median of each screen over all subgroups of 3 and 4 bids.

    Subgroups whose screen is undefined are skipped; a summary with no
    defined subgroup is ``nan``.
    """
    if t.n < 4:
        raise TooFewBids(f"subgroup summaries need at least 4 bids, tender {t.tender_id!r} has {t.n}")
    srt = t.moments.sorted_bids
    values: dict[str, float] = {}
    counts = {}
    for k in SUBGROUP_SIZES:
        idx = _index_table(t.n, k)
        counts[k] = idx.shape[0]
        screens = batch_screens(srt[idx], kurtosis=kurtosis)
        for sc in SCREENS_BY_SIZE[k] + EXTRA_SUMMARY_SCREENS:
            for st, v in zip(STATS, _reduce(screens[sc])):
                values[summary_name(st, k, sc)] = v
    return SubgroupSummary(values, counts[3], counts[4])


def tender_predictors(t: Tender, kurtosis: str = "standard") -> dict[str, float]:
    """Every named predictor of M5 (plus the descriptive D summaries) for one tender."""
    sv = screen_vector(t, kurtosis=kurtosis).as_dict()
    out = {name: sv[name] for name in RATIO_SCREENS}
    out.update(subgroup_summary(t, kurtosis=kurtosis).values)
    out["MEANBIDS"] = sv["MEANBIDS"]
    out["STDBIDS"] = sv["STDBIDS"]
    out["D"] = sv["D"]
    out["NBRBIDS"] = float(sv["NBRBIDS"])
    return out


@dataclass(frozen=True)
class FeatureTable:
    """Predictor matrix aligned with ``names``; ``nan`` marks Undefined entries.

    ``y`` holds the integer label (1 collusive, 0 competitive, -1 unlabeled).
    """

    tender_ids: tuple[str, ...]
    y: np.ndarray
    X: np.ndarray
    names: tuple[str, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return self.X.shape[0]

    def select(self, names: Sequence[str] | "ModelSpec") -> "FeatureTable":
        if isinstance(names, ModelSpec):
            names = names.predictor_names
        pos = {n: i for i, n in enumerate(self.names)}
        try:
            cols = [pos[n] for n in names]
        except KeyError as e:
            raise KeyError(f"predictor {e.args[0]!r} not in feature table") from None
        return FeatureTable(self.tender_ids, self.y, self.X[:, cols], tuple(names), self.meta)

    def rows(self, idx) -> "FeatureTable":
        idx = np.asarray(idx)
        ids = tuple(np.asarray(self.tender_ids, dtype=object)[idx])
        return FeatureTable(ids, self.y[idx], self.X[idx], self.names, self.meta)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]


ALL_PREDICTORS = M5_NAMES + tuple(
    summary_name(st, k, sc) for k in SUBGROUP_SIZES for sc in EXTRA_SUMMARY_SCREENS for st in STATS)


def feature_table(ds: Dataset, kurtosis: str = "standard") -> FeatureTable:
    """Raw (unimputed) table holding every predictor of M5 plus the D summaries."""
    rows = []
    for t in ds:
        preds = tender_predictors(t, kurtosis=kurtosis)
        rows.append([preds[n] for n in ALL_PREDICTORS])
    X = np.array(rows, dtype=float).reshape(len(ds), len(ALL_PREDICTORS))
    return FeatureTable(tuple(t.tender_id for t in ds), ds.labels, X, ALL_PREDICTORS,
                        {"kurtosis": kurtosis})


class MedianImputer:
    """Replaces ``nan`` with per-column medians learned from a training matrix.

    A column with no defined training value is filled with 0.
    """

    def fit(self, X: np.ndarray) -> "MedianImputer":
        X = np.asarray(X, dtype=float)
        med = np.zeros(X.shape[1])
        for j in range(X.shape[1]):
            col = X[:, j]
            col = col[~np.isnan(col)]
            if col.size:
                med[j] = np.median(col)
        self.medians_ = med
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        if X.shape[1] != self.medians_.size:
            raise ValueError(f"expected {self.medians_.size} columns, got {X.shape[1]}")
        rr, cc = np.nonzero(np.isnan(X))
        X[rr, cc] = self.medians_[cc]
        return X

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)


def build_features(ds: Dataset, spec: str | ModelSpec, impute: bool = True,
                   kurtosis: str = "standard") -> FeatureTable:
    """Predictor table for ``spec``.

    With ``impute=True`` Undefined entries are replaced by the column median
    over ``ds`` itself; the evaluation harness instead imputes from each
    training split.
    """
    spec = model_spec(spec)
    small = [t.tender_id for t in ds if t.n < 4]
    if small:
        raise TooFewBids(f"{len(small)} tender(s) have fewer than 4 bids, e.g. {small[0]!r}")
    ft = feature_table(ds, kurtosis=kurtosis).select(spec)
    if impute:
        ft = FeatureTable(ft.tender_ids, ft.y, MedianImputer().fit_transform(ft.X), ft.names, ft.meta)
    return ft
