"""Repeated train/test evaluation, simulation ladders and robustness drills.

Each repetition draws its own split from ``default_rng([seed, r])``, imputes
Undefined predictors with medians learned on the training rows only, fits a
fresh learner and scores the held-out rows. Reports average the per-repetition
correct classification rates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DataError, DegenerateSpec, EmptyAfterFilter, SingleClassDataset, TooSmallTestSplit
from .learners import make_learner
from .simulate import Ladder
from .subgroups import FeatureTable, MedianImputer, ModelSpec, feature_table, model_spec
from .tender import ContractType, Dataset, Label, filter_contract_type

# share of repetitions allowed to miss a class in the test split before warning
MISSING_CLASS_TOLERANCE = 0.10


@dataclass(frozen=True)
class RepetitionResult:
    correct_comp: int
    n_comp: int
    correct_coll: int
    n_coll: int
    train_ids: tuple = field(repr=False, default=())
    imputation_medians: np.ndarray | None = field(repr=False, default=None, compare=False)

    @property
    def ccr_all(self) -> float:
        return (self.correct_comp + self.correct_coll) / (self.n_comp + self.n_coll)

    @property
    def ccr_comp(self) -> float:
        return self.correct_comp / self.n_comp if self.n_comp else math.nan

    @property
    def ccr_coll(self) -> float:
        return self.correct_coll / self.n_coll if self.n_coll else math.nan

    def rates(self) -> tuple[float, float, float]:
        return self.ccr_all, self.ccr_comp, self.ccr_coll


@dataclass(frozen=True)
class EvalReport:
    ccr_all: float
    ccr_comp: float
    ccr_coll: float
    per_repetition: tuple[RepetitionResult, ...]
    importance: tuple[tuple[str, float], ...]
    config_echo: dict
    warnings: tuple[str, ...] = ()
    composition: dict = field(default_factory=dict)

    @property
    def n_repetitions(self) -> int:
        return len(self.per_repetition)

    @property
    def error_rate(self) -> float:
        return 1.0 - self.ccr_all

    def to_dict(self) -> dict:
        return {
            "ccr_all": self.ccr_all, "ccr_comp": self.ccr_comp, "ccr_coll": self.ccr_coll,
            "error_rate": self.error_rate, "n_repetitions": self.n_repetitions,
            "per_repetition": [list(r.rates()) for r in self.per_repetition],
            "importance": [[n, v] for n, v in self.importance],
            "composition": self.composition, "warnings": list(self.warnings),
            "config": self.config_echo,
        }


def composition(ds: Dataset) -> dict:
    """Class counts, collusive share and share of cartel-flagged bids in collusive tenders."""
    y = ds.labels
    n_coll = int(np.sum(y == Label.COLLUSIVE))
    n_comp = int(np.sum(y == Label.COMPETITIVE))
    flagged = total = 0
    for t in ds.collusive():
        c = t.cartel_member_count
        if c is not None:
            flagged += c
            total += t.n
    return {
        "tenders": len(ds), "collusive": n_coll, "competitive": n_comp,
        "collusive_share": n_coll / len(ds) if len(ds) else math.nan,
        "cartel_bid_share": flagged / total if total else math.nan,
    }


LearnerFactory = Callable[[int], object]


def _factory(learner, params: dict | None) -> tuple[LearnerFactory, str]:
    if callable(learner) and not isinstance(learner, str):
        return learner, getattr(learner, "__name__", "custom")
    kind = str(learner)
    params = dict(params or {})
    return (lambda s: make_learner(kind, seed=s, **params)), kind


def _split(y: np.ndarray, train_frac: float, rng: np.random.Generator, stratify: bool):
    n = y.size
    if not stratify:
        perm = rng.permutation(n)
        n_train = int(round(train_frac * n))
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])
    train, test = [], []
    for cls in (Label.COMPETITIVE, Label.COLLUSIVE):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        k = int(round(train_frac * idx.size))
        train.append(idx[:k])
        test.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def run_repetition(ft: FeatureTable, train: np.ndarray, test: np.ndarray, learner_seed: int,
                   factory: LearnerFactory):
    """Impute from ``train`` rows only, fit, and count correct test predictions."""
    imp = MedianImputer().fit(ft.X[train])
    Xtr, Xte = imp.transform(ft.X[train]), imp.transform(ft.X[test])
    model = factory(learner_seed)
    model.fit(Xtr, ft.y[train], names=ft.names)
    pred = np.asarray(model.predict(Xte))
    yte = ft.y[test]
    comp, coll = yte == Label.COMPETITIVE, yte == Label.COLLUSIVE
    res = RepetitionResult(
        int(np.sum(pred[comp] == Label.COMPETITIVE)), int(comp.sum()),
        int(np.sum(pred[coll] == Label.COLLUSIVE)), int(coll.sum()),
        tuple(np.asarray(ft.tender_ids, dtype=object)[train]), imp.medians_)
    return res, getattr(model, "importances_", None)


def evaluate(ds: Dataset, spec: str | ModelSpec = "M4", learner="forest", repetitions: int = 100,
             train_frac: float = 0.75, seed: int = 0, stratify: bool = False,
             learner_params: dict | None = None, features: FeatureTable | None = None,
             kurtosis: str = "standard") -> EvalReport:
    """Average correct classification rates over repeated random splits.

    ``learner`` is a registered name (``"forest"``, ``"tree"``, ``"lasso"``,
    ``"benchmark"``) or a callable mapping a seed to an unfitted learner.
    ``features`` may carry a precomputed raw table for ``ds`` (same row order).
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    if not 0 < train_frac < 1:
        raise ValueError("train_frac must lie strictly between 0 and 1")
    spec = model_spec(spec)
    y = ds.labels
    if np.any(y == Label.UNLABELED):
        raise DataError("evaluation needs labels on every tender")
    if np.unique(y).size < 2:
        raise SingleClassDataset("dataset holds a single class")
    ft = (features if features is not None else feature_table(ds, kurtosis=kurtosis)).select(spec)
    if len(ft) != len(ds):
        raise DataError("precomputed feature table does not match the dataset")
    factory, learner_name = _factory(learner, learner_params)

    reps, imps = [], []
    for r in range(repetitions):
        rng = np.random.default_rng([int(seed), r])
        train, test = _split(y, train_frac, rng, stratify)
        res, imp = run_repetition(ft, train, test, int(rng.integers(0, 2 ** 31 - 1)), factory)
        reps.append(res)
        if imp is not None:
            imps.append(np.asarray(imp, dtype=float))

    notes = []
    missing = sum(1 for r in reps if r.n_comp == 0 or r.n_coll == 0)
    if missing > MISSING_CLASS_TOLERANCE * repetitions:
        msg = f"test split lacked a class in {missing} of {repetitions} repetitions"
        warnings.warn(msg, TooSmallTestSplit, stacklevel=2)
        notes.append(f"TooSmallTestSplit: {msg}")

    rates = np.array([r.rates() for r in reps])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean_comp, mean_coll = np.nanmean(rates[:, 1]), np.nanmean(rates[:, 2])
    importance = ()
    if imps:
        avg = np.mean(imps, axis=0)
        order = np.argsort(-avg, kind="stable")
        importance = tuple((ft.names[j], float(avg[j])) for j in order)
    echo = {"spec": spec.id, "predictors": list(spec.predictor_names), "learner": learner_name,
            "learner_params": dict(learner_params or {}), "repetitions": repetitions,
            "train_frac": train_frac, "seed": seed, "stratify": stratify, "kurtosis": kurtosis,
            "dataset": ds.provenance}
    return EvalReport(float(rates[:, 0].mean()), float(mean_comp), float(mean_coll), tuple(reps),
                      importance, echo, tuple(notes), composition(ds))


# ---------------------------------------------------------------- ladders

def ladder_report(ladder: Ladder, spec: str | ModelSpec = "M4", learner="forest", seed: int = 0,
                  repetitions: int = 100, learner_params: dict | None = None,
                  kurtosis: str = "standard", **kw) -> list[EvalReport]:
    """One report per rung ``m = 0..len(ladder)-1`` on collusive rung ``m`` plus the competitive set."""
    comp_ft = feature_table(ladder.competitive, kurtosis=kurtosis)
    out = []
    for m in range(len(ladder)):
        coll_ft = feature_table(ladder.collusive[m], kurtosis=kurtosis)
        ft = FeatureTable(coll_ft.tender_ids + comp_ft.tender_ids, np.concatenate([coll_ft.y, comp_ft.y]),
                          np.vstack([coll_ft.X, comp_ft.X]), coll_ft.names, coll_ft.meta)
        ds = ladder.evaluation(m)
        rep = evaluate(ds, spec, learner, repetitions=repetitions, seed=seed, learner_params=learner_params,
                       features=ft, kurtosis=kurtosis, **kw)
        rep.config_echo["simulated_bids"] = m
        out.append(rep)
    return out


LADDER_HEADER_PREFIX = ("Comp.B", "Tenders")
RATE_ROWS = (("All", "ccr_all"), ("Comp.", "ccr_comp"), ("Coll.", "ccr_coll"))


def ladder_table(columns: dict[str, Sequence[EvalReport]]) -> tuple[tuple[str, ...], list[tuple]]:
    """Rows of (m, tender type, rate per column), three rows per rung."""
    names = list(columns)
    header = LADDER_HEADER_PREFIX + tuple(names)
    depth = {len(v) for v in columns.values()}
    if len(depth) != 1:
        raise ValueError("every column needs the same number of rungs")
    rows = []
    for m in range(depth.pop()):
        for label, attr in RATE_ROWS:
            rows.append((m, label) + tuple(getattr(columns[c][m], attr) for c in names))
    return header, rows


# ---------------------------------------------------------------- robustness

def default_drop_count(spec: ModelSpec) -> int:
    return 3 if spec.p <= 9 else 5


@dataclass(frozen=True)
class DropTopResult:
    baseline: EvalReport
    reduced: EvalReport
    dropped: tuple[str, ...]

    def difference_points(self) -> dict[str, float]:
        """Reduced minus baseline rates, in percentage points."""
        return {k: 100.0 * (getattr(self.reduced, k) - getattr(self.baseline, k))
                for k in ("ccr_all", "ccr_comp", "ccr_coll")}


def robustness_drop_top(ds: Dataset, spec: str | ModelSpec = "M4", learner="forest", k: int | None = None,
                        seed: int = 0, repetitions: int = 100, baseline: EvalReport | None = None,
                        **kw) -> DropTopResult:
    """Re-evaluate after removing the ``k`` most important predictors of the baseline run."""
    spec = model_spec(spec)
    k = default_drop_count(spec) if k is None else int(k)
    if k < 0:
        raise ValueError("k must be non-negative")
    if k >= spec.p:
        raise DegenerateSpec(f"dropping {k} of {spec.p} predictors leaves nothing to fit")
    ft = kw.pop("features", None)
    if ft is None:
        ft = feature_table(ds, kurtosis=kw.get("kurtosis", "standard"))
    if baseline is None:
        baseline = evaluate(ds, spec, learner, repetitions=repetitions, seed=seed, features=ft, **kw)
    if k and not baseline.importance:
        raise DegenerateSpec("baseline learner reports no importances")
    dropped = tuple(n for n, _ in baseline.importance[:k])
    if not dropped:
        return DropTopResult(baseline, baseline, ())
    reduced = evaluate(ds, spec.without(dropped), learner, repetitions=repetitions, seed=seed, features=ft, **kw)
    return DropTopResult(baseline, reduced, dropped)


def robustness_contract_filter(ds: Dataset, spec: str | ModelSpec = "M4", learner="forest",
                               contract_type: ContractType | int = ContractType.ROAD_ASPHALT,
                               seed: int = 0, repetitions: int = 100, **kw) -> EvalReport:
    """Evaluation restricted to one contract type; the report echoes the sample composition."""
    sub = filter_contract_type(ds, contract_type)
    if len(sub) == 0:
        raise EmptyAfterFilter(f"no tenders of contract type {ContractType(contract_type).name}")
    rep = evaluate(sub, spec, learner, repetitions=repetitions, seed=seed, **kw)
    rep.config_echo["contract_type"] = int(contract_type)
    return rep
