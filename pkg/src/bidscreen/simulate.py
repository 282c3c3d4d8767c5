"""Contaminate collusive tenders with simulated competitive bids.

A simulated bid is ``mean_t * (1 + delta)`` where ``mean_t`` is the mean of
the collusive tender's original bids and ``delta`` is a normalized deviation
``(b - mean) / mean`` drawn with replacement from the bids of competitive
tenders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCompetitiveSet, EmptyPool
from .tender import Bid, Dataset, Label, Tender

MAX_SIMULATED_BIDS = 5


@dataclass(frozen=True)
class DeviationPool:
    deviations: np.ndarray
    source_count: int

    def __len__(self) -> int:
        return self.deviations.size


def build_pool(competitive: Dataset) -> DeviationPool:
    devs = []
    for t in competitive:
        if t.label == Label.COLLUSIVE:
            continue
        v = t.original().values
        mu = v.mean()
        devs.append((v - mu) / mu)
    if not devs:
        raise EmptyCompetitiveSet("no competitive tenders to draw deviations from")
    arr = np.concatenate(devs)
    arr.setflags(write=False)
    return DeviationPool(arr, len(devs))


def _draws(collusive: Dataset, pool: DeviationPool, m: int, seed) -> np.ndarray:
    """Deviation indices, one row per tender in dataset order, ``m`` per row."""
    if len(pool) == 0:
        raise EmptyPool("deviation pool is empty")
    rng = np.random.default_rng(seed)
    return rng.integers(0, len(pool), size=(len(collusive), m))


def _inject_rows(collusive: Dataset, pool: DeviationPool, idx: np.ndarray, note: str) -> Dataset:
    tenders = []
    for t, row in zip(collusive, idx):
        base = float(t.original().values.mean())
        extra = [Bid(float(base * (1.0 + pool.deviations[i])), cartel_member=False, simulated=True)
                 for i in row]
        tenders.append(t.with_bids(extra))
    return Dataset(tuple(tenders), f"{collusive.provenance}; {note}".lstrip("; "),
                   collusive.currency_scale_note)


def inject(collusive: Dataset, pool: DeviationPool, m: int, seed=None) -> Dataset:
    """Add ``m`` simulated competitive bids to every tender of ``collusive``.

    Draws are made tender by tender in dataset order, ``m`` per tender, from
    one generator seeded with ``seed``. All ``m`` bids of a tender use the
    mean of its original bids as base. Input datasets are not modified.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    return _inject_rows(collusive, pool, _draws(collusive, pool, m, seed), f"+{m} simulated bids")


def simulated_only(ds: Dataset) -> Dataset:
    """Each tender reduced to its simulated bids (tenders with fewer than 2 are dropped)."""
    out = []
    for t in ds:
        sim = tuple(b for b in t.bids if b.simulated)
        if len(sim) >= 2:
            out.append(Tender(t.tender_id, sim, t.label, t.contract_type, t.anon_year, t.anon_date))
    return Dataset(tuple(out), f"{ds.provenance}; simulated bids only")


@dataclass(frozen=True)
class Ladder:
    """Collusive tenders with 0..max simulated bids, plus the untouched competitive set.

    ``collusive[m]`` holds the collusive tenders carrying ``m`` simulated bids;
    ``ladder[m]`` is the evaluation dataset (those tenders plus the
    competitive ones). Rungs are nested: rung ``m`` adds one bid to each
    tender of rung ``m - 1``.
    """

    collusive: tuple[Dataset, ...]
    competitive: Dataset
    pool: DeviationPool
    seed: object = None

    def __len__(self) -> int:
        return len(self.collusive)

    def __getitem__(self, m: int) -> Dataset:
        return self.evaluation(m)

    def evaluation(self, m: int) -> Dataset:
        return self.collusive[m].union(self.competitive, note=f"ladder rung m={m}")


def build_ladder(collusive: Dataset, competitive: Dataset, seed=None,
                 max_bids: int = MAX_SIMULATED_BIDS) -> Ladder:
    """Datasets with ``m = 0..max_bids`` simulated bids per collusive tender.

    The top rung equals ``inject(collusive, build_pool(competitive), max_bids, seed)``;
    lower rungs keep the first ``m`` of the same draws.
    """
    if len(collusive) == 0:
        raise ValueError("collusive dataset is empty")
    pool = build_pool(competitive)
    idx = _draws(collusive, pool, max_bids, seed)
    rungs = [collusive]
    for m in range(1, max_bids + 1):
        rungs.append(_inject_rows(collusive, pool, idx[:, :m], f"+{m} simulated bids"))
    return Ladder(tuple(rungs), competitive, pool, seed)
