"""Synthetic tender generators for demos and tests.

Competitive tenders draw each bid independently around a common cost with a
tender-specific log-scale dispersion. Collusive tenders follow a cover-bidding
pattern: the designated winner bids low and the cover bids sit in a tight
cluster a few percent above it. Default parameters put the mean CV near 3%
for collusive and near 10% for competitive tenders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tender import Bid, ContractType, Dataset, Label, Tender

# bid-count frequencies for n = 4..13
COLLUSIVE_SIZES = {4: 32, 5: 24, 6: 23, 7: 28, 8: 15, 9: 12, 10: 7, 11: 4, 12: 2, 13: 2}
COMPETITIVE_SIZES = {4: 8, 5: 2, 6: 8, 7: 3, 8: 5, 9: 4, 10: 2, 11: 1}


@dataclass(frozen=True)
class CompetitiveRegime:
    sigma_median: float = 0.085     # median within-tender log-scale dispersion
    sigma_spread: float = 0.45      # log-sd of that dispersion across tenders
    sizes: dict = None


@dataclass(frozen=True)
class CollusiveRegime:
    gap_low: float = 0.03           # winner's discount below the cover cluster
    gap_high: float = 0.07
    cover_sigma_low: float = 0.012
    cover_sigma_high: float = 0.035
    sizes: dict = None


def _sizes(rng, table, count):
    ns = np.array(sorted(table))
    w = np.array([table[k] for k in ns], dtype=float)
    return rng.choice(ns, size=count, p=w / w.sum())


def _cost(rng):
    return float(np.exp(rng.normal(np.log(800.0), 0.9)))


def competitive_tenders(count: int, seed=None, regime: CompetitiveRegime = CompetitiveRegime(),
                        prefix: str = "comp") -> Dataset:
    rng = np.random.default_rng(seed)
    sizes = _sizes(rng, regime.sizes or COMPETITIVE_SIZES, count)
    tenders = []
    for i, n in enumerate(sizes):
        sigma = regime.sigma_median * np.exp(rng.normal(0.0, regime.sigma_spread))
        bids = _cost(rng) * np.exp(rng.normal(0.0, sigma, size=n))
        tenders.append(Tender(
            f"{prefix}{i:04d}", tuple(Bid(float(v), cartel_member=False) for v in bids), Label.COMPETITIVE,
            ContractType(int(rng.integers(1, 4)))))
    return Dataset(tuple(tenders), f"synthetic competitive (seed={seed})")


def collusive_tenders(count: int, seed=None, regime: CollusiveRegime = CollusiveRegime(),
                      prefix: str = "coll") -> Dataset:
    rng = np.random.default_rng(seed)
    sizes = _sizes(rng, regime.sizes or COLLUSIVE_SIZES, count)
    tenders = []
    for i, n in enumerate(sizes):
        winner = _cost(rng)
        gap = rng.uniform(regime.gap_low, regime.gap_high)
        s = rng.uniform(regime.cover_sigma_low, regime.cover_sigma_high)
        covers = winner * (1 + gap) * np.exp(np.abs(rng.normal(0.0, s, size=n - 1)))
        bids = np.concatenate([[winner], covers])
        rng.shuffle(bids)
        tenders.append(Tender(
            f"{prefix}{i:04d}", tuple(Bid(float(v), cartel_member=True) for v in bids), Label.COLLUSIVE,
            ContractType(int(rng.integers(1, 4)))))
    return Dataset(tuple(tenders), f"synthetic collusive (seed={seed})")


def two_period_market(seed=None, n_collusive: int = 149, n_competitive: int = 150) -> tuple[Dataset, Dataset]:
    """A collusive period and a competitive post-cartel period."""
    ss = np.random.SeedSequence(seed)
    s1, s2 = ss.spawn(2)
    return collusive_tenders(n_collusive, s1), competitive_tenders(n_competitive, s2)


def separable(count: int = 500, seed=None) -> Dataset:
    """Half collusive, half competitive, with disjoint CV ranges (below 3% vs above 7%)."""
    ss = np.random.SeedSequence(seed)
    s1, s2 = ss.spawn(2)
    n_coll = count // 2
    coll = collusive_tenders(n_coll, s1, CollusiveRegime(0.01, 0.03, 0.002, 0.008))
    comp_regime = CompetitiveRegime(sigma_median=0.14, sigma_spread=0.15)
    comp = competitive_tenders(count - n_coll, s2, comp_regime)
    # resample any competitive tender that lands inside the collusive CV range
    rng = np.random.default_rng(s2)
    tenders = list(comp)
    for i, t in enumerate(tenders):
        while t.moments.std / t.moments.mean < 0.07:
            t = competitive_tenders(1, rng.integers(2 ** 32), comp_regime, prefix=f"comp{i:04d}r").tenders[0]
            t = Tender(tenders[i].tender_id, t.bids, t.label, t.contract_type)
        tenders[i] = t
    return coll.union(Dataset(tuple(tenders)), note=f"synthetic separable (seed={seed})")
