import numpy as np
import pytest

from bidscreen.errors import EmptyCompetitiveSet, EmptyPool
from bidscreen.simulate import DeviationPool, build_ladder, build_pool, inject, simulated_only
from bidscreen.synthetic import two_period_market
from bidscreen.tender import Dataset, Label, Tender


def comp(values, tid="c"):
    return Tender.from_values(tid, values, Label.COMPETITIVE)


def coll(values, tid="k"):
    return Tender.from_values(tid, values, Label.COLLUSIVE)


def test_pool_examples():
    np.testing.assert_allclose(sorted(build_pool(Dataset((comp([90, 110]),))).deviations), [-0.1, 0.1])
    np.testing.assert_array_equal(build_pool(Dataset((comp([100, 100]),))).deviations, [0, 0])
    pool = build_pool(Dataset((comp([1, 2, 3], "a"), comp([4, 5], "b"))))
    assert len(pool) == 5 and pool.source_count == 2


def test_pool_ignores_collusive_and_simulated():
    with pytest.raises(EmptyCompetitiveSet):
        build_pool(Dataset((coll([1, 2]),)))


def test_inject_arithmetic():
    ds = Dataset((coll([400, 500, 600]),))
    out = inject(ds, DeviationPool(np.array([0.1]), 1), m=2, seed=0)
    t = out[0]
    assert t.n == 5
    sims = [b.value for b in t.bids if b.simulated]
    assert sims == pytest.approx([550.0, 550.0])
    assert all(b.cartel_member is False for b in t.bids if b.simulated)
    zero = inject(ds, DeviationPool(np.array([0.0]), 1), m=1, seed=0)
    assert [b.value for b in zero[0].bids if b.simulated] == [500.0]


def test_inject_counts_and_immutability():
    ds = Dataset((coll([1, 2, 3, 4, 5, 6]),))
    before = ds[0]
    out = inject(ds, build_pool(Dataset((comp([90, 95, 110]),))), m=5, seed=1)
    assert out[0].n == 11
    assert ds[0] is before and ds[0].n == 6


def test_inject_errors():
    ds = Dataset((coll([1, 2]),))
    with pytest.raises(EmptyPool):
        inject(ds, DeviationPool(np.array([]), 0), 1, 0)
    with pytest.raises(ValueError):
        inject(ds, DeviationPool(np.array([0.1]), 1), 0, 0)


def test_injected_deviations_belong_to_pool():
    c, k = two_period_market(3, 20, 20)
    pool = build_pool(k)
    out = inject(c, pool, 5, seed=9)
    for t in out:
        base = t.original().values.mean()
        for b in t.bids:
            if b.simulated:
                dev = (b.value - base) / base
                assert np.min(np.abs(pool.deviations - dev)) < 1e-12


def test_ladder():
    c, k = two_period_market(4, 15, 15)
    lad = build_ladder(c, k, seed=2)
    assert len(lad) == 6
    assert lad.collusive[0] is c
    for m in range(6):
        assert all(t.n == o.n + m for t, o in zip(lad.collusive[m], c))
        assert len(lad[m]) == 30
    # nested rungs: rung m keeps the first m simulated bids of the top rung
    top = [[b.value for b in t.bids if b.simulated] for t in lad.collusive[5]]
    for m in range(1, 6):
        got = [[b.value for b in t.bids if b.simulated] for t in lad.collusive[m]]
        assert got == [v[:m] for v in top]
    again = build_ladder(c, k, seed=2)
    assert all(a.tenders == b.tenders for a, b in zip(lad.collusive, again.collusive))
    direct = inject(c, build_pool(k), 5, seed=2)
    assert direct.tenders == lad.collusive[5].tenders


def test_simulated_only():
    c, k = two_period_market(5, 5, 5)
    out = simulated_only(inject(c, build_pool(k), 5, seed=0))
    assert all(t.n == 5 and all(b.simulated for b in t.bids) for t in out)
