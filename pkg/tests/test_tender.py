import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bidscreen.errors import (DuplicateTenderConflict, EmptyFile, MissingColumn, NonPositiveBid, TooFewBids)
from bidscreen.tender import (Bid, ContractType, Dataset, Label, Tender, filter_cartel_members,
                              filter_contract_type, filter_min_bids, ingest_csv, moments, parse_label,
                              write_csv)

bid_lists = st.lists(st.floats(1.0, 1e6, allow_nan=False), min_size=2, max_size=12)


def tender(tid, values, label=Label.COMPETITIVE, **kw):
    return Tender.from_values(tid, values, label, **kw)


def write(tmp_path, text, name="bids.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestBid:
    @pytest.mark.parametrize("v", [0.0, -5.0, math.nan, math.inf])
    def test_rejects_non_positive_or_non_finite(self, v):
        with pytest.raises(ValueError):
            Bid(v)

    def test_tender_needs_two_bids(self):
        with pytest.raises(TooFewBids):
            tender("t", [100.0])


class TestMoments:
    def test_four_bid_example(self):
        m = moments([100, 105, 110, 120])
        assert m.mean == pytest.approx(108.75)
        assert m.std == pytest.approx(8.5391256, rel=1e-7)
        assert list(m.sorted_bids[:2]) == [100, 105]
        assert m.losing_std == pytest.approx(7.6376262, rel=1e-7)

    def test_constant_bids(self):
        m = moments([5, 5, 5, 5])
        assert m.mean == 5 and m.std == 0.0

    def test_two_bids_have_no_losing_std(self):
        m = moments([2, 1])
        assert list(m.sorted_bids) == [1, 2]
        assert math.isnan(m.losing_std)

    def test_too_few(self):
        with pytest.raises(TooFewBids):
            moments([3.0])

    @given(bid_lists, st.randoms())
    @settings(max_examples=50, deadline=None)
    def test_permutation_invariance(self, bids, rnd):
        shuffled = list(bids)
        rnd.shuffle(shuffled)
        a, b = moments(bids), moments(shuffled)
        np.testing.assert_array_equal(a.sorted_bids, b.sorted_bids)
        assert a.mean == pytest.approx(b.mean, rel=1e-12)
        assert a.std == pytest.approx(b.std, rel=1e-12, abs=1e-12)

    @given(bid_lists, st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_scaling(self, bids, c):
        a, b = moments(bids), moments([c * x for x in bids])
        for f in ("mean", "std", "min", "max"):
            assert getattr(b, f) == pytest.approx(c * getattr(a, f), rel=1e-12, abs=1e-9)
        if len(bids) >= 3:
            assert b.losing_std == pytest.approx(c * a.losing_std, rel=1e-12, abs=1e-9)


class TestDataset:
    def test_unique_ids(self):
        with pytest.raises(ValueError):
            Dataset((tender("a", [1, 2]), tender("a", [3, 4])))

    def test_filter_min_bids(self):
        ds = Dataset((tender("a", [1, 2, 3]), tender("b", [1, 2, 3, 4]), tender("c", [1, 2, 3, 4, 5])))
        kept = filter_min_bids(ds, 4)
        assert [t.n for t in kept] == [4, 5]
        assert len(ds) == 3
        assert filter_min_bids(kept, 4).tenders == kept.tenders
        assert filter_min_bids(ds, 2).tenders == ds.tenders
        assert len(filter_min_bids(Dataset(()), 4)) == 0
        with pytest.raises(ValueError):
            filter_min_bids(ds, 1)

    def test_filter_contract_type_and_cartel_members(self):
        a = Tender("a", tuple(Bid(v, cartel_member=True) for v in (1, 2, 3, 4)), Label.COLLUSIVE,
                   ContractType.ROAD_ASPHALT)
        b = Tender("b", (Bid(1, cartel_member=True), Bid(2, cartel_member=False), Bid(3, cartel_member=False)),
                   Label.COLLUSIVE, ContractType.MIXED)
        c = tender("c", [1, 2, 3], contract_type=ContractType.ROAD_ASPHALT)
        ds = Dataset((a, b, c))
        assert [t.tender_id for t in filter_contract_type(ds, 1)] == ["a", "c"]
        assert [t.tender_id for t in filter_cartel_members(ds, 1)] == ["a", "c"]
        assert [t.tender_id for t in filter_cartel_members(ds, 0)] == ["a", "b", "c"]


class TestIngest:
    def test_single_tender(self, tmp_path):
        ds = ingest_csv(write(tmp_path, "tender_id,bid,label\nT1,100,1\nT1,105,1\nT1,110,1\n"))
        assert len(ds) == 1
        t = ds[0]
        assert t.n == 3 and t.label == Label.COLLUSIVE
        assert list(t.values) == [100, 105, 110]

    def test_two_labels(self, tmp_path):
        ds = ingest_csv(write(tmp_path, "tender_id,bid,label\nA,1,1\nA,2,1\nB,3,0\nB,4,0\n"))
        assert [t.label for t in ds] == [Label.COLLUSIVE, Label.COMPETITIVE]

    def test_negative_bid(self, tmp_path):
        with pytest.raises(NonPositiveBid) as e:
            ingest_csv(write(tmp_path, "tender_id,bid,label\nA,100,1\nA,-5,1\n"))
        assert e.value.row == 3

    def test_non_numeric_bid(self, tmp_path):
        with pytest.raises(NonPositiveBid):
            ingest_csv(write(tmp_path, "tender_id,bid\nA,100\nA,abc\n"))

    def test_missing_column(self, tmp_path):
        with pytest.raises(MissingColumn):
            ingest_csv(write(tmp_path, "id,bid\nA,1\n"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyFile):
            ingest_csv(write(tmp_path, ""))
        with pytest.raises(EmptyFile):
            ingest_csv(write(tmp_path, "tender_id,bid\n"))

    def test_conflicting_labels(self, tmp_path):
        with pytest.raises(DuplicateTenderConflict):
            ingest_csv(write(tmp_path, "tender_id,bid,label\nA,1,1\nA,2,0\n"))

    def test_single_bid_tender_rejected(self, tmp_path):
        with pytest.raises(TooFewBids):
            ingest_csv(write(tmp_path, "tender_id,bid\nA,1\nA,2\nB,3\n"))

    def test_missing_label_column_means_unlabeled(self, tmp_path):
        ds = ingest_csv(write(tmp_path, "tender_id,bid\nA,1\nA,2\n"))
        assert ds[0].label == Label.UNLABELED

    def test_column_mapping(self, tmp_path):
        ds = ingest_csv(write(tmp_path, "id,amount,cartel\nA,1,1\nA,2,1\n"),
                        {"tender": "id", "bid": "amount", "label": "cartel"})
        assert ds[0].label == Label.COLLUSIVE

    def test_comment_lines_skipped(self, tmp_path):
        ds = ingest_csv(write(tmp_path, "# produced by a run\ntender_id,bid\nA,1\nA,2\n"))
        assert ds[0].n == 2

    def test_round_trip(self, tmp_path):
        a = Tender("a", (Bid(100.5, "f1", True), Bid(101.25, "f2", False, simulated=True)), Label.COLLUSIVE,
                   ContractType.CIVIL_ENGINEERING, 3, 17)
        b = tender("b", [1 / 3, 2 / 3, 1.0])
        p = tmp_path / "out.csv"
        write_csv(Dataset((a, b)), p)
        back = ingest_csv(p)
        assert back[0] == a
        assert list(back[1].values) == [1 / 3, 2 / 3, 1.0]


@pytest.mark.parametrize("raw,label", [("1", Label.COLLUSIVE), ("true", Label.COLLUSIVE), ("2", Label.COLLUSIVE),
                                       ("0", Label.COMPETITIVE), ("", Label.UNLABELED), (None, Label.UNLABELED)])
def test_parse_label(raw, label):
    assert parse_label(raw) == label


def test_original_drops_simulated():
    t = Tender("a", (Bid(1), Bid(2), Bid(3, simulated=True)), Label.COLLUSIVE)
    assert t.original().n == 2
