"""Bids, tenders and datasets, plus CSV ingestion and dataset filters."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from .errors import (
    DuplicateTenderConflict,
    EmptyFile,
    MissingColumn,
    NonPositiveBid,
    TooFewBids,
)


class Label(enum.IntEnum):
    COMPETITIVE = 0
    COLLUSIVE = 1
    UNLABELED = -1


class ContractType(enum.IntEnum):
    UNKNOWN = 0
    ROAD_ASPHALT = 1
    MIXED = 2
    CIVIL_ENGINEERING = 3


@dataclass(frozen=True)
class Bid:
    value: float
    bidder_id: str | None = None
    cartel_member: bool | None = None
    simulated: bool = False

    def __post_init__(self):
        if not (isinstance(self.value, (int, float)) and math.isfinite(self.value) and self.value > 0):
            raise NonPositiveBid(None, self.value)


@dataclass(frozen=True)
class TenderMoments:
    """Order statistics and moments shared by every screen.

    ``losing_std`` is NaN when the tender has fewer than two losing bids.
    """

    n: int
    mean: float
    std: float
    sorted_bids: np.ndarray
    losing_std: float
    min: float
    max: float


def moments(tender: "Tender | Iterable[float]") -> TenderMoments:
    """Compute :class:`TenderMoments` with the n-1 divisor for both deviations."""
    values = tender.values if isinstance(tender, Tender) else np.asarray(list(tender), dtype=float)
    n = values.size
    if n < 2:
        raise TooFewBids(f"moments need at least 2 bids, got {n}")
    srt = np.sort(values, kind="stable")
    srt.setflags(write=False)
    # exact zeros for tied values; np.std can leave ~1e-17 residue
    std = float(np.std(values, ddof=1)) if srt[-1] > srt[0] else 0.0
    if n >= 3:
        losing_std = float(np.std(srt[1:], ddof=1)) if srt[-1] > srt[1] else 0.0
    else:
        losing_std = math.nan
    return TenderMoments(
        n=n,
        mean=float(np.mean(values)),
        std=std,
        sorted_bids=srt,
        losing_std=losing_std,
        min=float(srt[0]),
        max=float(srt[-1]),
    )


@dataclass(frozen=True)
class Tender:
    tender_id: str
    bids: tuple[Bid, ...]
    label: Label = Label.UNLABELED
    contract_type: ContractType = ContractType.UNKNOWN
    anon_year: int | None = None
    anon_date: int | None = None

    def __post_init__(self):
        if not isinstance(self.bids, tuple):
            object.__setattr__(self, "bids", tuple(self.bids))
        if len(self.bids) < 2:
            raise TooFewBids(f"tender {self.tender_id!r} has {len(self.bids)} bid(s); at least 2 required")

    @classmethod
    def from_values(cls, tender_id, values, label=Label.UNLABELED, **kw) -> "Tender":
        return cls(str(tender_id), tuple(Bid(float(v)) for v in values), Label(label), **kw)

    @property
    def n(self) -> int:
        return len(self.bids)

    @cached_property
    def values(self) -> np.ndarray:
        arr = np.array([b.value for b in self.bids], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def moments(self) -> TenderMoments:
        return moments(self)

    @property
    def cartel_member_count(self) -> int | None:
        flags = [b.cartel_member for b in self.bids if b.cartel_member is not None]
        return sum(flags) if flags else None

    def with_bids(self, extra: Iterable[Bid]) -> "Tender":
        return replace(self, bids=self.bids + tuple(extra))

    def original(self) -> "Tender":
        """The tender with simulated bids removed."""
        return replace(self, bids=tuple(b for b in self.bids if not b.simulated))


@dataclass(frozen=True)
class Dataset:
    tenders: tuple[Tender, ...]
    provenance: str = ""
    currency_scale_note: str = ""

    def __post_init__(self):
        if not isinstance(self.tenders, tuple):
            object.__setattr__(self, "tenders", tuple(self.tenders))
        seen = set()
        for t in self.tenders:
            if t.tender_id in seen:
                raise DuplicateTenderConflict(f"tender id {t.tender_id!r} appears twice")
            seen.add(t.tender_id)

    def __len__(self) -> int:
        return len(self.tenders)

    def __iter__(self) -> Iterator[Tender]:
        return iter(self.tenders)

    def __getitem__(self, i) -> Tender:
        return self.tenders[i]

    @property
    def labels(self) -> np.ndarray:
        return np.array([int(t.label) for t in self.tenders], dtype=int)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([t.n for t in self.tenders], dtype=int)

    def select(self, keep: Callable[[Tender], bool], note: str | None = None) -> "Dataset":
        prov = self.provenance if note is None else f"{self.provenance}; {note}".lstrip("; ")
        return replace(self, tenders=tuple(t for t in self.tenders if keep(t)), provenance=prov)

    def union(self, other: "Dataset", note: str = "") -> "Dataset":
        return Dataset(self.tenders + other.tenders, note or f"{self.provenance} + {other.provenance}",
                       self.currency_scale_note)

    def collusive(self) -> "Dataset":
        return self.select(lambda t: t.label == Label.COLLUSIVE)

    def competitive(self) -> "Dataset":
        return self.select(lambda t: t.label == Label.COMPETITIVE)


def filter_min_bids(ds: Dataset, k: int = 4) -> Dataset:
    if k < 2:
        raise ValueError("k must be at least 2")
    return ds.select(lambda t: t.n >= k, note=f"n>={k}")


def filter_contract_type(ds: Dataset, contract_type: ContractType | int) -> Dataset:
    ct = ContractType(contract_type)
    return ds.select(lambda t: t.contract_type == ct, note=f"contract_type={ct.name}")


def filter_cartel_members(ds: Dataset, more_than: int) -> Dataset:
    """Keep competitive tenders and collusive tenders with more than ``more_than`` flagged cartel bids.

    Collusive tenders without any cartel flags are dropped.
    """

    def keep(t: Tender) -> bool:
        if t.label != Label.COLLUSIVE:
            return True
        c = t.cartel_member_count
        return c is not None and c > more_than

    return ds.select(keep, note=f"cartel_members>{more_than}")


# ---------------------------------------------------------------- ingestion

@dataclass
class ColumnMap:
    """Maps logical fields to CSV header names. Only ``tender`` and ``bid`` are required."""

    tender: str = "tender_id"
    bid: str = "bid"
    label: str = "label"
    contract_type: str = "contract_type"
    anon_year: str = "anon_year"
    anon_date: str = "anon_date"
    bidder: str = "bidder_id"
    cartel_member: str = "cartel_member"
    simulated: str = "simulated"
    required: tuple[str, ...] = field(default=("tender", "bid"), repr=False)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "ColumnMap":
        cm = cls()
        for key, col in mapping.items():
            if not hasattr(cm, key) or key == "required":
                raise KeyError(f"unknown column key {key!r}")
            setattr(cm, key, col)
        return cm


_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f"}


def parse_label(raw: str | None) -> Label:
    if raw is None:
        return Label.UNLABELED
    s = raw.strip().lower()
    if s == "":
        return Label.UNLABELED
    if s in _TRUE:
        return Label.COLLUSIVE
    if s in _FALSE:
        return Label.COMPETITIVE
    try:
        return Label.COLLUSIVE if float(s) != 0 else Label.COMPETITIVE
    except ValueError:
        raise ValueError(f"unrecognised label {raw!r}") from None


def _parse_flag(raw: str | None) -> bool | None:
    if raw is None or raw.strip() == "":
        return None
    s = raw.strip().lower()
    if s in _TRUE:
        return True
    if s in _FALSE:
        return False
    return float(s) != 0


def _parse_int(raw: str | None) -> int | None:
    if raw is None or raw.strip() == "":
        return None
    return int(float(raw))


def _parse_contract(raw: str | None) -> ContractType:
    v = _parse_int(raw)
    try:
        return ContractType(v) if v is not None else ContractType.UNKNOWN
    except ValueError:
        return ContractType.UNKNOWN


def ingest_csv(path: str | Path, schema: ColumnMap | Mapping[str, str] | None = None) -> Dataset:
    """Read a bid-level CSV (one row per bid) into a :class:`Dataset`.

    Rows are grouped by tender id in file order. A missing label column makes
    every tender unlabeled; the same tender id carrying two different labels
    raises :class:`DuplicateTenderConflict`.
    """
    if schema is None:
        schema = ColumnMap()
    elif not isinstance(schema, ColumnMap):
        schema = ColumnMap.from_mapping(schema)
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        # lines starting with '#' carry run metadata and are skipped
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        header = reader.fieldnames
        if not header:
            raise EmptyFile(f"{path}: no header row")
        header = [h.strip() for h in header]
        reader.fieldnames = header
        for key in schema.required:
            if getattr(schema, key) not in header:
                raise MissingColumn(f"{path}: required column {getattr(schema, key)!r} ({key}) not found")

        def col(key):
            name = getattr(schema, key)
            return name if name in header else None

        c_label, c_ct, c_year, c_date = col("label"), col("contract_type"), col("anon_year"), col("anon_date")
        c_bidder, c_cm, c_sim = col("bidder"), col("cartel_member"), col("simulated")

        groups: dict[str, dict] = {}
        for lineno, row in enumerate(reader, start=2):
            tid = (row.get(schema.tender) or "").strip()
            raw_bid = (row.get(schema.bid) or "").strip()
            try:
                value = float(raw_bid)
            except ValueError:
                raise NonPositiveBid(lineno, raw_bid) from None
            if not (math.isfinite(value) and value > 0):
                raise NonPositiveBid(lineno, raw_bid)
            label = parse_label(row.get(c_label)) if c_label else Label.UNLABELED
            g = groups.get(tid)
            if g is None:
                g = groups[tid] = {
                    "bids": [], "label": label,
                    "contract_type": _parse_contract(row.get(c_ct)) if c_ct else ContractType.UNKNOWN,
                    "anon_year": _parse_int(row.get(c_year)) if c_year else None,
                    "anon_date": _parse_int(row.get(c_date)) if c_date else None,
                }
            elif g["label"] != label:
                raise DuplicateTenderConflict(
                    f"{path}:{lineno}: tender {tid!r} labelled both {g['label'].name} and {label.name}")
            g["bids"].append(Bid(
                value,
                bidder_id=(row.get(c_bidder) or None) if c_bidder else None,
                cartel_member=_parse_flag(row.get(c_cm)) if c_cm else None,
                simulated=bool(_parse_flag(row.get(c_sim))) if c_sim else False,
            ))
    if not groups:
        raise EmptyFile(f"{path}: no data rows")
    tenders = []
    for tid, g in groups.items():
        if len(g["bids"]) < 2:
            raise TooFewBids(f"{path}: tender {tid!r} has a single bid")
        tenders.append(Tender(tid, tuple(g["bids"]), g["label"], g["contract_type"],
                              g["anon_year"], g["anon_date"]))
    return Dataset(tuple(tenders), provenance=str(path))


BID_COLUMNS = ("tender_id", "bid", "label", "contract_type", "anon_year", "anon_date",
               "bidder_id", "cartel_member", "simulated")


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write a dataset back out in the bid-level layout read by :func:`ingest_csv`."""

    def flag(v):
        return "" if v is None else str(int(v))

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BID_COLUMNS)
        for t in ds:
            label = "" if t.label == Label.UNLABELED else str(int(t.label))
            ct = "" if t.contract_type == ContractType.UNKNOWN else str(int(t.contract_type))
            for b in t.bids:
                w.writerow([t.tender_id, repr(float(b.value)), label, ct,
                            "" if t.anon_year is None else t.anon_year,
                            "" if t.anon_date is None else t.anon_date,
                            b.bidder_id or "", flag(b.cartel_member), int(b.simulated)])
