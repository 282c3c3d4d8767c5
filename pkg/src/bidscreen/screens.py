"""Per-tender screens: variance, asymmetry and uniformity statistics of a bid distribution.

Every ratio screen is returned as a raw ratio. Reports multiply CV and DIFFP
by 100 (see :data:`PERCENT_SCREENS`). A screen whose preconditions fail is
*Undefined*, which is represented by ``nan`` wherever floats are stored.

Two code paths exist: the scalar functions below, which take a
:class:`~bidscreen.tender.TenderMoments` and raise on degenerate input, and
:func:`batch_screens`, which evaluates all screens for many equally sized bid
vectors at once and fills ``nan`` instead of raising. Subgroup summaries use
the batched path.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import TooFewBids, ZeroDenominator, ZeroDispersion
from .tender import Tender, TenderMoments, moments

RATIO_SCREENS = ("CV", "KURTO", "SKEW", "SPD", "DIFFP", "RD", "RDNOR", "RDALT", "KS")
VALUE_SCREENS = ("MEANBIDS", "STDBIDS", "D", "NBRBIDS")
PERCENT_SCREENS = frozenset({"CV", "DIFFP"})

KURTOSIS_MODES = ("standard", "paper")


def _need(m: TenderMoments, k: int, what: str) -> None:
    if m.n < k:
        raise TooFewBids(f"{what} needs at least {k} bids, got {m.n}")


def _dispersed(m: TenderMoments, what: str) -> None:
    if m.max == m.min:
        raise ZeroDispersion(f"{what} undefined for constant bids")


def cv(m: TenderMoments) -> float:
    _need(m, 2, "CV")
    return m.std / m.mean


def _standardized_power_sum(m: TenderMoments, power: int) -> float:
    z = (m.sorted_bids - m.mean) / m.std
    return float(np.sum(z ** power))


def kurto(m: TenderMoments, mode: str = "standard") -> float:
    """Small-sample excess kurtosis.

    ``mode="paper"`` uses ``(n-1)**3`` in the bias term instead of the
    usual ``(n-1)**2``; it is kept only for comparison runs.
    """
    _need(m, 4, "KURTO")
    _dispersed(m, "KURTO")
    n = m.n
    s4 = _standardized_power_sum(m, 4)
    lead = n * (n + 1) / ((n - 1) * (n - 2) * (n - 3))
    if mode == "standard":
        corr = 3 * (n - 1) ** 2 / ((n - 2) * (n - 3))
    elif mode == "paper":
        corr = 3 * (n - 1) ** 3 / ((n - 2) * (n - 3))
    else:
        raise ValueError(f"unknown kurtosis mode {mode!r}")
    return lead * s4 - corr


def skew(m: TenderMoments) -> float:
    _need(m, 3, "SKEW")
    _dispersed(m, "SKEW")
    n = m.n
    return n / ((n - 1) * (n - 2)) * _standardized_power_sum(m, 3)


def spd(m: TenderMoments) -> float:
    _need(m, 2, "SPD")
    return (m.max - m.min) / m.min


def d_abs(m: TenderMoments) -> float:
    _need(m, 2, "D")
    return float(m.sorted_bids[1] - m.sorted_bids[0])


def diffp(m: TenderMoments) -> float:
    _need(m, 2, "DIFFP")
    b = m.sorted_bids
    return float((b[1] - b[0]) / b[0])


def rd(m: TenderMoments) -> float:
    _need(m, 3, "RD")
    if m.losing_std == 0:
        raise ZeroDenominator("RD: losing bids are all tied")
    return d_abs(m) / m.losing_std


def rdnor(m: TenderMoments) -> float:
    _need(m, 2, "RDNOR")
    mean_gap = float(np.sum(np.diff(m.sorted_bids))) / (m.n - 1)
    if m.max == m.min:
        raise ZeroDenominator("RDNOR: all bids tied")
    return d_abs(m) / mean_gap


def rdalt(m: TenderMoments) -> float:
    _need(m, 3, "RDALT")
    mean_gap = float(np.sum(np.diff(m.sorted_bids[1:]))) / (m.n - 2)
    if m.max == m.sorted_bids[1]:
        raise ZeroDenominator("RDALT: losing bids are all tied")
    return d_abs(m) / mean_gap


def ks_stat(m: TenderMoments) -> float:
    """Uniformity statistic on bids divided by their standard deviation."""
    _need(m, 2, "KS")
    _dispersed(m, "KS")
    n = m.n
    x = m.sorted_bids / m.std
    q = np.arange(1, n + 1) / (n + 1)
    return float(max(np.max(x - q), np.max(q - x)))


@dataclass(frozen=True)
class ScreenVector:
    cv: float
    kurto: float
    skew: float
    spd: float
    d: float
    rd: float
    rdnor: float
    rdalt: float
    diffp: float
    ks: float
    nbrbids: int
    meanbids: float
    stdbids: float

    def as_dict(self) -> dict[str, float]:
        """Screens keyed by their upper-case report names."""
        return {k.upper(): v for k, v in asdict(self).items()}

    def __getitem__(self, name: str) -> float:
        return getattr(self, name.lower())


def _guarded(fn, m, *args) -> float:
    try:
        return float(fn(m, *args))
    except (TooFewBids, ZeroDispersion, ZeroDenominator):
        return math.nan


def screen_vector(t: Tender | TenderMoments, kurtosis: str = "standard") -> ScreenVector:
    """All screens of one tender; failing screens come back as ``nan``."""
    m = t if isinstance(t, TenderMoments) else (t.moments if isinstance(t, Tender) else moments(t))
    return ScreenVector(
        cv=_guarded(cv, m),
        kurto=_guarded(kurto, m, kurtosis),
        skew=_guarded(skew, m),
        spd=_guarded(spd, m),
        d=_guarded(d_abs, m),
        rd=_guarded(rd, m),
        rdnor=_guarded(rdnor, m),
        rdalt=_guarded(rdalt, m),
        diffp=_guarded(diffp, m),
        ks=_guarded(ks_stat, m),
        nbrbids=m.n,
        meanbids=m.mean,
        stdbids=m.std,
    )


def batch_screens(rows: np.ndarray, kurtosis: str = "standard") -> dict[str, np.ndarray]:
    """Screens for each row of ``rows`` (shape ``(S, k)``, rows sorted ascending).

    Returns a dict of arrays of length ``S`` keyed by screen name, including
    ``D``. Undefined entries are ``nan``.
    """
    b = np.asarray(rows, dtype=float)
    S, k = b.shape
    if k < 2:
        raise TooFewBids("batch_screens needs rows of at least 2 bids")
    nan = np.nan
    lo, hi = b[:, 0], b[:, -1]
    flat = hi == lo
    mean = b.mean(axis=1)
    std = b.std(axis=1, ddof=1)
    std[flat] = 0.0
    gap = b[:, 1] - b[:, 0]

    out: dict[str, np.ndarray] = {}
    out["CV"] = std / mean
    out["SPD"] = (hi - lo) / lo
    out["DIFFP"] = gap / lo
    out["D"] = gap.copy()

    safe_std = np.where(flat, 1.0, std)
    z = (b - mean[:, None]) / safe_std[:, None]
    s3 = np.sum(z ** 3, axis=1)
    s4 = np.sum(z ** 4, axis=1)

    if k >= 3:
        out["SKEW"] = np.where(flat, nan, k / ((k - 1) * (k - 2)) * s3)
    else:
        out["SKEW"] = np.full(S, nan)
    if k >= 4:
        lead = k * (k + 1) / ((k - 1) * (k - 2) * (k - 3))
        if kurtosis == "standard":
            corr = 3 * (k - 1) ** 2 / ((k - 2) * (k - 3))
        elif kurtosis == "paper":
            corr = 3 * (k - 1) ** 3 / ((k - 2) * (k - 3))
        else:
            raise ValueError(f"unknown kurtosis mode {kurtosis!r}")
        out["KURTO"] = np.where(flat, nan, lead * s4 - corr)
    else:
        out["KURTO"] = np.full(S, nan)

    diffs = np.diff(b, axis=1)
    mean_gap = diffs.sum(axis=1) / (k - 1)
    out["RDNOR"] = np.where(flat, nan, gap / np.where(flat, 1.0, mean_gap))
    if k >= 3:
        losing_flat = hi == b[:, 1]
        losing_std = b[:, 1:].std(axis=1, ddof=1)
        out["RD"] = np.where(losing_flat, nan, gap / np.where(losing_flat, 1.0, losing_std))
        losing_gap = diffs[:, 1:].sum(axis=1) / (k - 2)
        out["RDALT"] = np.where(losing_flat, nan, gap / np.where(losing_flat, 1.0, losing_gap))
    else:
        out["RD"] = np.full(S, nan)
        out["RDALT"] = np.full(S, nan)

    x = b / safe_std[:, None]
    q = np.arange(1, k + 1) / (k + 1)
    ks = np.maximum(np.max(x - q, axis=1), np.max(q - x, axis=1))
    out["KS"] = np.where(flat, nan, ks)
    return out


def screen_table(tenders, kurtosis: str = "standard") -> dict[str, np.ndarray]:
    """Column-wise screens (ratio and value-based) over an iterable of tenders."""
    vectors = [screen_vector(t, kurtosis=kurtosis).as_dict() for t in tenders]
    names = RATIO_SCREENS + VALUE_SCREENS
    return {n: np.array([v[n] for v in vectors], dtype=float) for n in names}
