"""Descriptive statistics of predictors, one column of summaries per predictor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .subgroups import FeatureTable, report_scale

DESCRIBE_ROWS = ("Mean", "Std", "Min", "Lower Q.", "Median", "Upper Q.", "Max", "N")


@dataclass(frozen=True)
class Description:
    name: str
    mean: float
    std: float
    min: float
    lower_q: float
    median: float
    upper_q: float
    max: float
    n: int

    def row(self) -> tuple:
        return (self.mean, self.std, self.min, self.lower_q, self.median, self.upper_q, self.max, self.n)


def describe_values(name: str, values, scale: float | None = None) -> Description:
    """Summaries over the defined values, in report units (CV and DIFFP as percent)."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)] * (report_scale(name) if scale is None else scale)
    if v.size == 0:
        nan = float("nan")
        return Description(name, nan, nan, nan, nan, nan, nan, nan, 0)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    std = float(v.std(ddof=1)) if v.size > 1 else float("nan")
    return Description(name, float(v.mean()), std, float(v.min()), float(q1), float(med), float(q3),
                       float(v.max()), int(v.size))


def describe_table(ft: FeatureTable, names=None) -> list[Description]:
    names = ft.names if names is None else names
    return [describe_values(n, ft.column(n)) for n in names]
