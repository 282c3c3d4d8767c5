"""Fixed-threshold rule: a tender is conspicuous when CV (in percent) is low and RD is high."""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..errors import DegenerateSpec, UndefinedScreen
from ..screens import ScreenVector
from ..tender import Label

CV_THRESHOLD = 6.0
RD_THRESHOLD = 1.0


def benchmark_rule(sv: ScreenVector | Mapping[str, float], cv_threshold: float = CV_THRESHOLD,
                   rd_threshold: float = RD_THRESHOLD) -> Label:
    """Collusive iff ``100 * CV < cv_threshold`` and ``RD > rd_threshold``."""
    cv, rd = sv["CV"], sv["RD"]
    if cv is None or rd is None or math.isnan(cv) or math.isnan(rd):
        raise UndefinedScreen("benchmark rule needs both CV and RD")
    return Label.COLLUSIVE if (100.0 * cv < cv_threshold and rd > rd_threshold) else Label.COMPETITIVE


class BenchmarkRule:
    """The rule as a learner over feature rows; ``fit`` only locates the CV and RD columns."""

    def __init__(self, cv_threshold: float = CV_THRESHOLD, rd_threshold: float = RD_THRESHOLD,
                 seed: int | None = None):
        self.cv_threshold = cv_threshold
        self.rd_threshold = rd_threshold

    def fit(self, X, y=None, names=None) -> "BenchmarkRule":
        names = list(names) if names is not None else []
        if "CV" not in names or "RD" not in names:
            raise DegenerateSpec("benchmark rule needs CV and RD columns")
        self.cols_ = (names.index("CV"), names.index("RD"))
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        cv, rd = X[:, self.cols_[0]], X[:, self.cols_[1]]
        return ((100.0 * cv < self.cv_threshold) & (rd > self.rd_threshold)).astype(np.int64)
