"""Shared interval container and confidence-interval mode names."""

from __future__ import annotations

from typing import NamedTuple

# Interval computation modes: the estimator's conventional published form
# ("paper-literal") or the calibrated variant ("corrected").
CI_PAPER = "paper-literal"
CI_CORRECTED = "corrected"
CI_MODES = (CI_PAPER, CI_CORRECTED)


class Interval(NamedTuple):
    low: float
    high: float

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


class BootstrapInterval(NamedTuple):
    """Percentile bootstrap interval plus replicate bookkeeping."""

    low: float
    high: float
    skipped: int
    used: int

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high
