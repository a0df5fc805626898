"""Transforms, moment diagnostics, and the mean constructions behind every indicator.

All functions are pure and operate on plain sequences or numpy arrays.
Citation counts are shifted by 1 before the log so that zeros stay in the
sample; the offset is fixed, not configurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSampleError, EmptySampleError

# Rule-of-thumb band for "close enough to normal" skewness/kurtosis.
ACCEPTABLE_RANGE = (-3.0, 3.0)


@dataclass(frozen=True)
class MomentReport:
    """Shape diagnostics for one sample.

    Kurtosis is non-excess (a normal sample sits near 3).  The acceptable
    flags apply the same [-3, +3] band to both statistics.
    """

    n: int
    mean: float
    skewness: float
    kurtosis: float
    skewness_acceptable: bool
    kurtosis_acceptable: bool


def _acceptable(value: float) -> bool:
    lo, hi = ACCEPTABLE_RANGE
    return lo <= value <= hi


def log1p_transform(citations: int) -> float:
    """Return ln(1 + citations); 0 maps to 0."""
    if citations < 0:
        raise ValueError(f"citations must be non-negative, got {citations}")
    return math.log1p(citations)


def moments(values: Sequence[float]) -> MomentReport:
    """Skewness and kurtosis from biased (divide-by-n) central moments.

    skewness = m3 / m2^(3/2) and kurtosis = m4 / m2^2, where m_k is the
    k-th central sample moment.  Requires n >= 3 and a non-constant sample.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 3:
        raise DegenerateSampleError(f"need at least 3 values, got {n}")
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d**2))
    if m2 <= 0.0:
        raise DegenerateSampleError("sample is constant; moments undefined")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    skew = m3 / m2**1.5
    kurt = m4 / m2**2
    return MomentReport(
        n=n,
        mean=mean,
        skewness=skew,
        kurtosis=kurt,
        skewness_acceptable=_acceptable(skew),
        kurtosis_acceptable=_acceptable(kurt),
    )


def _check_mean_inputs(citations: np.ndarray, weights: np.ndarray) -> float:
    if citations.shape != weights.shape:
        raise ValueError(
            f"citations and weights differ in length: {citations.size} vs {weights.size}"
        )
    if np.any(citations < 0):
        raise ValueError("citations must be non-negative")
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    total = float(weights.sum())
    if total <= 0.0:
        raise EmptySampleError("total weight is zero")
    return total


def geometric_mean(
    citations: Sequence[float], weights: Sequence[float] | None = None
) -> float:
    """Weighted geometric mean with an offset of 1.

    Returns exp(sum(w * ln(1 + c)) / sum(w)) - 1.  With unit weights this
    is the plain offset geometric mean of the counts.
    """
    c = np.asarray(citations, dtype=float)
    w = np.ones_like(c) if weights is None else np.asarray(weights, dtype=float)
    total = _check_mean_inputs(c, w)
    return math.expm1(float(np.log1p(c) @ w) / total)


def arithmetic_mean(
    citations: Sequence[float], weights: Sequence[float] | None = None
) -> float:
    """Weighted arithmetic mean of the counts."""
    c = np.asarray(citations, dtype=float)
    w = np.ones_like(c) if weights is None else np.asarray(weights, dtype=float)
    total = _check_mean_inputs(c, w)
    return float(c @ w) / total
