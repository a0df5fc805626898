"""Per-country indicators: weighted geometric and arithmetic mean ratios,
top-X% shares with fractional tie credit, and their confidence intervals.

Every indicator divides a country mean by the corresponding whole-slice
mean, so 1.0 means "at the world average".  Passing ``normalised=False``
skips that division and returns the raw country mean, which is what the
un-normalised precision comparisons use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats as spstats

from .corpus import CountrySet, SubjectYearSlice, share_weights
from .errors import (
    CIUnavailableError,
    NoArticlesError,
    SmallSampleWarning,
    ZeroDenominatorError,
)
from .intervals import CI_CORRECTED, CI_MODES, BootstrapInterval, Interval

# Method tags used in result records and CLI selection.
REG_GEO = "REG_GEO"
GEO = "GEO"
ARITH = "ARITH"
TOP_X = "TOP_X"
METHODS = (REG_GEO, GEO, ARITH, TOP_X)

# Below this weighted count the proportion interval is flagged as shaky.
PROPORTION_SMALL_N = 30.0


@dataclass(frozen=True)
class IndicatorResult:
    """One computed indicator for one country."""

    country: str
    method: str
    estimate: float
    n_c: float
    ci_low: float | None = None
    ci_high: float | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.n_c < 0:
            raise ValueError("weighted count cannot be negative")


@dataclass(frozen=True)
class BootstrapConfig:
    """Resampling settings; the seed fully determines the interval."""

    replicates: int = 999
    level: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must be in (0, 1), got {self.level}")


def _weights_and_count(
    sl: SubjectYearSlice, country: str, countries: CountrySet
) -> tuple[np.ndarray, float]:
    w = share_weights(sl, country, countries)
    n_c = float(w.sum())
    if n_c <= 0.0:
        raise NoArticlesError(f"{country} has no weighted articles in the slice")
    return w, n_c


def _world_geo_mean(sl: SubjectYearSlice) -> float:
    return math.expm1(float(np.log1p(sl.citations).mean()))


def geo_indicator(
    sl: SubjectYearSlice,
    country: str,
    countries: CountrySet,
    normalised: bool = True,
) -> IndicatorResult:
    """Weighted geometric mean of the country's citations over the world's."""
    w, n_c = _weights_and_count(sl, country, countries)
    mu_gc = math.expm1(float(np.log1p(sl.citations) @ w) / n_c)
    if normalised:
        mu_g = _world_geo_mean(sl)
        if mu_g <= 0.0:
            raise ZeroDenominatorError("overall geometric mean is zero")
        estimate = mu_gc / mu_g
    else:
        estimate = mu_gc
    return IndicatorResult(country=country, method=GEO, estimate=estimate, n_c=n_c)


def _weighted_log_stats(
    sl: SubjectYearSlice, country: str, countries: CountrySet
) -> tuple[float, float, float]:
    """Weighted mean and sd of ln(1 + citations), with n_c as frequency total.

    The variance uses frequency-weight semantics, sum(p * (x - m)^2) / (n_c - 1),
    so n_c plays the role of the effective sample size.
    """
    w, n_c = _weights_and_count(sl, country, countries)
    if n_c <= 1.0:
        raise CIUnavailableError(
            f"weighted count {n_c:.3g} is too small for a standard deviation"
        )
    x = np.log1p(sl.citations)
    m = float(x @ w) / n_c
    var = float(w @ (x - m) ** 2) / (n_c - 1.0)
    return m, math.sqrt(max(var, 0.0)), n_c


def geo_indicator_ci(
    sl: SubjectYearSlice,
    country: str,
    countries: CountrySet,
    level: float = 0.95,
    mode: str = CI_CORRECTED,
    normalised: bool = True,
) -> Interval:
    """Confidence interval for the geometric-mean indicator.

    Corrected mode (default) builds the interval on the log scale,
    (exp(m +- z * s / sqrt(n_c)) - 1) / mu_g, with z the normal critical
    value.  Paper-literal mode is the conventional form
    (mu_gc +- s / sqrt(n_c)) / mu_g, which has no critical-value multiplier
    and mixes the linear and log scales; it is kept for comparability with
    results computed that way.
    """
    if mode not in CI_MODES:
        raise ValueError(f"mode must be one of {CI_MODES}, got {mode!r}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    m, s, n_c = _weighted_log_stats(sl, country, countries)
    if normalised:
        mu_g = _world_geo_mean(sl)
        if mu_g <= 0.0:
            raise ZeroDenominatorError("overall geometric mean is zero")
    else:
        mu_g = 1.0
    half = s / math.sqrt(n_c)
    if mode == CI_CORRECTED:
        z = float(spstats.norm.ppf(0.5 + level / 2.0))
        return Interval(
            math.expm1(m - z * half) / mu_g,
            math.expm1(m + z * half) / mu_g,
        )
    mu_gc = math.expm1(m)
    return Interval((mu_gc - half) / mu_g, (mu_gc + half) / mu_g)


def arith_indicator(
    sl: SubjectYearSlice,
    country: str,
    countries: CountrySet,
    normalised: bool = True,
) -> IndicatorResult:
    """Fractionally weighted arithmetic mean over the world arithmetic mean."""
    w, n_c = _weights_and_count(sl, country, countries)
    mu_c = float(sl.citations @ w) / n_c
    if normalised:
        mu = float(sl.citations.mean())
        if mu <= 0.0:
            raise ZeroDenominatorError("overall arithmetic mean is zero")
        estimate = mu_c / mu
    else:
        estimate = mu_c
    return IndicatorResult(country=country, method=ARITH, estimate=estimate, n_c=n_c)


def top_credits(citations: np.ndarray, x_percent: float) -> np.ndarray:
    """Per-article credit toward the most-cited X% of the slice.

    Articles strictly above the citation threshold count 1; articles tied
    at the threshold share the remainder equally, so the credits always
    sum to exactly X% of the article count.
    """
    if not 0.0 < x_percent < 100.0:
        raise ValueError(f"X must be in (0, 100), got {x_percent}")
    c = np.asarray(citations, dtype=float)
    n = c.size
    target = x_percent * n / 100.0
    if abs(target - round(target)) < 1e-9:
        target = float(round(target))
    k = math.ceil(target)
    threshold = np.partition(c, n - k)[n - k]
    above = int(np.sum(c > threshold))
    tied = int(np.sum(c == threshold))
    tie_credit = (target - above) / tied
    credits = np.where(c > threshold, 1.0, 0.0)
    credits[c == threshold] = tie_credit
    return credits


def top_share(
    sl: SubjectYearSlice,
    country: str,
    countries: CountrySet,
    x_percent: float,
) -> IndicatorResult:
    """Share of the country's weighted articles inside the most-cited X%."""
    w, n_c = _weights_and_count(sl, country, countries)
    credits = top_credits(sl.citations, x_percent)
    estimate = float(np.clip((w @ credits) / n_c, 0.0, 1.0))
    return IndicatorResult(
        country=country,
        method=TOP_X,
        estimate=estimate,
        n_c=n_c,
        params={"x": x_percent},
    )


def top_share_ci(result: IndicatorResult, level: float = 0.95) -> Interval:
    """Wald interval t_c +- z * sqrt(t_c (1 - t_c) / n_c), truncated to [0, 1].

    Undefined at the boundaries; a weighted count below 30 triggers a
    SmallSampleWarning but is not rejected.  The underlying proportion
    formula assumes an infinite population of whole articles, so
    fractional authorship makes it an approximation in any case.
    """
    if result.method != TOP_X:
        raise ValueError(f"expected a {TOP_X} result, got {result.method}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    t_c = result.estimate
    if not 0.0 < t_c < 1.0:
        raise CIUnavailableError(
            f"proportion {t_c} is at a boundary; interval undefined"
        )
    if result.n_c < PROPORTION_SMALL_N:
        warnings.warn(
            f"weighted count {result.n_c:.3g} is below {PROPORTION_SMALL_N:g}; "
            "the proportion interval may be unreliable",
            SmallSampleWarning,
            stacklevel=2,
        )
    z = float(spstats.norm.ppf(0.5 + level / 2.0))
    half = z * math.sqrt(t_c * (1.0 - t_c) / result.n_c)
    return Interval(max(t_c - half, 0.0), min(t_c + half, 1.0))


# Chunk size for drawing bootstrap index blocks; fixed so that a given seed
# always yields the same replicate stream.
_BOOT_CHUNK = 128


def bootstrap_ci(
    sl: SubjectYearSlice,
    country: str,
    countries: CountrySet,
    statistic: str = GEO,
    config: BootstrapConfig | None = None,
    normalised: bool = True,
) -> BootstrapInterval:
    """Percentile bootstrap interval for the GEO or ARITH indicator.

    Whole articles (citation count plus share vector) are resampled with
    replacement to the original slice size; the statistic is recomputed per
    replicate and the empirical (1 - level)/2 and (1 + level)/2 quantiles
    are returned.  Replicates where the country draws zero weight, or where
    a normalising world mean degenerates to zero, are skipped and counted.
    Replicate indices come from the seed in a fixed block sequence before
    any statistic is evaluated, so the replicate-to-randomness mapping is
    independent of evaluation order and a given seed always yields the
    same interval.
    """
    if statistic not in (GEO, ARITH):
        raise ValueError(f"statistic must be {GEO} or {ARITH}, got {statistic!r}")
    if config is None:
        config = BootstrapConfig()
    w, _ = _weights_and_count(sl, country, countries)
    raw = sl.citations
    logs = np.log1p(raw)
    n = raw.size

    rng = np.random.default_rng(config.seed)
    values: list[np.ndarray] = []
    skipped = 0
    remaining = config.replicates
    while remaining > 0:
        block = min(remaining, _BOOT_CHUNK)
        remaining -= block
        idx = rng.integers(0, n, size=(block, n))
        wi = w[idx]
        totals = wi.sum(axis=1)
        keep = totals > 0.0
        if statistic == GEO:
            with np.errstate(invalid="ignore", divide="ignore"):
                stat = np.expm1((wi * logs[idx]).sum(axis=1) / totals)
            if normalised:
                denom = np.expm1(logs[idx].mean(axis=1))
                keep &= denom > 0.0
                with np.errstate(invalid="ignore", divide="ignore"):
                    stat = stat / denom
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                stat = (wi * raw[idx]).sum(axis=1) / totals
            if normalised:
                denom = raw[idx].mean(axis=1)
                keep &= denom > 0.0
                with np.errstate(invalid="ignore", divide="ignore"):
                    stat = stat / denom
        skipped += int(block - keep.sum())
        values.append(stat[keep])

    replicate_values = np.concatenate(values)
    if replicate_values.size == 0:
        raise CIUnavailableError("all bootstrap replicates were skipped")
    lo, hi = np.quantile(
        replicate_values, [0.5 - config.level / 2.0, 0.5 + config.level / 2.0]
    )
    return BootstrapInterval(
        low=float(lo),
        high=float(hi),
        skipped=skipped,
        used=int(replicate_values.size),
    )
