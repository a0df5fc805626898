"""Seeded synthetic corpora with analytically known ground truth.

Citation counts are drawn as floor(exp(N(log_mean, log_sd))) - 1, clamped
at 0, so ln(1 + count) is a discretised normal and the population value of
every mean and indicator is computable by direct enumeration over the
count distribution.  Collaborative articles split authorship 50/50 with a
partner country while keeping the originating country's citation
distribution.  The same seed always regenerates the same corpus, and each
trial of an experiment derives its seed as base seed + trial index, so
trials can run in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from statistics import median
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats as spstats

from .corpus import ArticleRecord, CountrySet, SubjectYearSlice
from .errors import CIUnavailableError, CitImpactError, ConfigError
from .indicators import (
    ARITH,
    GEO,
    REG_GEO,
    BootstrapConfig,
    bootstrap_ci,
    geo_indicator_ci,
)
from .intervals import CI_CORRECTED, CI_PAPER
from .regression import build_design, ols_fit, reg_indicator_ci

# Citation counts are capped so floor(exp(x)) stays far inside int64.
_MAX_LATENT = math.log(2.0**62)

# Absolute truncation error target for the enumerated expectations.
_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class CountryProfile:
    """Generator settings for one country.

    ``log_mean``/``log_sd`` parameterise the latent normal behind the
    discretised lognormal counts.  With probability ``collab_prob`` an
    article is shared 50/50 with a partner drawn from ``partners`` (pairs
    of code and probability; uniform over the other countries when None).
    """

    code: str
    articles: int
    log_mean: float
    log_sd: float
    collab_prob: float = 0.0
    partners: tuple[tuple[str, float], ...] | None = None

    def __post_init__(self):
        if self.articles < 1:
            raise ConfigError(f"{self.code}: articles must be >= 1")
        if not self.log_sd > 0.0:
            raise ConfigError(f"{self.code}: log_sd must be > 0")
        if not 0.0 <= self.collab_prob <= 1.0:
            raise ConfigError(f"{self.code}: collab_prob must be in [0, 1]")
        if self.partners is not None:
            partners = tuple((c, float(p)) for c, p in self.partners)
            total = sum(p for _, p in partners)
            if not partners or any(p < 0 for _, p in partners) or total <= 0:
                raise ConfigError(f"{self.code}: partner weights must be positive")
            object.__setattr__(
                self, "partners", tuple((c, p / total) for c, p in partners)
            )


@dataclass(frozen=True)
class SynthSpec:
    """Full corpus recipe: one slice per (subject, year) with shared profiles."""

    countries: tuple[CountryProfile, ...]
    subjects: tuple[str, ...] = ("Synthetic",)
    years: tuple[int, ...] = (2015,)
    seed: int = 0

    def __post_init__(self):
        if not self.countries:
            raise ConfigError("spec needs at least one country")
        codes = [p.code for p in self.countries]
        if len(set(codes)) != len(codes):
            raise ConfigError("country codes must be unique")
        if not self.subjects or len(set(self.subjects)) != len(self.subjects):
            raise ConfigError("subjects must be non-empty and unique")
        if not self.years or len(set(self.years)) != len(self.years):
            raise ConfigError("years must be non-empty and unique")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        code_set = set(codes)
        for profile in self.countries:
            if profile.collab_prob > 0.0 and len(codes) < 2:
                raise ConfigError(
                    f"{profile.code}: collaboration needs a second country"
                )
            if profile.partners is not None:
                for partner, _ in profile.partners:
                    if partner == profile.code or partner not in code_set:
                        raise ConfigError(
                            f"{profile.code}: bad partner {partner!r}"
                        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SynthSpec":
        try:
            countries = tuple(
                CountryProfile(
                    code=str(c["code"]).upper(),
                    articles=int(c["articles"]),
                    log_mean=float(c["log_mean"]),
                    log_sd=float(c["log_sd"]),
                    collab_prob=float(c.get("collab_prob", 0.0)),
                    partners=(
                        tuple((str(k).upper(), float(v)) for k, v in c["partners"].items())
                        if c.get("partners")
                        else None
                    ),
                )
                for c in data["countries"]
            )
        except KeyError as exc:
            raise ConfigError(f"country entry is missing field {exc.args[0]!r}") from None
        return cls(
            countries=countries,
            subjects=tuple(data.get("subjects", ("Synthetic",))),
            years=tuple(int(y) for y in data.get("years", (2015,))),
            seed=int(data.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        return {
            "countries": [
                {
                    "code": p.code,
                    "articles": p.articles,
                    "log_mean": p.log_mean,
                    "log_sd": p.log_sd,
                    "collab_prob": p.collab_prob,
                    "partners": dict(p.partners) if p.partners else None,
                }
                for p in self.countries
            ],
            "subjects": list(self.subjects),
            "years": list(self.years),
            "seed": self.seed,
        }


def expected_log1p_citation(log_mean: float, log_sd: float) -> float:
    """E[ln(1 + C)] for the discretised lognormal, by direct enumeration.

    Uses the tail-sum identity E[ln(1+C)] = sum_k (ln(k+1) - ln k) P(C >= k)
    with P(C >= k) = P(exp(X) >= k + 1), truncating once the remaining mass
    is provably below the tolerance.
    """
    total = 0.0
    start = 1
    chunk = 4096
    while True:
        ks = np.arange(start, start + chunk, dtype=float)
        sf = spstats.norm.sf((np.log(ks + 1.0) - log_mean) / log_sd)
        total += float(np.sum((np.log(ks + 1.0) - np.log(ks)) * sf))
        start += chunk
        # Remaining terms are bounded by sigma * E[(Z - z)+] at the cut.
        z = (math.log(start) - log_mean) / log_sd
        bound = log_sd * (spstats.norm.pdf(z) - z * spstats.norm.sf(z))
        if bound < _TAIL_TOL or start > 1 << 26:
            break
        chunk = min(chunk * 2, 1 << 22)
    return total


def expected_citation_mean(log_mean: float, log_sd: float) -> float:
    """E[C] for the discretised lognormal, enumeration plus analytic tail."""
    total = 0.0
    start = 1
    chunk = 4096
    while True:
        ks = np.arange(start, start + chunk, dtype=float)
        total += float(
            np.sum(spstats.norm.sf((np.log(ks + 1.0) - log_mean) / log_sd))
        )
        start += chunk
        cut = math.log(start)
        tail = math.exp(log_mean + log_sd**2 / 2.0) * spstats.norm.sf(
            (cut - log_mean - log_sd**2) / log_sd
        ) - start * spstats.norm.sf((cut - log_mean) / log_sd)
        if tail < 1e-9 * max(total, 1.0) or start > 1 << 26:
            return total + max(tail, 0.0)
        chunk = min(chunk * 2, 1 << 22)


@dataclass(frozen=True)
class CountryTruth:
    """Population values for one country under its spec.

    ``weighted_*`` values describe the authorship-weighted population the
    estimators target (own articles plus collaborative halves);
    ``own_*`` values describe the country's own citation distribution,
    which is what the regression's pure-country prediction estimates when
    there is no collaboration.
    """

    code: str
    own_log_mean: float
    own_geo_mean: float
    own_arith_mean: float
    latent_geo_mean: float
    weighted_log_mean: float
    weighted_geo_mean: float
    weighted_arith_mean: float
    geo_indicator: float  # nan when the world mean is zero
    arith_indicator: float

    def to_dict(self) -> dict:
        return {
            k: (None if isinstance(v, float) and math.isnan(v) else v)
            for k, v in self.__dict__.items()
        }


@dataclass(frozen=True)
class GroundTruth:
    """Everything needed to recompute true indicator values analytically."""

    spec: SynthSpec
    world_log_mean: float
    world_geo_mean: float
    world_arith_mean: float
    countries: dict[str, CountryTruth]

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "world_log_mean": self.world_log_mean,
            "world_geo_mean": self.world_geo_mean,
            "world_arith_mean": self.world_arith_mean,
            "countries": {c: t.to_dict() for c, t in sorted(self.countries.items())},
        }


def _partner_probability(profile: CountryProfile, partner: str, codes: Sequence[str]) -> float:
    if profile.partners is not None:
        return dict(profile.partners).get(partner, 0.0)
    others = [c for c in codes if c != profile.code]
    return 1.0 / len(others) if partner in others else 0.0


def ground_truth(spec: SynthSpec) -> GroundTruth:
    """Analytic population values for every country in the spec."""
    codes = [p.code for p in spec.countries]
    own_log = {p.code: expected_log1p_citation(p.log_mean, p.log_sd) for p in spec.countries}
    own_arith = {p.code: expected_citation_mean(p.log_mean, p.log_sd) for p in spec.countries}
    total_articles = sum(p.articles for p in spec.countries)
    world_log = (
        sum(p.articles * own_log[p.code] for p in spec.countries) / total_articles
    )
    world_arith = (
        sum(p.articles * own_arith[p.code] for p in spec.countries) / total_articles
    )

    truths: dict[str, CountryTruth] = {}
    for profile in spec.countries:
        # Expected own weight: 1 per solo article, 0.5 per collaborative one,
        # then add the halves flowing in from other countries' collaborations.
        mass = profile.articles * (1.0 - profile.collab_prob / 2.0)
        log_sum = mass * own_log[profile.code]
        arith_sum = mass * own_arith[profile.code]
        for other in spec.countries:
            if other.code == profile.code:
                continue
            inflow = (
                other.articles
                * other.collab_prob
                * _partner_probability(other, profile.code, codes)
                / 2.0
            )
            mass += inflow
            log_sum += inflow * own_log[other.code]
            arith_sum += inflow * own_arith[other.code]
        weighted_log = log_sum / mass
        weighted_geo = math.expm1(weighted_log)
        weighted_arith = arith_sum / mass
        world_geo = math.expm1(world_log)
        truths[profile.code] = CountryTruth(
            code=profile.code,
            own_log_mean=own_log[profile.code],
            own_geo_mean=math.expm1(own_log[profile.code]),
            own_arith_mean=own_arith[profile.code],
            latent_geo_mean=math.expm1(profile.log_mean),
            weighted_log_mean=weighted_log,
            weighted_geo_mean=weighted_geo,
            weighted_arith_mean=weighted_arith,
            geo_indicator=weighted_geo / world_geo if world_geo > 0 else math.nan,
            arith_indicator=(
                weighted_arith / world_arith if world_arith > 0 else math.nan
            ),
        )

    return GroundTruth(
        spec=spec,
        world_log_mean=world_log,
        world_geo_mean=math.expm1(world_log),
        world_arith_mean=world_arith,
        countries=truths,
    )


def _draw_citations(rng: np.random.Generator, profile: CountryProfile) -> np.ndarray:
    latent = rng.normal(profile.log_mean, profile.log_sd, profile.articles)
    counts = np.floor(np.exp(np.minimum(latent, _MAX_LATENT))) - 1.0
    return np.maximum(counts, 0.0).astype(np.int64)


def generate_corpus(spec: SynthSpec) -> tuple[list[SubjectYearSlice], GroundTruth]:
    """Generate one slice per (subject, year) plus the analytic ground truth."""
    codes = [p.code for p in spec.countries]
    slices = []
    for si, subject in enumerate(spec.subjects):
        for yi, year in enumerate(spec.years):
            rng = np.random.default_rng((spec.seed, si, yi))
            articles: list[ArticleRecord] = []
            for profile in spec.countries:
                citations = _draw_citations(rng, profile)
                collab = (
                    rng.random(profile.articles) < profile.collab_prob
                    if profile.collab_prob > 0.0
                    else np.zeros(profile.articles, dtype=bool)
                )
                n_collab = int(collab.sum())
                if n_collab:
                    if profile.partners is not None:
                        partner_codes = [c for c, _ in profile.partners]
                        probs = [p for _, p in profile.partners]
                    else:
                        partner_codes = [c for c in codes if c != profile.code]
                        probs = None
                    partners = iter(
                        rng.choice(partner_codes, size=n_collab, p=probs)
                    )
                else:
                    partners = iter(())
                for k in range(profile.articles):
                    if collab[k]:
                        affiliations = ((profile.code, 1), (str(next(partners)), 1))
                    else:
                        affiliations = ((profile.code, 1),)
                    articles.append(
                        ArticleRecord(
                            id=f"{profile.code}-{k:06d}",
                            subject=subject,
                            year=year,
                            citations=int(citations[k]),
                            affiliations=affiliations,
                        )
                    )
            slices.append(SubjectYearSlice(subject, year, tuple(articles)))
    return slices, ground_truth(spec)


@dataclass(frozen=True)
class CoverageReport:
    """Outcome of a Monte-Carlo calibration run.

    ``coverage`` is the fraction of computed intervals containing the true
    value of the interval's estimand: the country mean on the raw scale, or
    the country-over-world indicator when ``normalised`` was requested.
    """

    method: str
    level: float
    normalised: bool
    bootstrapped: bool
    trials: int
    events: int
    covered: int
    excluded: int
    mean_width: float
    median_width: float
    per_country: dict[str, float]

    @property
    def coverage(self) -> float:
        return self.covered / self.events if self.events else math.nan

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "level": self.level,
            "normalised": self.normalised,
            "bootstrapped": self.bootstrapped,
            "trials": self.trials,
            "events": self.events,
            "covered": self.covered,
            "coverage": self.coverage,
            "excluded": self.excluded,
            "mean_width": self.mean_width,
            "median_width": self.median_width,
            "per_country": dict(sorted(self.per_country.items())),
        }


def _true_value(
    truth: GroundTruth, country: str, method: str, normalised: bool
) -> float:
    ct = truth.countries[country]
    if method == ARITH:
        return ct.arith_indicator if normalised else ct.weighted_arith_mean
    if method == REG_GEO:
        # The pure-country prediction targets the country's own distribution;
        # exact when collaboration is off.
        return (
            ct.own_geo_mean / truth.world_geo_mean if normalised else ct.own_geo_mean
        )
    return ct.geo_indicator if normalised else ct.weighted_geo_mean


def coverage_experiment(
    spec: SynthSpec,
    trials: int,
    method: str = GEO,
    *,
    level: float = 0.95,
    ci_mode: str | None = None,
    bootstrap: BootstrapConfig | None = None,
    countries: CountrySet | None = None,
    normalised: bool = False,
) -> CoverageReport:
    """Estimate interval coverage and width over freshly generated corpora.

    Each trial regenerates the corpus with seed ``spec.seed + trial`` and
    computes, per focal country, the selected indicator interval:
    closed-form GEO/REG_GEO intervals, or percentile-bootstrap intervals
    when a bootstrap config is supplied (required for ARITH).  Trials where
    an interval is unavailable are excluded and counted.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if method not in (GEO, ARITH, REG_GEO):
        raise ValueError(f"coverage supports GEO, ARITH, REG_GEO; got {method!r}")
    if method == ARITH and bootstrap is None:
        raise ValueError("ARITH coverage needs a bootstrap config")
    if countries is None:
        countries = CountrySet(tuple(p.code for p in spec.countries))

    truth = ground_truth(spec)
    events = covered = excluded = 0
    widths: list[float] = []
    per_country_events: dict[str, int] = {c: 0 for c in countries.focal}
    per_country_covered: dict[str, int] = {c: 0 for c in countries.focal}

    for trial in range(trials):
        slices, _ = generate_corpus(replace(spec, seed=spec.seed + trial))
        boot = (
            replace(bootstrap, seed=bootstrap.seed + trial) if bootstrap else None
        )
        for sl in slices:
            fit = None
            if method == REG_GEO:
                fit = ols_fit(build_design(sl, countries))
            for country in countries.focal:
                try:
                    if boot is not None and method in (GEO, ARITH):
                        interval = bootstrap_ci(
                            sl, country, countries, method, boot, normalised
                        )
                    elif method == GEO:
                        interval = geo_indicator_ci(
                            sl,
                            country,
                            countries,
                            level,
                            ci_mode or CI_CORRECTED,
                            normalised,
                        )
                    else:
                        mu_g = math.expm1(float(np.log1p(sl.citations).mean()))
                        interval = reg_indicator_ci(
                            fit,
                            mu_g,
                            country,
                            level,
                            ci_mode or CI_PAPER,
                            normalised,
                        )
                except CitImpactError:
                    excluded += 1
                    continue
                target = _true_value(truth, country, method, normalised)
                events += 1
                per_country_events[country] += 1
                if interval.contains(target):
                    covered += 1
                    per_country_covered[country] += 1
                widths.append(interval.width)

    if not widths:
        raise CIUnavailableError("every trial was excluded; nothing to report")
    return CoverageReport(
        method=method,
        level=bootstrap.level if bootstrap else level,
        normalised=normalised,
        bootstrapped=bootstrap is not None,
        trials=trials,
        events=events,
        covered=covered,
        excluded=excluded,
        mean_width=float(np.mean(widths)),
        median_width=float(median(widths)),
        per_country={
            c: (per_country_covered[c] / per_country_events[c])
            if per_country_events[c]
            else math.nan
            for c in countries.focal
        },
    )
