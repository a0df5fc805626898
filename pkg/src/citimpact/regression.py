"""Least-squares model of log citations on country shares.

The model regresses ln(1 + citations) on an intercept plus one share
column per focal country; OTHERS is the dropped reference category, so a
slice made only of OTHERS articles yields an intercept-only design.

Designs are frequently rank deficient (share columns sum to the intercept
whenever every article belongs entirely to focal countries), so the fit
uses the minimum-norm least-squares solution and flags, per country,
whether the pure-country prediction intercept + slope is estimable.  That
combination is invariant across least-squares solutions whenever it is
estimable, which is exactly what the indicator needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as spstats

from .corpus import CountrySet, SubjectYearSlice, share_matrix
from .errors import (
    CIUnavailableError,
    InsufficientDataError,
    NotIdentifiedError,
    ValidationError,
    ZeroDenominatorError,
)
from .intervals import CI_MODES, CI_PAPER, Interval

# Relative tolerance for deciding that (1, e_c) lies in the design row space.
IDENTIFIABILITY_TOL = 1e-8

# Singular values below this fraction of the largest are treated as rank
# deficiency.  Matching the identifiability tolerance keeps near-collinear
# designs on the minimum-norm path (bounded coefficients, orthogonal
# residuals) instead of producing exploding solves with garbage SEs.
RANK_RTOL = 1e-8


@dataclass(frozen=True)
class DesignMatrix:
    """Intercept-plus-shares design with its response vector.

    ``matrix`` has one row per article: a leading column of ones, then one
    share column per entry of ``countries`` (OTHERS never appears).  The
    response is usually ln(1 + citations) but any non-negative vector is
    accepted, so raw-citation fits can be built directly.
    """

    matrix: np.ndarray
    response: np.ndarray
    countries: tuple[str, ...]

    def __post_init__(self):
        x = np.asarray(self.matrix, dtype=float)
        y = np.asarray(self.response, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.size:
            raise ValidationError("design matrix and response shapes disagree")
        if x.shape[1] != len(self.countries) + 1:
            raise ValidationError("design needs one column per country plus intercept")
        if x.shape[0] == 0:
            raise ValidationError("design has no rows")
        if not np.allclose(x[:, 0], 1.0):
            raise ValidationError("first design column must be the intercept")
        if x.shape[1] > 1 and np.any(x[:, 1:].sum(axis=1) > 1.0 + 1e-9):
            raise ValidationError("share entries of a row exceed 1")
        if np.any(y < 0):
            raise ValidationError("response entries must be non-negative")
        object.__setattr__(self, "matrix", x)
        object.__setattr__(self, "response", y)


def build_design(sl: SubjectYearSlice, countries: CountrySet) -> DesignMatrix:
    """Design for one slice: intercept plus focal share columns, log response."""
    shares = share_matrix(sl, countries)[:, : len(countries.focal)]
    n = len(sl.articles)
    matrix = np.column_stack([np.ones(n), shares])
    response = np.log1p(sl.citations)
    return DesignMatrix(matrix=matrix, response=response, countries=countries.focal)


@dataclass(frozen=True)
class RegressionFit:
    """Coefficients, standard errors, and identifiability flags for one fit."""

    intercept: float
    slopes: dict[str, float]
    se_slope: dict[str, float | None]
    se_prediction: dict[str, float | None]
    residual_df: int
    rank: int
    rank_deficient: bool
    identified: dict[str, bool]
    n: int

    def log_prediction(self, country: str) -> float:
        """Predicted log response for an article fully authored by ``country``."""
        if country not in self.slopes:
            raise ValidationError(f"{country!r} is not in the fit")
        if not self.identified[country]:
            raise NotIdentifiedError(
                f"pure-country prediction for {country} is not estimable"
            )
        return self.intercept + self.slopes[country]


def ols_fit(design: DesignMatrix) -> RegressionFit:
    """Ordinary least squares via SVD, with minimum-norm fallback.

    On full column rank the solution and standard errors are the classical
    ones (residual variance times the inverse Gram matrix).  On rank
    deficiency the minimum-norm solution is returned, each country is
    checked for estimability of intercept + slope, and the SE of that
    combination comes from the pseudo-inverse covariance.  With residual
    df <= 0 the point estimates are kept and all SEs are None.
    """
    x = design.matrix
    y = design.response
    n, p = x.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {n}")

    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s.size and s[0] > 0:
        cutoff = s[0] * max(RANK_RTOL, max(n, p) * np.finfo(float).eps)
        rank = int(np.sum(s > cutoff))
    else:
        rank = 0
    ur = u[:, :rank]
    sr = s[:rank]
    vr = vt[:rank].T  # p x rank
    beta = vr @ ((ur.T @ y) / sr)
    residuals = y - x @ beta
    rss = float(residuals @ residuals)
    df = n - rank
    sigma2 = rss / df if df > 0 else None
    # (X'X)^+ ; equals the plain inverse when the design has full column rank.
    pinv_gram = (vr / sr**2) @ vr.T

    rank_deficient = rank < p
    slopes: dict[str, float] = {}
    se_slope: dict[str, float | None] = {}
    se_prediction: dict[str, float | None] = {}
    identified: dict[str, bool] = {}
    for j, country in enumerate(design.countries):
        slopes[country] = float(beta[1 + j])
        v = np.zeros(p)
        v[0] = 1.0
        v[1 + j] = 1.0
        # v is estimable iff it lies in the row space spanned by vt[:rank].
        coeffs = vt[:rank] @ v
        shortfall = v - vt[:rank].T @ coeffs
        ok = float(np.linalg.norm(shortfall)) <= IDENTIFIABILITY_TOL * math.sqrt(2.0)
        identified[country] = ok
        if sigma2 is None:
            se_slope[country] = None
            se_prediction[country] = None
        else:
            se_slope[country] = math.sqrt(max(sigma2 * pinv_gram[1 + j, 1 + j], 0.0))
            se_prediction[country] = (
                math.sqrt(max(sigma2 * float(v @ pinv_gram @ v), 0.0)) if ok else None
            )

    return RegressionFit(
        intercept=float(beta[0]),
        slopes=slopes,
        se_slope=se_slope,
        se_prediction=se_prediction,
        residual_df=df,
        rank=rank,
        rank_deficient=rank_deficient,
        identified=identified,
        n=n,
    )


def reg_indicator(
    fit: RegressionFit, mu_g: float, country: str, normalised: bool = True
) -> float:
    """Model-based geometric-mean indicator (exp(a + b_c) - 1) / mu_g.

    With ``normalised=False`` the division by the world geometric mean is
    skipped and the raw predicted mean is returned.
    """
    prediction = math.expm1(fit.log_prediction(country))
    if not normalised:
        return prediction
    if mu_g <= 0.0:
        raise ZeroDenominatorError("overall geometric mean is zero")
    return prediction / mu_g


def reg_indicator_ci(
    fit: RegressionFit,
    mu_g: float,
    country: str,
    level: float = 0.95,
    mode: str = CI_PAPER,
    normalised: bool = True,
) -> Interval:
    """Confidence interval for the model-based indicator.

    The bounds are (exp(a + b_c +- t * SE) - 1) / mu_g with t the two-sided
    critical value of the t distribution at the residual df.  In
    paper-literal mode (the default) SE is the slope's standard error; in
    corrected mode it is the standard error of the full combination
    a + b_c, which is the quantity actually exponentiated.
    """
    if mode not in CI_MODES:
        raise ValueError(f"mode must be one of {CI_MODES}, got {mode!r}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    centre = fit.log_prediction(country)
    se = fit.se_slope[country] if mode == CI_PAPER else fit.se_prediction[country]
    if se is None or fit.residual_df < 1:
        raise CIUnavailableError(
            f"standard errors undefined for {country} (residual df {fit.residual_df})"
        )
    if normalised and mu_g <= 0.0:
        raise ZeroDenominatorError("overall geometric mean is zero")
    t = float(spstats.t.ppf(0.5 + level / 2.0, fit.residual_df))
    scale = mu_g if normalised else 1.0
    return Interval(
        math.expm1(centre - t * se) / scale,
        math.expm1(centre + t * se) / scale,
    )
