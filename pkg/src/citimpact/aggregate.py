"""Batch indicator tables and cross-subject trend aggregation.

The table driver runs one method over every (slice, focal country) cell.
Statistical degeneracies never abort a run: each cell carries a status
("ok", "no-articles", "non-identified", "insufficient-data",
"ci-unavailable", "degenerate") and absent values stay empty in the
emitted CSV/JSON.  Trend series reduce a table to per-country, per-year
medians across subjects, which is the whole-corpus summary view.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import median
from typing import IO, Iterable, Sequence

from .corpus import CountrySet, SubjectYearSlice, weighted_count
from .errors import (
    CitImpactError,
    DegenerateSampleError,
    EmptySampleError,
    EmptySeriesError,
    InsufficientDataError,
    NoArticlesError,
    NotIdentifiedError,
    ParseError,
    ZeroDenominatorError,
)
from .indicators import (
    ARITH,
    GEO,
    METHODS,
    REG_GEO,
    TOP_X,
    BootstrapConfig,
    _world_geo_mean,
    arith_indicator,
    bootstrap_ci,
    geo_indicator,
    geo_indicator_ci,
    top_share,
    top_share_ci,
)
from .intervals import CI_CORRECTED, CI_PAPER
from .regression import build_design, ols_fit, reg_indicator, reg_indicator_ci

STATUS_OK = "ok"
STATUS_NO_ARTICLES = "no-articles"
STATUS_NOT_IDENTIFIED = "non-identified"
STATUS_INSUFFICIENT = "insufficient-data"
STATUS_CI_UNAVAILABLE = "ci-unavailable"
STATUS_DEGENERATE = "degenerate"

TABLE_FIELDS = (
    "subject",
    "year",
    "country",
    "method",
    "estimate",
    "ci_low",
    "ci_high",
    "n_c",
    "status",
)

SERIES_FIELDS = (
    "method",
    "country",
    "year",
    "median",
    "subjects",
    "median_ci_width",
)


@dataclass(frozen=True)
class TableCell:
    """One (subject, year, country, method) cell of an indicator table."""

    subject: str
    year: int
    country: str
    method: str
    status: str
    estimate: float | None
    ci_low: float | None
    ci_high: float | None
    n_c: float


@dataclass(frozen=True)
class TrendPoint:
    year: int
    median: float
    subjects: int
    median_ci_width: float | None


@dataclass(frozen=True)
class TrendSeries:
    """Per-year medians across subjects for one (method, country)."""

    method: str
    country: str
    points: tuple[TrendPoint, ...]


def _status_for(exc: CitImpactError) -> str:
    if isinstance(exc, NoArticlesError):
        return STATUS_NO_ARTICLES
    if isinstance(exc, NotIdentifiedError):
        return STATUS_NOT_IDENTIFIED
    if isinstance(exc, InsufficientDataError):
        return STATUS_INSUFFICIENT
    if isinstance(exc, (ZeroDenominatorError, DegenerateSampleError, EmptySampleError)):
        return STATUS_DEGENERATE
    raise exc


def _slice_cells(
    sl: SubjectYearSlice,
    countries: CountrySet,
    method: str,
    level: float,
    ci_mode: str | None,
    top_x: float,
    bootstrap: BootstrapConfig | None,
    normalised: bool,
) -> list[TableCell]:
    fit = None
    fit_error: CitImpactError | None = None
    mu_g = 0.0
    if method == REG_GEO:
        mu_g = _world_geo_mean(sl)
        try:
            fit = ols_fit(build_design(sl, countries))
        except CitImpactError as exc:
            fit_error = exc

    cells = []
    for country in countries.focal:
        estimate = ci_low = ci_high = None
        top_result = None
        n_c = weighted_count(sl, country, countries)
        status = STATUS_OK
        try:
            if method == GEO:
                estimate = geo_indicator(sl, country, countries, normalised).estimate
            elif method == ARITH:
                estimate = arith_indicator(sl, country, countries, normalised).estimate
            elif method == TOP_X:
                top_result = top_share(sl, country, countries, top_x)
                estimate = top_result.estimate
            elif method == REG_GEO:
                if fit_error is not None:
                    raise fit_error
                estimate = reg_indicator(fit, mu_g, country, normalised)
            else:
                raise ValueError(f"unknown method {method!r}")
        except CitImpactError as exc:
            status = _status_for(exc)
            cells.append(
                TableCell(sl.subject, sl.year, country, method, status, None, None, None, n_c)
            )
            continue

        try:
            if method == GEO:
                interval = geo_indicator_ci(
                    sl, country, countries, level, ci_mode or CI_CORRECTED, normalised
                )
            elif method == ARITH:
                if bootstrap is None:
                    interval = None
                else:
                    interval = bootstrap_ci(
                        sl, country, countries, ARITH, bootstrap, normalised
                    )
            elif method == TOP_X:
                interval = top_share_ci(top_result, level)
            else:
                interval = reg_indicator_ci(
                    fit, mu_g, country, level, ci_mode or CI_PAPER, normalised
                )
            if interval is not None:
                ci_low, ci_high = float(interval.low), float(interval.high)
        except CitImpactError:
            status = STATUS_CI_UNAVAILABLE

        cells.append(
            TableCell(
                sl.subject, sl.year, country, method, status, estimate, ci_low, ci_high, n_c
            )
        )
    return cells


def indicator_table(
    corpus: Sequence[SubjectYearSlice],
    countries: CountrySet,
    method: str,
    *,
    level: float = 0.95,
    ci_mode: str | None = None,
    top_x: float = 10.0,
    bootstrap: BootstrapConfig | None = None,
    normalised: bool = True,
    jobs: int = 1,
) -> list[TableCell]:
    """Compute one method over every (slice, focal country) cell.

    ``ci_mode=None`` uses each method's own default (paper-literal for the
    regression interval, corrected for the geometric-mean interval).  The
    arithmetic mean only gets an interval when a bootstrap config is given.
    Slices may be processed in parallel with ``jobs > 1``; cell order and
    values are identical either way.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if not corpus:
        raise ValueError("corpus is empty")

    def work(sl: SubjectYearSlice) -> list[TableCell]:
        return _slice_cells(
            sl, countries, method, level, ci_mode, top_x, bootstrap, normalised
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_slice = list(pool.map(work, corpus))
    else:
        per_slice = [work(sl) for sl in corpus]
    return [cell for cells in per_slice for cell in cells]


def _series_points(
    cells: Iterable[TableCell],
    value_of,
    width_of,
) -> tuple[TrendPoint, ...]:
    by_year: dict[int, list[TableCell]] = {}
    for cell in cells:
        by_year.setdefault(cell.year, []).append(cell)
    points = []
    for year in sorted(by_year):
        group = by_year[year]
        values = [value_of(c) for c in group]
        widths = [w for w in (width_of(c) for c in group) if w is not None]
        points.append(
            TrendPoint(
                year=year,
                median=median(values),
                subjects=len(values),
                median_ci_width=median(widths) if widths else None,
            )
        )
    return tuple(points)


def median_across_subjects(
    table: Sequence[TableCell], method: str, country: str
) -> TrendSeries:
    """Median estimate per year across the subjects where the cell computed.

    Even subject counts take the midpoint of the two central values.  Cells
    without an estimate are excluded; the contributing subject count is
    reported per point.  The median CI width over cells that carry bounds
    rides along when any exist.
    """
    cells = [
        c
        for c in table
        if c.method == method and c.country == country and c.estimate is not None
    ]
    if not cells:
        raise EmptySeriesError(f"no computable cells for {country}/{method}")
    return TrendSeries(
        method=method,
        country=country,
        points=_series_points(
            cells,
            value_of=lambda c: c.estimate,
            width_of=lambda c: (
                c.ci_high - c.ci_low
                if c.ci_low is not None and c.ci_high is not None
                else None
            ),
        ),
    )


def ci_width_series(
    table: Sequence[TableCell], method: str, country: str
) -> TrendSeries:
    """Median confidence-interval width per year across subjects."""
    cells = [
        c
        for c in table
        if c.method == method
        and c.country == country
        and c.ci_low is not None
        and c.ci_high is not None
    ]
    if not cells:
        raise EmptySeriesError(f"no cells with intervals for {country}/{method}")
    return TrendSeries(
        method=method,
        country=country,
        points=_series_points(
            cells,
            value_of=lambda c: c.ci_high - c.ci_low,
            width_of=lambda c: None,
        ),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_table_csv(cells: Iterable[TableCell], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TABLE_FIELDS)
    for c in cells:
        writer.writerow(
            [
                c.subject,
                c.year,
                c.country,
                c.method,
                _fmt(c.estimate),
                _fmt(c.ci_low),
                _fmt(c.ci_high),
                _fmt(c.n_c),
                c.status,
            ]
        )


def write_table_json(cells: Iterable[TableCell], stream: IO[str]) -> None:
    records = [
        {
            "subject": c.subject,
            "year": c.year,
            "country": c.country,
            "method": c.method,
            "estimate": c.estimate,
            "ci_low": c.ci_low,
            "ci_high": c.ci_high,
            "n_c": c.n_c,
            "status": c.status,
        }
        for c in cells
    ]
    json.dump(records, stream, indent=2, sort_keys=True)
    stream.write("\n")


def _cell_from_fields(
    subject, year, country, method, estimate, ci_low, ci_high, n_c, status
) -> TableCell:
    return TableCell(
        subject=subject,
        year=int(year),
        country=country,
        method=method,
        status=status,
        estimate=None if estimate in (None, "") else float(estimate),
        ci_low=None if ci_low in (None, "") else float(ci_low),
        ci_high=None if ci_high in (None, "") else float(ci_high),
        n_c=None if n_c in (None, "") else float(n_c),
    )


def read_table_csv(stream: IO[str]) -> list[TableCell]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(header) != TABLE_FIELDS:
        raise ParseError(1, f"table header must be {','.join(TABLE_FIELDS)}")
    cells = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(TABLE_FIELDS):
            raise ParseError(reader.line_num, "wrong column count in table row")
        cells.append(_cell_from_fields(*row))
    return cells


def read_table_json(stream: IO[str]) -> list[TableCell]:
    records = json.load(stream)
    return [
        _cell_from_fields(
            r["subject"],
            r["year"],
            r["country"],
            r["method"],
            r.get("estimate"),
            r.get("ci_low"),
            r.get("ci_high"),
            r.get("n_c"),
            r["status"],
        )
        for r in records
    ]


def write_series_csv(series: Iterable[TrendSeries], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SERIES_FIELDS)
    for s in series:
        for p in s.points:
            writer.writerow(
                [
                    s.method,
                    s.country,
                    p.year,
                    _fmt(p.median),
                    p.subjects,
                    _fmt(p.median_ci_width),
                ]
            )


def write_series_json(series: Iterable[TrendSeries], stream: IO[str]) -> None:
    records = [
        {
            "method": s.method,
            "country": s.country,
            "year": p.year,
            "median": p.median,
            "subjects": p.subjects,
            "median_ci_width": p.median_ci_width,
        }
        for s in series
        for p in s.points
    ]
    json.dump(records, stream, indent=2, sort_keys=True)
    stream.write("\n")
