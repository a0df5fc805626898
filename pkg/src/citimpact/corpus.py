"""Corpus parsing, validation, slicing, and fractional country shares.

The corpus CSV format is::

    id,subject,year,citations,affiliations

where ``affiliations`` is a semicolon-separated list of
``COUNTRYCODE:author_count`` entries (the field may be quoted).  Author
counts are stored as given; per-country shares are derived by dividing by
the row's author total, so each article's shares always sum to exactly 1.
Rows with an empty affiliations field are dropped and counted, never kept.

Country codes are uppercased at parse time and must be alphanumeric.  All
author mass not belonging to a focal country is folded into the reserved
pseudo-country ``OTHERS``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable

import numpy as np

from .errors import ParseError, UnknownArticleError, ValidationError

# Reserved code for the remainder of the world; never a focal country.
OTHERS = "OTHERS"

CSV_HEADER = ("id", "subject", "year", "citations", "affiliations")


def _valid_code(code: str) -> bool:
    return code.isascii() and code.isalnum() and code == code.upper()


@dataclass(frozen=True)
class ArticleRecord:
    """One publication with per-country author counts.

    ``affiliations`` holds (country code, author count) pairs; duplicates
    are merged and the pairs sorted at construction.  Shares are the counts
    divided by the author total, so they are always positive and sum to 1.
    """

    id: str
    subject: str
    year: int
    citations: int
    affiliations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not isinstance(self.year, int):
            raise ValidationError(f"article {self.id}: year must be an integer")
        if not isinstance(self.citations, int) or self.citations < 0:
            raise ValidationError(
                f"article {self.id}: citations must be a non-negative integer"
            )
        merged: dict[str, int] = {}
        for code, count in self.affiliations:
            if not code or not _valid_code(code):
                raise ValidationError(
                    f"article {self.id}: bad country code {code!r}"
                )
            if not isinstance(count, int) or count < 1:
                raise ValidationError(
                    f"article {self.id}: author count for {code} must be a positive integer"
                )
            merged[code] = merged.get(code, 0) + count
        if not merged:
            raise ValidationError(f"article {self.id}: affiliations are empty")
        object.__setattr__(
            self, "affiliations", tuple(sorted(merged.items()))
        )

    @property
    def author_total(self) -> int:
        return sum(count for _, count in self.affiliations)

    @cached_property
    def shares(self) -> dict[str, float]:
        """Country code -> author proportion; values sum to 1."""
        total = self.author_total
        return {code: count / total for code, count in self.affiliations}


@dataclass(frozen=True)
class CountrySet:
    """Ordered focal countries; everything else is folded into OTHERS."""

    focal: tuple[str, ...]

    def __post_init__(self):
        normalised = tuple(code.upper() for code in self.focal)
        for code in normalised:
            if not _valid_code(code):
                raise ValidationError(f"bad country code {code!r}")
            if code == OTHERS:
                raise ValidationError(f"{OTHERS} cannot be a focal country")
        if len(set(normalised)) != len(normalised):
            raise ValidationError("focal country codes must be unique")
        object.__setattr__(self, "focal", normalised)

    @property
    def all_codes(self) -> tuple[str, ...]:
        return self.focal + (OTHERS,)

    @classmethod
    def parse(cls, text: str) -> "CountrySet":
        """Build from a comma-separated list such as ``"US,UK,CN"``."""
        codes = tuple(tok.strip() for tok in text.split(",") if tok.strip())
        return cls(codes)


@dataclass(frozen=True)
class SubjectYearSlice:
    """All articles for one (subject, year); the unit every indicator runs on."""

    subject: str
    year: int
    articles: tuple[ArticleRecord, ...]

    def __post_init__(self):
        if not self.articles:
            raise ValidationError(
                f"slice ({self.subject}, {self.year}) has no articles"
            )
        seen: set[str] = set()
        for article in self.articles:
            if article.subject != self.subject or article.year != self.year:
                raise ValidationError(
                    f"article {article.id} does not belong to slice "
                    f"({self.subject}, {self.year})"
                )
            if article.id in seen:
                raise ValidationError(
                    f"duplicate article id {article.id!r} in slice "
                    f"({self.subject}, {self.year})"
                )
            seen.add(article.id)

    def __len__(self) -> int:
        return len(self.articles)

    @cached_property
    def citations(self) -> np.ndarray:
        """Citation counts as a float array, in article order."""
        return np.array([a.citations for a in self.articles], dtype=float)

    @cached_property
    def _by_id(self) -> dict[str, ArticleRecord]:
        return {a.id: a for a in self.articles}

    def article(self, article_id: str) -> ArticleRecord:
        try:
            return self._by_id[article_id]
        except KeyError:
            raise UnknownArticleError(
                f"article {article_id!r} not in slice ({self.subject}, {self.year})"
            ) from None


def share_matrix(sl: SubjectYearSlice, countries: CountrySet) -> np.ndarray:
    """Per-article share weights, one column per focal country plus OTHERS last.

    Rows sum to 1.  The matrix is cached on the slice; callers must not
    mutate the returned array.
    """
    cache: dict[CountrySet, np.ndarray] = sl.__dict__.setdefault(
        "_share_matrices", {}
    )
    matrix = cache.get(countries)
    if matrix is None:
        k = len(countries.focal)
        index = {code: j for j, code in enumerate(countries.focal)}
        matrix = np.zeros((len(sl.articles), k + 1))
        for i, article in enumerate(sl.articles):
            for code, share in article.shares.items():
                matrix[i, index.get(code, k)] += share
        matrix.setflags(write=False)
        cache[countries] = matrix
    return matrix


def share_weights(
    sl: SubjectYearSlice, country: str, countries: CountrySet
) -> np.ndarray:
    """Per-article share p_c for one focal country or OTHERS."""
    codes = countries.all_codes
    if country not in codes:
        raise ValidationError(f"{country!r} is not focal or {OTHERS}")
    return share_matrix(sl, countries)[:, codes.index(country)].copy()


def country_share(
    sl: SubjectYearSlice, article_id: str, countries: CountrySet
) -> dict[str, float]:
    """Share vector of one article over focal countries plus OTHERS.

    Non-focal mass lands on OTHERS; the values sum to 1.
    """
    shares = sl.article(article_id).shares
    out = {code: shares.get(code, 0.0) for code in countries.focal}
    out[OTHERS] = sum(v for c, v in shares.items() if c not in out)
    return out


def weighted_count(
    sl: SubjectYearSlice, country: str, countries: CountrySet
) -> float:
    """Weighted authorship sum n_c = sum of p_c over the slice's articles."""
    return float(share_weights(sl, country, countries).sum())


@dataclass(frozen=True)
class ParseDiagnostics:
    """What the parser saw: row counts, dropped rows, collected errors."""

    rows: int
    articles: int
    dropped_no_affiliation: int
    dropped_lines: tuple[int, ...]
    errors: tuple[tuple[int, str], ...] = ()

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "articles": self.articles,
            "dropped_no_affiliation": self.dropped_no_affiliation,
            "dropped_lines": list(self.dropped_lines),
            "errors": [{"line": line, "message": msg} for line, msg in self.errors],
        }


@dataclass(frozen=True)
class ParseResult:
    slices: tuple[SubjectYearSlice, ...]
    diagnostics: ParseDiagnostics


def _parse_affiliations(text: str, line: int) -> tuple[tuple[str, int], ...]:
    pairs = []
    for token in text.split(";"):
        token = token.strip()
        if not token:
            raise ParseError(line, "empty affiliation entry")
        code, sep, count_text = token.partition(":")
        if not sep:
            raise ParseError(line, f"affiliation entry {token!r} lacks ':'")
        code = code.strip().upper()
        if not _valid_code(code):
            raise ParseError(line, f"bad country code {code!r}")
        try:
            count = int(count_text.strip())
        except ValueError:
            raise ParseError(
                line, f"author count {count_text.strip()!r} is not an integer"
            ) from None
        if count < 1:
            raise ParseError(line, f"author count for {code} must be positive")
        pairs.append((code, count))
    return tuple(pairs)


def parse_corpus(stream: IO[str] | str, on_error: str = "raise") -> ParseResult:
    """Parse a corpus CSV into (subject, year) slices plus diagnostics.

    ``on_error="raise"`` aborts at the first malformed row; ``"collect"``
    records each offending row in the diagnostics and keeps going.  Rows
    with an empty affiliations field are always dropped and counted, not
    treated as errors.  Slices are returned sorted by (subject, year).
    """
    if on_error not in ("raise", "collect"):
        raise ValueError(f"on_error must be 'raise' or 'collect', got {on_error!r}")
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "missing header row") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise ParseError(1, f"header must be {','.join(CSV_HEADER)}")

    rows = 0
    dropped: list[int] = []
    errors: list[tuple[int, str]] = []
    # (subject, year) -> article id -> (line, record)
    groups: dict[tuple[str, int], dict[str, ArticleRecord]] = {}

    def fail(exc: ParseError | ValidationError, line: int):
        if on_error == "raise":
            raise exc
        errors.append((line, str(exc)))

    for row in reader:
        line = reader.line_num
        if not row:
            continue
        rows += 1
        if len(row) != len(CSV_HEADER):
            fail(ParseError(line, f"expected {len(CSV_HEADER)} columns, got {len(row)}"), line)
            continue
        article_id, subject, year_text, cit_text, affil_text = (f.strip() for f in row)
        if not affil_text:
            dropped.append(line)
            continue
        try:
            year = int(year_text)
        except ValueError:
            fail(ParseError(line, f"year {year_text!r} is not an integer"), line)
            continue
        try:
            citations = int(cit_text)
        except ValueError:
            fail(ParseError(line, f"citations {cit_text!r} is not an integer"), line)
            continue
        if citations < 0:
            fail(ParseError(line, f"citations must be non-negative, got {citations}"), line)
            continue
        try:
            affiliations = _parse_affiliations(affil_text, line)
            record = ArticleRecord(
                id=article_id,
                subject=subject,
                year=year,
                citations=citations,
                affiliations=affiliations,
            )
        except (ParseError, ValidationError) as exc:
            fail(exc if isinstance(exc, ParseError) else ParseError(line, str(exc)), line)
            continue
        group = groups.setdefault((subject, year), {})
        if article_id in group:
            fail(
                ValidationError(
                    f"line {line}: duplicate article id {article_id!r} "
                    f"in ({subject}, {year})"
                ),
                line,
            )
            continue
        group[article_id] = record

    slices = tuple(
        SubjectYearSlice(subject, year, tuple(group.values()))
        for (subject, year), group in sorted(groups.items())
        if group
    )
    articles = sum(len(sl) for sl in slices)
    diagnostics = ParseDiagnostics(
        rows=rows,
        articles=articles,
        dropped_no_affiliation=len(dropped),
        dropped_lines=tuple(dropped),
        errors=tuple(errors),
    )
    return ParseResult(slices=slices, diagnostics=diagnostics)


def _csv_field(value: str, force_quote: bool = False) -> str:
    if force_quote or any(ch in value for ch in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def serialize_corpus(slices: Iterable[SubjectYearSlice], stream: IO[str]) -> None:
    """Write slices back out in the corpus CSV format.

    The affiliations field is always quoted, with country codes sorted, so
    output is deterministic and parse -> serialize -> parse round-trips.
    """
    stream.write(",".join(CSV_HEADER) + "\n")
    for sl in slices:
        for article in sl.articles:
            affil = ";".join(f"{code}:{count}" for code, count in article.affiliations)
            stream.write(
                ",".join(
                    (
                        _csv_field(article.id),
                        _csv_field(article.subject),
                        str(article.year),
                        str(article.citations),
                        _csv_field(affil, force_quote=True),
                    )
                )
                + "\n"
            )


def load_corpus(path: str, on_error: str = "raise") -> ParseResult:
    """Parse a corpus CSV file from disk."""
    with open(path, encoding="utf-8", newline="") as handle:
        return parse_corpus(handle, on_error=on_error)
