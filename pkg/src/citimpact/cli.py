"""Command-line entry point.

Subcommands: ``validate``, ``compute``, ``aggregate``, ``diagnose``,
``synth``.  Options can come from a JSON config file (``--config``) with
individual flags overriding it; the effective configuration is echoed as
``run_config.json`` into every output directory so runs can be reproduced
exactly.  Output files are written atomically and contain nothing
time- or environment-dependent: identical inputs, config, and seed give
bit-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import aggregate as agg
from .corpus import CountrySet, load_corpus, serialize_corpus
from .errors import CitImpactError, ConfigError, DegenerateSampleError
from .indicators import METHODS, BootstrapConfig
from .intervals import CI_MODES
from .stats import moments
from .synth import SynthSpec, coverage_experiment, generate_corpus

FORMATS = ("csv", "json")


@dataclass
class RunConfig:
    """Effective settings for one command invocation."""

    input: str | None = None
    countries: tuple[str, ...] = ()
    methods: tuple[str, ...] = ("GEO",)
    top_x: float = 10.0
    level: float = 0.95
    ci_mode: str | None = None  # None = each method's own default
    replicates: int = 999
    seed: int = 0
    format: str = "csv"
    out: str | None = None
    raw: bool = False
    jobs: int = 1

    def validate(self) -> None:
        if not self.methods:
            raise ConfigError("at least one method must be selected")
        for method in self.methods:
            if method not in METHODS:
                raise ConfigError(
                    f"unknown method {method!r}; expected one of {', '.join(METHODS)}"
                )
        if not 0.0 < self.level < 1.0:
            raise ConfigError(f"level must be in (0, 1), got {self.level}")
        if not 0.0 < self.top_x < 100.0:
            raise ConfigError(f"top-x must be in (0, 100), got {self.top_x}")
        if self.ci_mode is not None and self.ci_mode not in CI_MODES:
            raise ConfigError(f"ci-mode must be one of {CI_MODES}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


def _split_csv_list(text) -> tuple[str, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(str(t) for t in text)
    return tuple(tok.strip() for tok in str(text).split(",") if tok.strip())


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file, and explicit flags."""
    data: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, encoding="utf-8") as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {config_path}: {exc}") from None
        unknown = set(data) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    config = RunConfig()
    for f in fields(RunConfig):
        if f.name in data and data[f.name] is not None:
            value = data[f.name]
            if f.name in ("countries", "methods"):
                value = _split_csv_list(value)
            setattr(config, f.name, value)
        cli_value = getattr(args, f.name, None)
        if cli_value is not None:
            if f.name in ("countries", "methods"):
                cli_value = _split_csv_list(cli_value)
            setattr(config, f.name, cli_value)
    config.methods = tuple(m.upper() for m in config.methods)
    config.validate()
    return config


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _write_run_config(config: RunConfig, out_dir: str) -> None:
    payload = asdict(config)
    payload["countries"] = list(config.countries)
    payload["methods"] = list(config.methods)
    _atomic_write(
        os.path.join(out_dir, "run_config.json"),
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )


def _ensure_out(config: RunConfig) -> str:
    if not config.out:
        raise ConfigError("an output directory is required (--out)")
    os.makedirs(config.out, exist_ok=True)
    return config.out


def _render(write_csv, write_json, payload, fmt: str) -> str:
    buffer = io.StringIO()
    (write_csv if fmt == "csv" else write_json)(payload, buffer)
    return buffer.getvalue()


def cmd_validate(args: argparse.Namespace) -> int:
    config = build_config(args)
    if not config.input:
        raise ConfigError("an input corpus is required")
    result = load_corpus(config.input, on_error="collect")
    diag = result.diagnostics
    report = {
        "input": config.input,
        "ok": not diag.errors,
        "slices": len(result.slices),
        **diag.to_dict(),
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if not diag.errors else 1


def cmd_compute(args: argparse.Namespace) -> int:
    config = build_config(args)
    if not config.input:
        raise ConfigError("an input corpus is required")
    if not config.countries:
        raise ConfigError("no focal countries selected (--countries)")
    out_dir = _ensure_out(config)
    corpus = load_corpus(config.input).slices
    countries = CountrySet(config.countries)
    bootstrap = BootstrapConfig(
        replicates=config.replicates, level=config.level, seed=config.seed
    )
    cells: list[agg.TableCell] = []
    for method in config.methods:
        cells.extend(
            agg.indicator_table(
                corpus,
                countries,
                method,
                level=config.level,
                ci_mode=config.ci_mode,
                top_x=config.top_x,
                bootstrap=bootstrap,
                normalised=not config.raw,
                jobs=config.jobs,
            )
        )
    text = _render(agg.write_table_csv, agg.write_table_json, cells, config.format)
    _atomic_write(os.path.join(out_dir, f"indicators.{config.format}"), text)
    _write_run_config(config, out_dir)
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    config = build_config(args)
    if not config.input:
        raise ConfigError("an indicator table file is required")
    with open(config.input, encoding="utf-8", newline="") as handle:
        if config.input.endswith(".json"):
            table = agg.read_table_json(handle)
        else:
            table = agg.read_table_csv(handle)
    out_dir = _ensure_out(config)
    pairs = sorted({(c.method, c.country) for c in table})
    medians = []
    widths = []
    for method, country in pairs:
        try:
            medians.append(agg.median_across_subjects(table, method, country))
        except CitImpactError:
            pass
        try:
            widths.append(agg.ci_width_series(table, method, country))
        except CitImpactError:
            pass
    _atomic_write(
        os.path.join(out_dir, f"trend_medians.{config.format}"),
        _render(agg.write_series_csv, agg.write_series_json, medians, config.format),
    )
    _atomic_write(
        os.path.join(out_dir, f"trend_ci_widths.{config.format}"),
        _render(agg.write_series_csv, agg.write_series_json, widths, config.format),
    )
    _write_run_config(config, out_dir)
    return 0


_MOMENT_FIELDS = (
    "subject",
    "year",
    "variant",
    "n",
    "mean",
    "skewness",
    "kurtosis",
    "skewness_acceptable",
    "kurtosis_acceptable",
    "status",
)

_YEARLY_FIELDS = (
    "year",
    "subjects",
    "citations_skewness",
    "citations_kurtosis",
    "log_citations_skewness",
    "log_citations_kurtosis",
)


def _moment_rows(corpus) -> tuple[list[dict], list[dict]]:
    rows: list[dict] = []
    yearly: dict[int, list[tuple[float, float, float, float]]] = {}
    for sl in corpus:
        raw = sl.citations
        variants = (("citations", raw), ("log1p_citations", np.log1p(raw)))
        reports = {}
        for variant, values in variants:
            base = {"subject": sl.subject, "year": sl.year, "variant": variant, "n": len(sl)}
            try:
                report = moments(values)
            except DegenerateSampleError:
                rows.append(
                    {
                        **base,
                        "mean": None,
                        "skewness": None,
                        "kurtosis": None,
                        "skewness_acceptable": None,
                        "kurtosis_acceptable": None,
                        "status": "degenerate",
                    }
                )
                continue
            reports[variant] = report
            rows.append(
                {
                    **base,
                    "mean": report.mean,
                    "skewness": report.skewness,
                    "kurtosis": report.kurtosis,
                    "skewness_acceptable": report.skewness_acceptable,
                    "kurtosis_acceptable": report.kurtosis_acceptable,
                    "status": "ok",
                }
            )
        if len(reports) == 2:
            yearly.setdefault(sl.year, []).append(
                (
                    reports["citations"].skewness,
                    reports["citations"].kurtosis,
                    reports["log1p_citations"].skewness,
                    reports["log1p_citations"].kurtosis,
                )
            )
    year_rows = []
    for year in sorted(yearly):
        stats = yearly[year]
        n = len(stats)
        sums = [sum(s[i] for s in stats) / n for i in range(4)]
        year_rows.append(
            {
                "year": year,
                "subjects": n,
                "citations_skewness": sums[0],
                "citations_kurtosis": sums[1],
                "log_citations_skewness": sums[2],
                "log_citations_kurtosis": sums[3],
            }
        )
    return rows, year_rows


def _write_dict_rows(rows: list[dict], field_names: tuple[str, ...], fmt: str) -> str:
    buffer = io.StringIO()
    if fmt == "json":
        json.dump(rows, buffer, indent=2, sort_keys=True)
        buffer.write("\n")
    else:
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(field_names)
        for row in rows:
            writer.writerow(
                [
                    ""
                    if row[name] is None
                    else (repr(row[name]) if isinstance(row[name], float) else row[name])
                    for name in field_names
                ]
            )
    return buffer.getvalue()


def cmd_diagnose(args: argparse.Namespace) -> int:
    config = build_config(args)
    if not config.input:
        raise ConfigError("an input corpus is required")
    out_dir = _ensure_out(config)
    corpus = load_corpus(config.input).slices
    rows, year_rows = _moment_rows(corpus)
    _atomic_write(
        os.path.join(out_dir, f"moments.{config.format}"),
        _write_dict_rows(rows, _MOMENT_FIELDS, config.format),
    )
    _atomic_write(
        os.path.join(out_dir, f"moments_by_year.{config.format}"),
        _write_dict_rows(year_rows, _YEARLY_FIELDS, config.format),
    )
    _write_run_config(config, out_dir)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    with open(args.specfile, encoding="utf-8") as handle:
        spec = SynthSpec.from_dict(json.load(handle))

    if args.coverage:
        bootstrap = None
        if args.bootstrap:
            bootstrap = BootstrapConfig(
                replicates=args.replicates if args.replicates is not None else 999,
                level=args.level if args.level is not None else 0.95,
                seed=args.seed if args.seed is not None else 0,
            )
        countries = (
            CountrySet(_split_csv_list(args.countries)) if args.countries else None
        )
        report = coverage_experiment(
            spec,
            trials=args.trials,
            method=(args.method or "GEO").upper(),
            level=args.level if args.level is not None else 0.95,
            ci_mode=args.ci_mode,
            bootstrap=bootstrap,
            countries=countries,
            normalised=args.normalised,
        )
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            _atomic_write(
                os.path.join(args.out, "coverage.json"),
                json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
            )
        return 0

    if not args.out:
        raise ConfigError("an output directory is required (--out)")
    os.makedirs(args.out, exist_ok=True)
    slices, truth = generate_corpus(spec)
    buffer = io.StringIO()
    serialize_corpus(slices, buffer)
    _atomic_write(os.path.join(args.out, "corpus.csv"), buffer.getvalue())
    _atomic_write(
        os.path.join(args.out, "ground_truth.json"),
        json.dumps(truth.to_dict(), indent=2, sort_keys=True) + "\n",
    )
    return 0


def _add_common(parser: argparse.ArgumentParser, *, with_input: bool = True) -> None:
    if with_input:
        parser.add_argument("input", nargs="?", help="input file (or set it in --config)")
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--countries", help="comma-separated focal country codes")
    parser.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    parser.add_argument("--top-x", dest="top_x", type=float, help="percentile for TOP_X")
    parser.add_argument("--level", type=float, help="confidence level, default 0.95")
    parser.add_argument(
        "--ci-mode",
        dest="ci_mode",
        choices=CI_MODES,
        help="interval formula variant; default is per-method",
    )
    parser.add_argument("--replicates", type=int, help="bootstrap replicates, default 999")
    parser.add_argument("--seed", type=int, help="bootstrap seed, default 0")
    parser.add_argument("--format", choices=FORMATS, help="output format, default csv")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--raw",
        action="store_const",
        const=True,
        help="emit raw country means instead of world-normalised ratios",
    )
    parser.add_argument("--jobs", type=int, help="parallel slice workers, default 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citimpact",
        description="National citation impact indicators with confidence intervals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a corpus and report problems")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compute", help="compute indicator tables for a corpus")
    _add_common(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("aggregate", help="median trend series from an indicator table")
    _add_common(p)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("diagnose", help="skewness/kurtosis of raw and log citations")
    _add_common(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("synth", help="generate a synthetic corpus or run coverage")
    p.add_argument("specfile", help="synthetic corpus spec (JSON)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--coverage", action="store_true", help="run a coverage experiment")
    p.add_argument("--trials", type=int, default=100, help="coverage trials")
    p.add_argument("--method", help="indicator method for coverage, default GEO")
    p.add_argument("--level", type=float, help="confidence level, default 0.95")
    p.add_argument("--ci-mode", dest="ci_mode", choices=CI_MODES)
    p.add_argument(
        "--bootstrap", action="store_true", help="use bootstrap intervals for coverage"
    )
    p.add_argument("--replicates", type=int, help="bootstrap replicates, default 999")
    p.add_argument("--seed", type=int, help="bootstrap seed, default 0")
    p.add_argument("--countries", help="focal countries for coverage")
    p.add_argument(
        "--normalised",
        action="store_true",
        help="cover the world-normalised indicator instead of the country mean",
    )
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CitImpactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
