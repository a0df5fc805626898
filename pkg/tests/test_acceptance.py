"""Acceptance suite: one test per release criterion.

Each test prints a single pass/fail line (visible with ``pytest -s``) and
enforces the criterion's tolerance and runtime budget.  Statistical
criteria run on seeded synthetic corpora, so every number here is
reproducible bit for bit.
"""

import hashlib
import json
import math
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from citimpact import (
    ArticleRecord,
    BootstrapConfig,
    CountryProfile,
    CountrySet,
    DesignMatrix,
    SubjectYearSlice,
    SynthSpec,
    arith_indicator,
    arithmetic_mean,
    build_design,
    coverage_experiment,
    generate_corpus,
    geo_indicator_ci,
    geometric_mean,
    bootstrap_ci,
    moments,
    ols_fit,
    parse_corpus,
    reg_indicator_ci,
    top_credits,
    top_share,
)
from citimpact.cli import main
from conftest import TOY_CSV

import test_properties


@contextmanager
def criterion(number: int, title: str, budget_seconds: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"criterion {number}: FAIL - {title}")
        raise
    elapsed = time.perf_counter() - start
    within = elapsed < budget_seconds
    verdict = "PASS" if within else "FAIL (over runtime budget)"
    print(f"criterion {number}: {verdict} - {title} ({elapsed:.1f}s)")
    assert within, f"criterion {number} took {elapsed:.1f}s, budget {budget_seconds}s"


def ab_spec(n=500, log_sd=1.0, seed=42) -> SynthSpec:
    return SynthSpec(
        countries=(
            CountryProfile("AA", n, 1.8, log_sd),
            CountryProfile("BB", n, 1.2, log_sd),
        ),
        seed=seed,
    )


def test_criterion_1_toy_example_fidelity():
    with criterion(1, "toy-example fidelity (exact)", 1.0):
        sl = parse_corpus(TOY_CSV).slices[0]
        countries = CountrySet(("A", "B"))
        mean_a = arith_indicator(sl, "A", countries, normalised=False).estimate
        mean_b = arith_indicator(sl, "B", countries, normalised=False).estimate
        assert abs(mean_a - 10.0) < 1e-9
        assert abs(mean_b - 2.0) < 1e-9

        log_design = build_design(sl, countries)
        raw = DesignMatrix(log_design.matrix, sl.citations, log_design.countries)
        fit = ols_fit(raw)
        assert abs(fit.intercept + fit.slopes["A"] - 12.0) < 1e-9
        assert abs(fit.intercept + fit.slopes["B"] - 0.0) < 1e-9


def test_criterion_2_tie_splitting_fidelity():
    with criterion(2, "tie-splitting fidelity (exact)", 1.0):
        # Ten articles, four above the threshold, three tied at it, X=50:
        # each tied article gets exactly 1/3 of a credit.
        citations = np.array([10, 9, 8, 7, 5, 5, 5, 3, 2, 1], dtype=float)
        credits = top_credits(citations, 50.0)
        tied = credits[citations == 5.0]
        assert np.all(np.abs(tied - 1.0 / 3.0) < 1e-12)

        rng = np.random.default_rng(2024)
        world = CountrySet(())
        for _ in range(100):
            n = int(rng.integers(1, 80))
            articles = tuple(
                ArticleRecord(f"a{i}", "S", 2000, int(c), (("W", 1),))
                for i, c in enumerate(rng.integers(0, 4, n))
            )
            sl = SubjectYearSlice("S", 2000, articles)
            x = float(rng.uniform(0.5, 99.5))
            share = top_share(sl, "OTHERS", world, x).estimate
            assert abs(share - x / 100.0) < 1e-9


def test_criterion_3_ci_coverage():
    with criterion(3, "corrected GEO interval coverage in [0.93, 0.97]", 120.0):
        report = coverage_experiment(ab_spec(), trials=500, method="GEO", level=0.95)
        assert report.events == 1000
        assert 0.93 <= report.coverage <= 0.97, f"coverage {report.coverage:.4f}"


def test_criterion_4_precision_ordering():
    with criterion(4, "width ordering GEO < REG_GEO and GEO < ARITH-bootstrap", 300.0):
        spec = ab_spec(seed=7)
        focal = CountrySet(("AA",))  # BB is the regression reference
        trials = 100
        geo_below_reg = geo_below_arith = 0
        for t in range(trials):
            slices, _ = generate_corpus(replace(spec, seed=spec.seed + t))
            sl = slices[0]
            mu_g = math.expm1(float(np.log1p(sl.citations).mean()))
            geo_norm = geo_indicator_ci(sl, "AA", focal, 0.95, "corrected")
            fit = ols_fit(build_design(sl, focal))
            reg_norm = reg_indicator_ci(fit, mu_g, "AA", 0.95, "paper-literal")
            geo_raw = geo_indicator_ci(
                sl, "AA", focal, 0.95, "corrected", normalised=False
            )
            arith_raw = bootstrap_ci(
                sl,
                "AA",
                focal,
                "ARITH",
                BootstrapConfig(999, 0.95, seed=1000 + t),
                normalised=False,
            )
            geo_below_reg += geo_norm.width < reg_norm.width
            geo_below_arith += geo_raw.width < arith_raw.width
        assert geo_below_reg >= 95, f"GEO < REG_GEO in only {geo_below_reg} trials"
        assert geo_below_arith >= 95, f"GEO < ARITH in only {geo_below_arith} trials"


def test_criterion_5_diagnostics_pattern():
    with criterion(5, "raw skewness > 3, log skewness in [-3, 3]", 60.0):
        hits = 0
        for seed in range(100):
            spec = SynthSpec(
                countries=(CountryProfile("AA", 1000, 1.5, 1.3),), seed=seed
            )
            slices, _ = generate_corpus(spec)
            raw = moments(slices[0].citations)
            logm = moments(np.log1p(slices[0].citations))
            hits += raw.skewness > 3.0 and -3.0 <= logm.skewness <= 3.0
        assert hits >= 95, f"pattern held in only {hits}/100 slices"


def test_criterion_6_oracle_equivalence():
    with criterion(6, "OLS and mean oracles agree (1e-9 / 1e-12)", 60.0):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            n = int(rng.integers(5, 16))
            k = int(rng.integers(1, 4))
            shares = rng.dirichlet(np.ones(k + 1), size=n)[:, :k]
            x = np.column_stack([np.ones(n), shares])
            y = rng.uniform(0.0, 4.0, n)
            fit = ols_fit(DesignMatrix(x, y, tuple(f"C{j}" for j in range(k))))
            if fit.rank_deficient:
                continue
            oracle = np.linalg.solve(x.T @ x, x.T @ y)
            fitted = np.array(
                [fit.intercept] + [fit.slopes[f"C{j}"] for j in range(k)]
            )
            assert np.max(np.abs(fitted - oracle)) < 1e-9

        for _ in range(1000):
            n = int(rng.integers(1, 25))
            citations = rng.integers(0, 60, n).tolist()
            weights = rng.uniform(0.01, 1.0, n).tolist()
            total = sum(weights)
            geo_oracle = (
                math.exp(sum(w * math.log1p(c) for c, w in zip(citations, weights)) / total)
                - 1.0
            )
            arith_oracle = sum(c * w for c, w in zip(citations, weights)) / total
            assert geometric_mean(citations, weights) == pytest.approx(
                geo_oracle, rel=1e-12, abs=1e-12
            )
            assert arithmetic_mean(citations, weights) == pytest.approx(
                arith_oracle, rel=1e-12, abs=1e-12
            )


def _tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_criterion_7_determinism(tmp_path):
    with criterion(7, "bit-identical reruns, including parallel execution", 60.0):
        corpus = tmp_path / "corpus.csv"
        corpus.write_text(TOY_CSV, encoding="utf-8")
        out = tmp_path / "out"
        args = [
            "compute", str(corpus),
            "--countries", "A,B",
            "--methods", "GEO,ARITH,TOP_X,REG_GEO",
            "--replicates", "499",
            "--seed", "11",
            "--out", str(out),
        ]
        assert main(args) == 0
        first = _tree_digest(out)
        assert main(args) == 0
        assert _tree_digest(out) == first
        assert main(args + ["--jobs", "4"]) == 0
        second = _tree_digest(out)
        assert {k: v for k, v in second.items() if k != "run_config.json"} == {
            k: v for k, v in first.items() if k != "run_config.json"
        }

        spec_path = tmp_path / "spec.json"
        spec_path.write_text(
            json.dumps(
                {
                    "countries": [
                        {"code": "AA", "articles": 300, "log_mean": 1.5, "log_sd": 1.0,
                         "collab_prob": 0.3},
                        {"code": "BB", "articles": 200, "log_mean": 1.0, "log_sd": 1.0},
                    ],
                    "seed": 5,
                }
            ),
            encoding="utf-8",
        )
        gen1, gen2 = tmp_path / "g1", tmp_path / "g2"
        assert main(["synth", str(spec_path), "--out", str(gen1)]) == 0
        assert main(["synth", str(spec_path), "--out", str(gen2)]) == 0
        assert _tree_digest(gen1) == _tree_digest(gen2)


def test_criterion_8_invariant_suite():
    with criterion(8, "property-based invariant suite (1000 cases each)", 120.0):
        test_properties.test_am_gm_per_country()
        test_properties.test_permutation_invariance()
        test_properties.test_share_splitting_invariance()
        test_properties.test_residual_orthogonality()
        test_properties.test_median_bounds()
