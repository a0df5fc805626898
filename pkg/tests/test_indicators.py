import math

import numpy as np
import pytest

from citimpact import (
    ArticleRecord,
    BootstrapConfig,
    CountrySet,
    SubjectYearSlice,
    arith_indicator,
    bootstrap_ci,
    geo_indicator,
    geo_indicator_ci,
    top_credits,
    top_share,
    top_share_ci,
)
from citimpact.errors import (
    CIUnavailableError,
    NoArticlesError,
    SmallSampleWarning,
    ZeroDenominatorError,
)

# Direct evaluation of the toy closed forms.
TOY_MU_GA = math.exp((math.log(13.0) + 0.5 * math.log(7.0)) / 1.5) - 1.0
TOY_MU_G = 91.0 ** (1.0 / 3.0) - 1.0


def single_country_slice(code="FR", citations=(0, 2, 5, 9)):
    return SubjectYearSlice(
        "S",
        2000,
        tuple(
            ArticleRecord(f"a{i}", "S", 2000, c, ((code, 1),))
            for i, c in enumerate(citations)
        ),
    )


def two_country_slice(cits_a, cits_b):
    articles = [
        ArticleRecord(f"a{i}", "S", 2000, c, (("A", 1),)) for i, c in enumerate(cits_a)
    ] + [
        ArticleRecord(f"b{i}", "S", 2000, c, (("B", 1),)) for i, c in enumerate(cits_b)
    ]
    return SubjectYearSlice("S", 2000, tuple(articles))


class TestGeoIndicator:
    def test_single_country_is_exactly_one(self):
        sl = single_country_slice()
        result = geo_indicator(sl, "FR", CountrySet(("FR",)))
        assert result.estimate == 1.0
        assert result.n_c == pytest.approx(4.0)

    def test_uncited_country_scores_zero(self):
        sl = two_country_slice([0, 0], [3, 8])
        result = geo_indicator(sl, "A", CountrySet(("A", "B")))
        assert result.estimate == 0.0

    def test_toy_values_match_closed_forms(self, toy_slice, toy_countries):
        # mu_gA = exp((ln 13 + 0.5 ln 7) / 1.5) - 1 and mu_g = 91^(1/3) - 1.
        result = geo_indicator(toy_slice, "A", toy_countries)
        assert result.estimate == pytest.approx(TOY_MU_GA / TOY_MU_G, rel=1e-12)
        assert result.estimate == pytest.approx(2.7376575318455427, rel=1e-12)
        raw = geo_indicator(toy_slice, "A", toy_countries, normalised=False)
        assert raw.estimate == pytest.approx(9.576165743612922, rel=1e-12)

    def test_no_articles(self, toy_slice):
        with pytest.raises(NoArticlesError):
            geo_indicator(toy_slice, "US", CountrySet(("A", "B", "US")))

    def test_zero_world_mean(self):
        sl = two_country_slice([0, 0], [0])
        with pytest.raises(ZeroDenominatorError):
            geo_indicator(sl, "A", CountrySet(("A", "B")))


class TestGeoIndicatorCI:
    def test_equal_log_citations_give_zero_width(self):
        sl = two_country_slice([5, 5, 5], [1, 9, 4])
        countries = CountrySet(("A", "B"))
        interval = geo_indicator_ci(sl, "A", countries, 0.95)
        estimate = geo_indicator(sl, "A", countries).estimate
        assert interval.low == pytest.approx(estimate, rel=1e-12)
        assert interval.width == pytest.approx(0.0, abs=1e-15)

    def test_corrected_interval_is_right_skewed(self):
        sl = two_country_slice([1, 4, 9, 2], [3, 7])
        countries = CountrySet(("A", "B"))
        interval = geo_indicator_ci(sl, "A", countries, 0.95, mode="corrected")
        estimate = geo_indicator(sl, "A", countries).estimate
        assert interval.high - estimate > estimate - interval.low

    def test_paper_literal_is_symmetric_and_unscaled(self):
        sl = two_country_slice([1, 4, 9, 2], [3, 7])
        countries = CountrySet(("A", "B"))
        interval = geo_indicator_ci(sl, "A", countries, 0.95, mode="paper-literal")
        estimate = geo_indicator(sl, "A", countries).estimate
        assert interval.high - estimate == pytest.approx(estimate - interval.low, rel=1e-9)
        # The printed formula carries no critical value, so the level is inert.
        other = geo_indicator_ci(sl, "A", countries, 0.5, mode="paper-literal")
        assert interval == other

    def test_weighted_count_of_one_rejected(self):
        sl = two_country_slice([5], [1, 9])
        with pytest.raises(CIUnavailableError):
            geo_indicator_ci(sl, "A", CountrySet(("A", "B")), 0.95)

    def test_matches_bootstrap_width_for_small_country_share(self):
        from citimpact import CountryProfile, SynthSpec, generate_corpus

        spec = SynthSpec(
            countries=(
                CountryProfile("AA", 500, 1.8, 1.0),
                CountryProfile("BB", 5000, 1.2, 1.0),
            ),
            seed=11,
        )
        slices, _ = generate_corpus(spec)
        countries = CountrySet(("AA", "BB"))
        corrected = geo_indicator_ci(slices[0], "AA", countries, 0.95)
        boot = bootstrap_ci(
            slices[0], "AA", countries, "GEO", BootstrapConfig(999, 0.95, 5)
        )
        assert abs(corrected.width - boot.width) / boot.width < 0.15


class TestArithIndicator:
    def test_toy_values(self, toy_slice, toy_countries):
        # Overall mean is 6; country means are 10 and 2, so A looks five
        # times as productive as B.
        a = arith_indicator(toy_slice, "A", toy_countries)
        b = arith_indicator(toy_slice, "B", toy_countries)
        assert a.estimate == pytest.approx(10.0 / 6.0, rel=1e-12)
        assert b.estimate == pytest.approx(2.0 / 6.0, rel=1e-12)
        assert a.estimate / b.estimate == pytest.approx(5.0, rel=1e-9)
        assert a.n_c == pytest.approx(1.5, abs=1e-12)

    def test_single_country_is_one(self):
        sl = single_country_slice()
        assert arith_indicator(sl, "FR", CountrySet(("FR",))).estimate == 1.0

    def test_uniform_citations_score_one(self):
        sl = two_country_slice([4, 4], [4, 4, 4])
        countries = CountrySet(("A", "B"))
        for country in ("A", "B"):
            assert arith_indicator(sl, country, countries).estimate == pytest.approx(
                1.0, rel=1e-12
            )


class TestTopCredits:
    def test_tied_articles_share_remainder(self):
        # 10 articles, 4 strictly above the threshold, 3 tied at it, X=50:
        # the 3 tied articles split one remaining unit, 1/3 each.
        citations = np.array([10, 9, 8, 7, 5, 5, 5, 3, 2, 1], dtype=float)
        credits = top_credits(citations, 50.0)
        np.testing.assert_allclose(
            credits, [1, 1, 1, 1, 1 / 3, 1 / 3, 1 / 3, 0, 0, 0]
        )

    def test_clean_break_gives_full_credit(self):
        credits = top_credits(np.array([9.0, 7.0, 5.0, 3.0, 1.0]), 40.0)
        np.testing.assert_allclose(credits, [1, 1, 0, 0, 0])

    def test_credits_sum_to_target(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(1, 60))
            citations = rng.integers(0, 6, n).astype(float)
            x = float(rng.uniform(1.0, 99.0))
            assert top_credits(citations, x).sum() == pytest.approx(
                x * n / 100.0, abs=1e-9
            )

    def test_target_below_one_article(self):
        credits = top_credits(np.array([8.0, 5.0, 1.0]), 10.0)
        np.testing.assert_allclose(credits, [0.3, 0.0, 0.0])

    def test_x_out_of_range(self):
        with pytest.raises(ValueError):
            top_credits(np.array([1.0]), 100.0)


class TestTopShare:
    def test_owner_of_top_two_scores_one(self):
        sl = two_country_slice([9, 7], [5, 3, 1])
        countries = CountrySet(("A", "B"))
        assert top_share(sl, "A", countries, 40.0).estimate == pytest.approx(1.0, abs=1e-12)
        assert top_share(sl, "B", countries, 40.0).estimate == pytest.approx(0.0, abs=1e-12)

    def test_complete_tie_gives_x_over_100(self):
        sl = two_country_slice([4, 4, 4], [4, 4])
        countries = CountrySet(("A", "B"))
        for country in ("A", "B"):
            assert top_share(sl, country, countries, 10.0).estimate == pytest.approx(
                0.10, abs=1e-12
            )

    def test_whole_world_share_is_x_over_100(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            sl = single_country_slice("W", tuple(int(c) for c in rng.integers(0, 5, n)))
            x = float(rng.uniform(0.5, 99.5))
            result = top_share(sl, "W", CountrySet(("W",)), x)
            assert result.estimate == pytest.approx(x / 100.0, abs=1e-9)

    def test_params_carry_x(self, toy_slice, toy_countries):
        assert top_share(toy_slice, "A", toy_countries, 25.0).params == {"x": 25.0}


class TestTopShareCI:
    def test_half_at_hundred(self):
        sl = single_country_slice("W", tuple([1] * 4))
        result = top_share(sl, "W", CountrySet(("W",)), 50.0)
        result = result.__class__(
            country="W", method="TOP_X", estimate=0.5, n_c=100.0, params={"x": 50.0}
        )
        interval = top_share_ci(result, 0.95)
        assert interval.low == pytest.approx(0.5 - 0.0979981992270027, rel=1e-9)
        assert interval.high == pytest.approx(0.5 + 0.0979981992270027, rel=1e-9)

    def test_width_shrinks_with_n(self):
        from citimpact.indicators import IndicatorResult

        widths = []
        for n_c in (50.0, 200.0, 1000.0, 10000.0):
            result = IndicatorResult("W", "TOP_X", 0.3, n_c)
            widths.append(top_share_ci(result, 0.95).width)
        assert widths == sorted(widths, reverse=True)

    def test_boundary_estimates_rejected(self):
        from citimpact.indicators import IndicatorResult

        for estimate in (0.0, 1.0):
            with pytest.raises(CIUnavailableError):
                top_share_ci(IndicatorResult("W", "TOP_X", estimate, 100.0), 0.95)

    def test_small_weighted_count_warns(self):
        from citimpact.indicators import IndicatorResult

        with pytest.warns(SmallSampleWarning):
            top_share_ci(IndicatorResult("W", "TOP_X", 0.4, 12.0), 0.95)

    def test_truncated_to_unit_interval(self):
        from citimpact.indicators import IndicatorResult

        interval = top_share_ci(IndicatorResult("W", "TOP_X", 0.95, 35.0), 0.99)
        assert interval.high <= 1.0


class TestBootstrapCI:
    def test_constant_citations_give_zero_width(self):
        sl = two_country_slice([3, 3, 3], [3, 3])
        interval = bootstrap_ci(
            sl, "A", CountrySet(("A", "B")), "GEO", BootstrapConfig(199, 0.95, 1)
        )
        assert interval.width == 0.0
        assert interval.used + interval.skipped == 199

    def test_same_seed_is_bit_identical(self, toy_slice, toy_countries):
        config = BootstrapConfig(499, 0.95, 42)
        first = bootstrap_ci(toy_slice, "A", toy_countries, "ARITH", config)
        second = bootstrap_ci(toy_slice, "A", toy_countries, "ARITH", config)
        assert first == second

    def test_different_seeds_differ(self, toy_slice, toy_countries):
        a = bootstrap_ci(toy_slice, "A", toy_countries, "GEO", BootstrapConfig(499, 0.95, 1))
        b = bootstrap_ci(toy_slice, "A", toy_countries, "GEO", BootstrapConfig(499, 0.95, 2))
        assert a != b

    def test_skipped_replicates_are_counted(self):
        sl = two_country_slice([5], [1, 2])
        interval = bootstrap_ci(
            sl, "A", CountrySet(("A", "B")), "GEO", BootstrapConfig(999, 0.95, 3)
        )
        # The only A article misses a resample with probability (2/3)^3.
        assert interval.skipped > 0
        assert interval.used + interval.skipped == 999

    def test_all_replicates_skipped_raises(self):
        sl = two_country_slice([5], [1])
        for seed in range(200):
            try:
                bootstrap_ci(
                    sl, "A", CountrySet(("A", "B")), "GEO", BootstrapConfig(1, 0.95, seed)
                )
            except CIUnavailableError:
                break
        else:
            pytest.fail("no seed produced an all-skipped bootstrap")

    def test_brackets_point_estimate_on_regular_corpus(self):
        rng = np.random.default_rng(6)
        hits = 0
        runs = 40
        for run in range(runs):
            cits_a = rng.integers(0, 30, 25).tolist()
            cits_b = rng.integers(0, 30, 25).tolist()
            sl = two_country_slice(cits_a, cits_b)
            countries = CountrySet(("A", "B"))
            estimate = geo_indicator(sl, "A", countries).estimate
            interval = bootstrap_ci(
                sl, "A", countries, "GEO", BootstrapConfig(299, 0.95, 100 + run)
            )
            hits += interval.contains(estimate)
        assert hits >= 0.95 * runs

    def test_unknown_statistic_rejected(self, toy_slice, toy_countries):
        with pytest.raises(ValueError):
            bootstrap_ci(toy_slice, "A", toy_countries, "TOP_X", BootstrapConfig(9, 0.95, 0))
