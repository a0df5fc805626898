import pytest

from citimpact import ArticleRecord, CountrySet, SubjectYearSlice

# Three-article corpus used throughout: country A writes one solo article
# with 12 citations and shares one 6-citation article 50/50 with country B,
# whose own solo article is uncited.  Fractional means are 10 (A) and 2 (B)
# and the raw-citation regression predicts 12 (A) and 0 (B).


def make_toy_slice() -> SubjectYearSlice:
    return SubjectYearSlice(
        subject="Ecology",
        year=2012,
        articles=(
            ArticleRecord("a1", "Ecology", 2012, 12, (("A", 1),)),
            ArticleRecord("a2", "Ecology", 2012, 6, (("A", 1), ("B", 1))),
            ArticleRecord("a3", "Ecology", 2012, 0, (("B", 1),)),
        ),
    )


@pytest.fixture
def toy_slice() -> SubjectYearSlice:
    return make_toy_slice()


@pytest.fixture
def toy_countries() -> CountrySet:
    return CountrySet(("A", "B"))


@pytest.fixture
def toy_focal_a() -> CountrySet:
    # B plays the OTHERS reference role.
    return CountrySet(("A",))


TOY_CSV = (
    "id,subject,year,citations,affiliations\n"
    'a1,Ecology,2012,12,"A:1"\n'
    'a2,Ecology,2012,6,"A:1;B:1"\n'
    'a3,Ecology,2012,0,"B:1"\n'
)


@pytest.fixture
def toy_csv() -> str:
    return TOY_CSV
