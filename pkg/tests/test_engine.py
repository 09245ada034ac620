from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ia_exposure.engine import (
    ExposureRecord,
    average_ranks,
    compute_exposure,
    exposure_weight,
    gender_gap,
    sector_contributions,
    spearman,
    yoy_delta,
)
from ia_exposure.errors import EmptySelectionError, MissingFactorError, MissingSeriesError, TerritoryMismatchError
from ia_exposure.ingestion import EmploymentTable
from ia_exposure.matrix import IncidenceMatrix, default_matrix
from ia_exposure.taxonomy import Level, Sex

from oracles import brute_exposure
from synth import random_instance


def table(rows):
    return EmploymentTable({(y, p, d, s): c for y, p, d, s, c in rows})


def matrix(**factors):
    return IncidenceMatrix({k.lstrip("d"): Decimal(v) for k, v in factors.items()})


def test_exposure_weight():
    assert exposure_weight(0, 0.305) == 0
    assert exposure_weight(1000, 0.25) == 250


def test_degenerate_single_sector():
    [rec] = compute_exposure(table([(2022, "28", "01", "T", 12345)]), matrix(d01="0.06"), year=2022)
    assert rec.ia_share == pytest.approx(0.06, rel=1e-15)
    assert rec.employment == 12345


def test_symmetric_mean():
    t = table([(2022, "28", "01", "T", 500), (2022, "28", "62", "T", 500)])
    [rec] = compute_exposure(t, matrix(d01="0.10", d62="0.30"), year=2022)
    assert rec.ia_share == pytest.approx(0.20, rel=1e-15)


def test_zero_employment_is_undefined():
    t = table([(2022, "28", "01", "T", 0), (2022, "08", "01", "T", 10)])
    recs = compute_exposure(t, matrix(d01="0.1"), year=2022)
    assert [r.territory for r in recs] == ["08", "28"]
    assert recs[1].ia_share is None and recs[1].employment == 0


def test_missing_factor_names_division():
    t = table([(2022, "28", "77", "T", 1), (2022, "28", "01", "T", 1)])
    with pytest.raises(MissingFactorError) as exc:
        compute_exposure(t, matrix(d01="0.1"), year=2022)
    assert exc.value.divisions == ["77"]


def test_empty_selection():
    t = table([(2022, "28", "01", "T", 1)])
    with pytest.raises(EmptySelectionError):
        compute_exposure(t, matrix(d01="0.1"), sex=Sex.FEMALE, year=2022)
    with pytest.raises(EmptySelectionError):
        compute_exposure(t, matrix(d01="0.1"), year=2021)


def test_levels():
    t = table([
        (2022, "08", "62", "T", 100),
        (2022, "17", "01", "T", 100),
        (2022, "28", "62", "T", 50),
    ])
    m = matrix(d01="0.1", d62="0.3")
    region = compute_exposure(t, m, Level.REGION, year=2022)
    assert [(r.territory, r.employment) for r in region] == [("09", 200), ("13", 50)]
    assert region[0].ia_share == pytest.approx(0.2)
    [nat] = compute_exposure(t, m, Level.NATIONAL, year=2022)
    assert nat.territory == "ES" and nat.ia_employment == pytest.approx(55)


@pytest.mark.parametrize("level", list(Level))
def test_synthetic_matches_brute_force(rng, level):
    for _ in range(50):
        t, m = random_instance(rng, max_provinces=3, max_sectors=5)
        expected = brute_exposure(t, m, level.value, Sex.TOTAL, 2022)
        got = compute_exposure(t, m, level, Sex.TOTAL, 2022)
        assert [r.territory for r in got] == list(expected)
        for r in got:
            emp, ia, share = expected[r.territory]
            assert r.employment == emp
            assert r.ia_employment == pytest.approx(float(ia), rel=1e-12, abs=1e-9)
            if share is None:
                assert r.ia_share is None
            else:
                assert r.ia_share == pytest.approx(float(share), rel=1e-12, abs=1e-15)


def test_contributions_single_sector():
    t = table([(2022, "28", "62", "T", 10)])
    assert sector_contributions(t, matrix(d62="0.3"), "28", year=2022) == [("62", 10, 3.0, 1.0)]


def test_contributions_two_sectors():
    t = table([(2022, "28", "62", "T", 100), (2022, "28", "01", "T", 100)])
    rows = sector_contributions(t, matrix(d01="0.1", d62="0.3"), "28", year=2022)
    assert [r[0] for r in rows] == ["62", "01"]
    assert rows[0][3] == pytest.approx(0.75) and rows[1][3] == pytest.approx(0.25)


def test_contributions_sum_to_one(rng):
    for _ in range(50):
        t, m = random_instance(rng, max_provinces=3, max_sectors=8)
        for rec in compute_exposure(t, m, year=2022):
            rows = sector_contributions(t, m, rec.territory, year=2022)
            if rec.ia_employment > 0:
                assert sum(r[3] for r in rows) == pytest.approx(1, abs=1e-9)
            shares = [r[3] for r in rows]
            assert shares == sorted(shares, reverse=True)


def gender_table(female_counts, male_counts):
    rows = [(2022, p, d, "F", c) for (p, d), c in female_counts.items()]
    rows += [(2022, p, d, "M", c) for (p, d), c in male_counts.items()]
    return table(rows)


def test_gender_gap_identical_tables():
    counts = {("28", "62"): 10, ("28", "01"): 30, ("08", "47"): 7}
    gaps = gender_gap(gender_table(counts, counts), default_matrix(), 2022)
    assert [g.province for g in gaps] == ["08", "28"]
    assert all(g.gap_pp == 0 for g in gaps)


def test_gender_gap_sign():
    t = gender_table({("28", "62"): 10, ("28", "01"): 10}, {("28", "62"): 5, ("28", "01"): 15})
    [g] = gender_gap(t, matrix(d01="0.1", d62="0.3"), 2022)
    assert g.share_female == pytest.approx(0.2) and g.share_male == pytest.approx(0.15)
    assert g.gap_pp == pytest.approx(5.0)


def test_gap_pp_from_published_shares():
    from ia_exposure.engine import GapRecord

    assert GapRecord("28", 2022, 0.2194, 0.2118).gap_pp == pytest.approx(0.76, abs=1e-9)
    las_palmas = GapRecord("35", 2022, 0.2132, 0.2135)
    assert las_palmas.gap_pp == pytest.approx(-0.03, abs=1e-9) and las_palmas.gap_pp < 0


def test_gender_gap_missing_series():
    with pytest.raises(MissingSeriesError):
        gender_gap(table([(2022, "28", "62", "F", 1)]), default_matrix(), 2022)


def rec(territory, year, share, sex=Sex.TOTAL):
    return ExposureRecord(territory, Level.PROVINCE, sex, year, 100, share * 100, share)


def test_yoy_delta_madrid():
    s = yoy_delta([rec("28", 2021, 0.2157), rec("08", 2021, 0.2089)], [rec("28", 2022, 0.2168), rec("08", 2022, 0.2089)])
    assert s.deltas["28"][2] == pytest.approx(0.0011, abs=1e-12)
    assert s.max_abs_delta == pytest.approx(0.0011, abs=1e-12)
    assert s.rank_correlation == 1.0


def test_yoy_identity():
    a = [rec(p, 2021, v) for p, v in [("01", 0.19), ("02", 0.18), ("03", 0.2), ("04", 0.18)]]
    b = [rec(r.territory, 2022, r.ia_share) for r in a]
    s = yoy_delta(a, b)
    assert all(d[2] == 0 for d in s.deltas.values())
    assert s.rank_correlation == 1


def test_yoy_mismatch():
    with pytest.raises(TerritoryMismatchError):
        yoy_delta([rec("28", 2021, 0.2)], [rec("08", 2022, 0.2)])
    with pytest.raises(TerritoryMismatchError):
        yoy_delta([rec("28", 2021, 0.2)], [rec("28", 2022, 0.2, Sex.FEMALE)])


def test_average_ranks_ties():
    assert average_ranks([3.0, 1.0, 3.0, 2.0]) == [3.5, 1.0, 3.5, 2.0]


def test_spearman_against_scipy(rng):
    for _ in range(200):
        n = rng.randint(3, 30)
        x = [rng.choice([0.1, 0.2, 0.3, rng.random()]) for _ in range(n)]
        y = [rng.choice([0.1, 0.2, rng.random()]) for _ in range(n)]
        expected = stats.spearmanr(x, y).statistic
        got = spearman(x, y)
        if expected != expected:
            assert got != got
        else:
            assert got == pytest.approx(expected, abs=1e-12)


def test_spearman_reversed():
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1)


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=40))
def test_average_ranks_sum_and_bounds(values):
    ranks = average_ranks(values)
    n = len(values)
    assert sum(ranks) == pytest.approx(n * (n + 1) / 2)
    assert all(1 <= r <= n for r in ranks)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=2, max_size=40))
def test_spearman_symmetric_and_bounded(pairs):
    x, y = [p[0] for p in pairs], [p[1] for p in pairs]
    rho = spearman(x, y)
    if rho != rho:
        assert len(set(x)) == 1 or len(set(y)) == 1
        return
    assert -1 - 1e-12 <= rho <= 1 + 1e-12
    assert spearman(y, x) == pytest.approx(rho, abs=1e-12)
    # an exact monotone transform leaves ranks untouched
    assert spearman([2 * v for v in x], y) == pytest.approx(rho, abs=1e-12)
