"""Exposure-weighted employment and derived indicators.

All sums run over observations in ascending (province, division) order so
results are bit-reproducible for a given table, whatever order the rows were
read in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptySelectionError, MissingFactorError, MissingSeriesError, TerritoryMismatchError
from .ingestion import EmploymentTable
from .matrix import IncidenceMatrix
from .taxonomy import NATIONAL, Level, Sex, provinces


def exposure_weight(count: int, factor: float) -> float:
    """Person-equivalents exposed: ``count * factor``."""
    return count * float(factor)


@dataclass(frozen=True)
class ExposureRecord:
    territory: str
    level: Level
    sex: Sex
    year: int
    employment: int
    ia_employment: float
    # None marks an undefined share (zero employment in the territory).
    ia_share: float | None


@dataclass(frozen=True)
class GapRecord:
    province: str
    year: int
    share_female: float
    share_male: float

    @property
    def gap_pp(self) -> float:
        return 100.0 * (self.share_female - self.share_male)


@dataclass(frozen=True)
class StabilityRecord:
    year_a: int
    year_b: int
    sex: Sex
    deltas: Mapping[str, tuple[float, float, float]]
    max_abs_delta: float
    rank_correlation: float


def _territory_of(province: str, level: Level) -> str:
    if level is Level.PROVINCE:
        return province
    if level is Level.REGION:
        return provinces()[province].region
    return NATIONAL


def _selection(table: EmploymentTable, matrix: IncidenceMatrix, sex: Sex, year: int):
    cells = table.select(sex, year)
    if not cells:
        raise EmptySelectionError(f"no observations for sex={Sex.parse(sex).value} year={year}")
    missing = {division for _, division in cells if division not in matrix.entries}
    if missing:
        raise MissingFactorError(missing)
    return cells


def compute_exposure(
    table: EmploymentTable,
    matrix: IncidenceMatrix,
    level: Level | str = Level.PROVINCE,
    sex: Sex | str = Sex.TOTAL,
    year: int | None = None,
) -> list[ExposureRecord]:
    """One record per territory at ``level`` for a (sex, year) slice.

    ``year`` may be omitted when the table holds a single year.
    """
    level, sex = Level(level), Sex.parse(sex)
    if year is None:
        years = table.years
        if len(years) != 1:
            raise EmptySelectionError(f"year required: table holds years {years}")
        year = years[0]
    cells = _selection(table, matrix, sex, year)
    factors = matrix.float_factors()

    employment: dict[str, int] = {}
    exposed: dict[str, float] = {}
    for (province, division), count in cells.items():
        territory = _territory_of(province, level)
        employment[territory] = employment.get(territory, 0) + count
        exposed[territory] = exposed.get(territory, 0.0) + exposure_weight(count, factors[division])

    records = []
    for territory in sorted(employment):
        emp, ia = employment[territory], exposed[territory]
        records.append(ExposureRecord(territory, level, sex, year, emp, ia, ia / emp if emp > 0 else None))
    return records


def sector_contributions(
    table: EmploymentTable,
    matrix: IncidenceMatrix,
    territory: str,
    level: Level | str = Level.PROVINCE,
    sex: Sex | str = Sex.TOTAL,
    year: int | None = None,
) -> list[tuple[str, int, float, float]]:
    """Per-division (employment, ia_employment, share of territory ia_employment).

    Sorted by descending share, ties by division code.
    """
    level, sex = Level(level), Sex.parse(sex)
    if year is None:
        year = table.years[0] if len(table.years) == 1 else None
        if year is None:
            raise EmptySelectionError("year required for a multi-year table")
    cells = _selection(table, matrix, sex, year)
    factors = matrix.float_factors()
    by_division: dict[str, list] = {}
    for (province, division), count in cells.items():
        if _territory_of(province, level) != territory:
            continue
        acc = by_division.setdefault(division, [0, 0.0])
        acc[0] += count
        acc[1] += exposure_weight(count, factors[division])
    if not by_division:
        raise EmptySelectionError(f"territory {territory!r} has no observations for {sex.value} {year}")
    total = 0.0
    for division in sorted(by_division):
        total += by_division[division][1]
    rows = [
        (division, emp, ia, ia / total if total > 0 else 0.0)
        for division, (emp, ia) in sorted(by_division.items())
    ]
    rows.sort(key=lambda r: (-r[3], r[0]))
    return rows


def gender_gap(table: EmploymentTable, matrix: IncidenceMatrix, year: int) -> list[GapRecord]:
    """Female and male exposure shares per province, for provinces with both series."""
    present = {s for y, s in table.coverage if y == year}
    missing = {Sex.FEMALE, Sex.MALE} - present
    if missing:
        raise MissingSeriesError(
            f"year {year} lacks series: " + ", ".join(sorted(s.value for s in missing))
        )
    female = {r.territory: r for r in compute_exposure(table, matrix, Level.PROVINCE, Sex.FEMALE, year)}
    male = {r.territory: r for r in compute_exposure(table, matrix, Level.PROVINCE, Sex.MALE, year)}
    out = []
    for province in sorted(set(female) & set(male)):
        f, m = female[province].ia_share, male[province].ia_share
        if f is None or m is None:
            continue
        out.append(GapRecord(province, year, f, m))
    return out


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of the ranks they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average-rank ties (Pearson on ranks)."""
    if len(x) != len(y):
        raise ValueError("sequences differ in length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    rx, ry = average_ranks(x), average_ranks(y)
    n = len(rx)
    mx, my = sum(rx) / n, sum(ry) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        return math.nan
    if rx == ry:
        return 1.0
    return sxy / math.sqrt(sxx * syy)


def yoy_delta(records_a: Sequence[ExposureRecord], records_b: Sequence[ExposureRecord]) -> StabilityRecord:
    """Change in share from ``records_a`` to ``records_b`` per territory."""
    a = {r.territory: r for r in records_a}
    b = {r.territory: r for r in records_b}
    if set(a) != set(b):
        only = sorted(set(a) ^ set(b))
        raise TerritoryMismatchError("territories differ between inputs: " + ",".join(only))
    sexes = {r.sex for r in records_a} | {r.sex for r in records_b}
    if len(sexes) != 1:
        raise TerritoryMismatchError("inputs mix sex series: " + ",".join(sorted(s.value for s in sexes)))
    years_a = {r.year for r in records_a}
    years_b = {r.year for r in records_b}
    if len(years_a) != 1 or len(years_b) != 1:
        raise TerritoryMismatchError("each input must cover exactly one year")
    territories = sorted(a)
    undefined = [t for t in territories if a[t].ia_share is None or b[t].ia_share is None]
    if undefined:
        raise TerritoryMismatchError("undefined shares for: " + ",".join(undefined))
    deltas = {t: (a[t].ia_share, b[t].ia_share, b[t].ia_share - a[t].ia_share) for t in territories}
    return StabilityRecord(
        year_a=years_a.pop(),
        year_b=years_b.pop(),
        sex=sexes.pop(),
        deltas=deltas,
        max_abs_delta=max(abs(d[2]) for d in deltas.values()),
        rank_correlation=(
            spearman([a[t].ia_share for t in territories], [b[t].ia_share for t in territories])
            if len(territories) > 1
            else math.nan
        ),
    )
