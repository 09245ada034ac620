"""Replay of the published annex tables and the quantitative claims built on them.

The six annex tables (52 provinces x {2021, 2022} x {T, F, M}) are bundled
verbatim in ``data/annex_tables.csv``; shares keep their printed digits, so
"0.204" and "0.2040" are distinct fixture strings with equal values.

Prose-versus-data disagreements are reported, never corrected.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, ROUND_HALF_UP, Decimal
from functools import lru_cache
from typing import Any, Iterable, Literal, Sequence

from .engine import ExposureRecord, yoy_delta
from .matrix import IncidenceMatrix, default_matrix
from .taxonomy import Level, Sex, provinces, read_data_text

YEARS = (2021, 2022)
HOLDS = "holds"
HOLDS_WITH_EXCEPTIONS = "holds_with_exceptions"
FAILS = "fails"

BAND_LOW, BAND_HIGH = Decimal("0.18"), Decimal("0.22")
MADRID, MADRID_THRESHOLD = "28", Decimal("0.215")
STABILITY_LIMIT = Decimal("0.002")
GAP_BAND = (Decimal("1.5"), Decimal("3"))
STATED_FACTOR_RANGE = (Decimal("0.06"), Decimal("0.30"))

_ROUNDING = {"half-up": ROUND_HALF_UP, "half-even": ROUND_HALF_EVEN}


@dataclass(frozen=True)
class AnnexRow:
    year: int
    sex: Sex
    province: str
    employment: int
    ia_employment: int
    ia_share_printed: Decimal

    @property
    def printed_digits(self) -> int:
        return -self.ia_share_printed.as_tuple().exponent

    def ratio(self) -> Decimal:
        return Decimal(self.ia_employment) / Decimal(self.employment)


@lru_cache(maxsize=None)
def load_annexes() -> tuple[AnnexRow, ...]:
    rows = []
    for r in csv.DictReader(io.StringIO(read_data_text("annex_tables.csv"))):
        row = AnnexRow(
            int(r["year"]),
            Sex(r["sex"]),
            r["province"],
            int(r["employment"]),
            int(r["ia_employment"]),
            Decimal(r["ia_share"]),
        )
        if row.employment <= 0 or row.ia_employment < 0 or not 0 < row.ia_share_printed < 1:
            raise ValueError(f"corrupt annex fixture row {r}")
        rows.append(row)
    return tuple(rows)


def annex_series(year: int, sex: Sex | str) -> dict[str, AnnexRow]:
    sex = Sex.parse(sex)
    return {r.province: r for r in load_annexes() if r.year == year and r.sex is sex}


def annex_records(
    year: int, sex: Sex | str = Sex.TOTAL, share: Literal["printed", "ratio"] = "printed"
) -> list[ExposureRecord]:
    """Annex rows as province-level ExposureRecords.

    ``share="printed"`` carries the published share column, which is what the
    prose claims refer to; ``"ratio"`` recomputes ia_employment / employment.
    """
    sex = Sex.parse(sex)
    out = []
    for province, row in sorted(annex_series(year, sex).items()):
        value = float(row.ia_share_printed) if share == "printed" else row.ia_employment / row.employment
        out.append(
            ExposureRecord(province, Level.PROVINCE, sex, year, row.employment, float(row.ia_employment), value)
        )
    return out


@dataclass(frozen=True)
class ClaimReport:
    claim_id: str
    status: str
    metric: dict[str, Any]
    exceptions: tuple[tuple[str, str], ...] = field(default_factory=tuple)
    statement: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim_id": self.claim_id,
            "status": self.status,
            "statement": self.statement,
            "metric": _jsonable(self.metric),
            "exceptions": [{"territory": t, "detail": d} for t, d in self.exceptions],
        }


def _jsonable(value):
    if isinstance(value, Decimal):
        return float(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _universal_status(n_exceptions: int, population: int) -> str:
    if n_exceptions == 0:
        return HOLDS
    return HOLDS_WITH_EXCEPTIONS if n_exceptions * 2 <= population else FAILS


def _label(province: str) -> str:
    return f"{province} {provinces()[province].name}"


def round_share(value: Decimal, digits: int, rounding: str = "half-up") -> Decimal:
    return value.quantize(Decimal(1).scaleb(-digits), rounding=_ROUNDING[rounding])


def ratio_mismatches(
    rows: Iterable[AnnexRow], *, precision: Literal["printed", "4dp"] = "printed", rounding: str = "half-up"
) -> list[tuple[AnnexRow, Decimal]]:
    """Rows whose recomputed share disagrees with the printed share.

    ``printed`` rounds the quotient to the number of digits printed for that
    row; ``4dp`` pads the printed share with trailing zeros and compares at
    four places.
    """
    out = []
    for row in rows:
        digits = row.printed_digits if precision == "printed" else 4
        recomputed = round_share(row.ratio(), digits, rounding)
        if recomputed != row.ia_share_printed:
            out.append((row, recomputed))
    return out


def check_ratio_consistency(rounding: str = "half-up") -> ClaimReport:
    rows = load_annexes()
    mismatches = ratio_mismatches(rows, precision="printed", rounding=rounding)
    mismatches_4dp = ratio_mismatches(rows, precision="4dp", rounding=rounding)
    matched = len(rows) - len(mismatches)
    fraction = matched / len(rows)
    exceptions = tuple(
        (
            f"{row.year}/{row.sex.value}/{row.province}",
            f"{row.ia_employment}/{row.employment} = {round_share(row.ratio(), 6)} -> {recomputed}, "
            f"printed {row.ia_share_printed}",
        )
        for row, recomputed in mismatches
    )
    ties = sum(1 for r in rows if (r.ratio() * 10 ** r.printed_digits) % 1 == Decimal("0.5"))
    metric = {
        "rows": len(rows),
        "matched": matched,
        "match_fraction": round(fraction, 6),
        "matched_4dp": len(rows) - len(mismatches_4dp),
        "exact_half_ties": ties,
        "rounding": rounding,
        "required_fraction": 0.98,
    }
    status = HOLDS if not mismatches else (HOLDS_WITH_EXCEPTIONS if fraction >= 0.98 else FAILS)
    return ClaimReport(
        "ratio_consistency",
        status,
        metric,
        exceptions,
        "printed share equals employment-weighted exposure over employment at printed precision",
    )


def check_band_claim() -> ClaimReport:
    metric: dict[str, Any] = {}
    exceptions = []
    for year in YEARS:
        series = annex_series(year, Sex.TOTAL)
        lo = min(series.values(), key=lambda r: (r.ia_share_printed, r.province))
        hi = max(series.values(), key=lambda r: (r.ia_share_printed, r.province))
        metric[str(year)] = {
            "min": lo.ia_share_printed,
            "min_province": lo.province,
            "max": hi.ia_share_printed,
            "max_province": hi.province,
        }
        for province, row in sorted(series.items()):
            if row.ia_share_printed < BAND_LOW:
                exceptions.append((_label(province), f"{year}: {row.ia_share_printed} < {BAND_LOW}"))
            elif row.ia_share_printed > BAND_HIGH:
                exceptions.append((_label(province), f"{year}: {row.ia_share_printed} > {BAND_HIGH}"))
    return ClaimReport(
        "band_18_22",
        _universal_status(len(exceptions), 52 * len(YEARS)),
        metric,
        tuple(exceptions),
        "provincial total shares lie between 18% and 22%",
    )


def check_madrid_claim() -> ClaimReport:
    values = {str(y): annex_series(y, Sex.TOTAL)[MADRID].ia_share_printed for y in YEARS}
    exceptions = tuple(
        (_label(MADRID), f"{y}: {v} <= {MADRID_THRESHOLD}") for y, v in values.items() if v <= MADRID_THRESHOLD
    )
    return ClaimReport(
        "madrid_above_21_5",
        HOLDS if not exceptions else FAILS,
        {"shares": values, "threshold": MADRID_THRESHOLD},
        exceptions,
        "Madrid total share exceeds 21.5% in both years",
    )


def stability_record(sex: Sex = Sex.TOTAL, share: Literal["printed", "ratio"] = "printed"):
    return yoy_delta(annex_records(YEARS[0], sex, share), annex_records(YEARS[1], sex, share))


def check_stability_claims() -> ClaimReport:
    a, b = annex_series(YEARS[0], Sex.TOTAL), annex_series(YEARS[1], Sex.TOTAL)
    exceptions = []
    deltas = {}
    for province in sorted(a):
        delta = b[province].ia_share_printed - a[province].ia_share_printed
        deltas[province] = delta
        if abs(delta) > STABILITY_LIMIT:
            exceptions.append(
                (
                    _label(province),
                    f"{a[province].ia_share_printed} -> {b[province].ia_share_printed} ({delta:+})",
                )
            )
    within = sum(1 for d in deltas.values() if abs(d) <= STABILITY_LIMIT)
    worst = max(deltas, key=lambda p: (abs(deltas[p]), p))
    record = stability_record()
    metric = {
        "provinces": len(deltas),
        "within_limit": within,
        "limit": STABILITY_LIMIT,
        "max_abs_delta": abs(deltas[worst]),
        "max_abs_delta_province": worst,
        "spearman": record.rank_correlation,
    }
    return ClaimReport(
        "stability_two_tenths",
        _universal_status(len(exceptions), len(deltas)),
        metric,
        tuple(exceptions),
        "year-on-year changes in total share rarely exceed 0.2 points; ranking stable",
    )


def _gaps(year: int) -> dict[str, Decimal]:
    female, male = annex_series(year, Sex.FEMALE), annex_series(year, Sex.MALE)
    # printed shares carry at most 4 places, so gaps are exact at 2
    return {
        p: (100 * (female[p].ia_share_printed - male[p].ia_share_printed)).quantize(Decimal("0.01"))
        for p in sorted(female)
    }


def check_gap_sign_claim() -> ClaimReport:
    metric: dict[str, Any] = {}
    exceptions = []
    for year in YEARS:
        female, male = annex_series(year, Sex.FEMALE), annex_series(year, Sex.MALE)
        satisfied = 0
        for province in sorted(female):
            f, m = female[province].ia_share_printed, male[province].ia_share_printed
            if f > m:
                satisfied += 1
            else:
                exceptions.append((_label(province), f"{year}: female {f} <= male {m}"))
        metric[str(year)] = {"female_above_male": satisfied, "provinces": len(female)}
    return ClaimReport(
        "gap_sign",
        _universal_status(len(exceptions), 52 * len(YEARS)),
        metric,
        tuple(exceptions),
        "no province has a male share above the female share",
    )


def check_gap_magnitude() -> ClaimReport:
    lo, hi = GAP_BAND
    metric: dict[str, Any] = {}
    exceptions = []
    mostly = True
    for year in YEARS:
        gaps = _gaps(year)
        inside = [p for p, g in gaps.items() if lo <= g <= hi]
        fraction = len(inside) / len(gaps)
        mostly = mostly and fraction > 0.5
        first = min(gaps, key=lambda p: (gaps[p], p))
        last = max(gaps, key=lambda p: (gaps[p], p))
        metric[str(year)] = {
            "min_pp": gaps[first],
            "min_province": first,
            "max_pp": gaps[last],
            "max_province": last,
            "median_pp": statistics.median(gaps.values()),
            "within_band": len(inside),
            "fraction_within_band": round(fraction, 6),
        }
        for p, g in gaps.items():
            if not lo <= g <= hi:
                exceptions.append((_label(p), f"{year}: {g:+} pp"))
    return ClaimReport(
        "gap_magnitude",
        HOLDS if mostly else FAILS,
        metric,
        tuple(exceptions),
        "female-male gap mostly between 1.5 and 3 percentage points",
    )


def check_factor_range(matrix: IncidenceMatrix | None = None) -> ClaimReport:
    matrix = matrix or default_matrix()
    lo, hi = STATED_FACTOR_RANGE
    exceptions = tuple(
        (division, f"factor {value} outside [{lo}, {hi}]")
        for division, value in matrix.entries.items()
        if not lo <= value <= hi
    )
    values = list(matrix.entries.values())
    return ClaimReport(
        "factor_range",
        _universal_status(len(exceptions), len(values)),
        {"min": min(values), "max": max(values), "divisions": len(values), "stated_range": [lo, hi]},
        exceptions,
        "incidence factors lie between 0.06 and 0.30",
    )


def run_all(rounding: str = "half-up") -> list[ClaimReport]:
    return [
        check_ratio_consistency(rounding),
        check_band_claim(),
        check_madrid_claim(),
        check_stability_claims(),
        check_gap_sign_claim(),
        check_gap_magnitude(),
        check_factor_range(),
    ]


def render_json(reports: Sequence[ClaimReport], rounding: str = "half-up") -> str:
    payload = {"rounding": rounding, "claims": [r.to_dict() for r in reports]}
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def render_text(reports: Sequence[ClaimReport], rounding: str = "half-up") -> str:
    lines = [f"annex replay (rounding: {rounding})", ""]
    for r in reports:
        lines.append(f"[{r.status}] {r.claim_id}: {r.statement}")
        for key, value in _jsonable(r.metric).items():
            lines.append(f"    {key}: {json.dumps(value, ensure_ascii=False)}")
        for territory, detail in r.exceptions:
            lines.append(f"    ! {territory}: {detail}")
        lines.append("")
    return "\n".join(lines)
