"""Long-format employment tables: ``year,province,cnae,sex,count``.

The table is the single internal representation of employment by
(year, province, division, sex). Wide INE layouts must be flattened by the
caller before ingestion.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Literal, Mapping, NamedTuple

from . import _csvio
from .errors import (
    DuplicateKeyError,
    MalformedRowError,
    NegativeCountError,
    UnknownDivisionError,
    UnknownProvinceError,
)
from .taxonomy import Sex, validate_cnae, validate_province

DEFAULT_SEX_TOLERANCE = 0.005

_COUNT_RE = re.compile(r"^(\d+|\d{1,3}(\.\d{3})+)$")


class Key(NamedTuple):
    year: int
    province: str
    division: str
    sex: Sex


def _key_order(key: Key):
    return (key.year, key.province, key.division, key.sex.sort_key)


@dataclass(frozen=True)
class EmploymentObservation:
    year: int
    province: str
    division: str
    sex: Sex
    count: int

    @property
    def key(self) -> Key:
        return Key(self.year, self.province, self.division, self.sex)


@dataclass(frozen=True)
class ValidationPolicy:
    unknown_division: Literal["reject", "skip"] = "reject"
    sex_tolerance: float = DEFAULT_SEX_TOLERANCE

    def __post_init__(self):
        if self.unknown_division not in ("reject", "skip"):
            raise ValueError(f"unknown_division must be 'reject' or 'skip', not {self.unknown_division!r}")
        if self.sex_tolerance < 0:
            raise ValueError("sex_tolerance must be non-negative")


@dataclass(frozen=True)
class ParseWarning:
    message: str
    line: int | None = None

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}" if self.line is not None else self.message


@dataclass(frozen=True, eq=False)
class EmploymentTable:
    """Immutable mapping of (year, province, division, sex) to head count.

    Observations are stored in canonical key order regardless of input order,
    so two tables built from permuted rows compare (and iterate) identically.
    """

    counts: Mapping[Key, int] = field(default_factory=dict)

    def __post_init__(self):
        normalized = {}
        for raw, count in self.counts.items():
            key = Key(int(raw[0]), raw[1], raw[2], Sex.parse(raw[3]))
            if count < 0:
                raise NegativeCountError(f"negative count {count} for {key}")
            normalized[key] = int(count)
        ordered = {k: normalized[k] for k in sorted(normalized, key=_key_order)}
        object.__setattr__(self, "counts", MappingProxyType(ordered))

    @classmethod
    def from_observations(cls, observations: Iterable[EmploymentObservation]) -> "EmploymentTable":
        counts: dict[Key, int] = {}
        for obs in observations:
            if obs.key in counts:
                raise DuplicateKeyError(f"duplicate observation {obs.key}")
            counts[obs.key] = obs.count
        return cls(counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmploymentTable):
            return NotImplemented
        return list(self.counts.items()) == list(other.counts.items())

    def __len__(self) -> int:
        return len(self.counts)

    def __iter__(self) -> Iterator[EmploymentObservation]:
        for key, count in self.counts.items():
            yield EmploymentObservation(*key, count)

    @property
    def coverage(self) -> frozenset[tuple[int, Sex]]:
        return frozenset((k.year, k.sex) for k in self.counts)

    @property
    def years(self) -> list[int]:
        return sorted({k.year for k in self.counts})

    def select(self, sex: Sex, year: int) -> dict[tuple[str, str], int]:
        """Counts for one (sex, year) keyed by (province, division), ascending."""
        sex = Sex.parse(sex)
        return {(k.province, k.division): c for k, c in self.counts.items() if k.sex is sex and k.year == year}

    def scaled(self, factor: int) -> "EmploymentTable":
        return EmploymentTable({k: c * factor for k, c in self.counts.items()})


def _parse_count(text: str) -> int:
    raw = text.strip()
    if raw.startswith("-") and _COUNT_RE.match(raw[1:]):
        raise NegativeCountError(f"negative count {raw}")
    if not _COUNT_RE.match(raw):
        raise ValueError(f"count {text!r} is not a non-negative integer")
    return int(raw.replace(".", ""))


def parse_employment_csv(
    source, policy: ValidationPolicy | None = None
) -> tuple[EmploymentTable, list[ParseWarning]]:
    """Parse and validate an employment CSV.

    Duplicate keys are always rejected. Unknown divisions are rejected or
    skipped with a warning according to ``policy``. Sex-series additivity
    problems beyond ``policy.sex_tolerance`` produce warnings, not errors.
    """
    policy = policy or ValidationPolicy()
    name = _csvio.source_name(source)
    counts: dict[Key, int] = {}
    first_line: dict[Key, int] = {}
    warnings: list[ParseWarning] = []

    for line, row in _csvio.iter_rows(source, ("year", "province", "cnae", "sex", "count")):
        year_text = row["year"]
        if not year_text.isdigit() or int(year_text) <= 0:
            raise MalformedRowError(f"year {year_text!r} is not a positive integer", line=line, source=name)
        try:
            province = validate_province(row["province"]).code
        except UnknownProvinceError as exc:
            raise UnknownProvinceError(exc.message, line=line, source=name) from None
        try:
            division = validate_cnae(row["cnae"]).code
        except UnknownDivisionError as exc:
            if policy.unknown_division == "skip":
                warnings.append(ParseWarning(f"skipped row: {exc.message}", line))
                continue
            raise UnknownDivisionError(exc.message, line=line, source=name) from None
        try:
            sex = Sex.parse(row["sex"])
        except ValueError as exc:
            raise MalformedRowError(str(exc), line=line, source=name) from None
        try:
            count = _parse_count(row["count"])
        except NegativeCountError as exc:
            raise NegativeCountError(exc.message, line=line, source=name) from None
        except ValueError as exc:
            raise MalformedRowError(str(exc), line=line, source=name) from None

        key = Key(int(year_text), province, division, sex)
        if key in counts:
            raise DuplicateKeyError(
                f"duplicate key {key.year},{key.province},{key.division},{key.sex.value} "
                f"at lines {first_line[key]} and {line}",
                line=line,
                source=name,
            )
        counts[key] = count
        first_line[key] = line

    table = EmploymentTable(counts)
    for row in sex_consistency_report(table, policy.sex_tolerance):
        warnings.append(
            ParseWarning(
                f"sex series not additive for {row.year},{row.province},{row.division}: "
                f"T={row.total} F+M={row.female_plus_male} (relative gap {row.relative_gap:.4f})"
            )
        )
    return table, warnings


def merge_tables(*tables: EmploymentTable) -> EmploymentTable:
    """Union of tables; any key present in more than one input is an error."""
    counts: dict[Key, int] = {}
    for table in tables:
        for key, count in table.counts.items():
            if key in counts:
                raise DuplicateKeyError(f"key {key} present in more than one table")
            counts[key] = count
    return EmploymentTable(counts)


def emit_employment_csv(table: EmploymentTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["year", "province", "cnae", "sex", "count"])
    for key, count in table.counts.items():
        writer.writerow([key.year, key.province, key.division, key.sex.value, count])
    return buf.getvalue()


class ConsistencyRow(NamedTuple):
    year: int
    province: str
    division: str
    total: int
    female_plus_male: int
    relative_gap: float


def sex_consistency_report(table: EmploymentTable, tolerance: float = DEFAULT_SEX_TOLERANCE) -> list[ConsistencyRow]:
    """Keys where |T - (F + M)| / max(T, 1) exceeds ``tolerance``.

    Only keys carrying all three series are checked.
    """
    cells: dict[tuple[int, str, str], dict[Sex, int]] = {}
    for key, count in table.counts.items():
        cells.setdefault((key.year, key.province, key.division), {})[key.sex] = count
    out = []
    for (year, province, division), by_sex in cells.items():
        if len(by_sex) < 3:
            continue
        total = by_sex[Sex.TOTAL]
        fm = by_sex[Sex.FEMALE] + by_sex[Sex.MALE]
        gap = abs(total - fm) / max(total, 1)
        if gap > tolerance:
            out.append(ConsistencyRow(year, province, division, total, fm, gap))
    return out
