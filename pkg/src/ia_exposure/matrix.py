"""Sector incidence matrix: CNAE division -> AI-applicability factor.

Factors are held as ``Decimal`` so values such as 0.145 or 0.305 survive a
load/emit/load cycle exactly. Engine arithmetic converts to float.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from types import MappingProxyType
from typing import Iterable, Mapping

from . import _csvio
from .errors import DuplicateKeyError, FactorRangeError, MalformedRowError, MissingFactorError
from .taxonomy import read_data_text, validate_cnae

MAX_FRACTION_DIGITS = 4
ZERO = Decimal(0)
ONE = Decimal(1)


def parse_factor(text: str) -> Decimal:
    """Parse a factor written with a decimal dot or a decimal comma."""
    raw = text.strip().replace(",", ".")
    try:
        value = Decimal(raw)
    except InvalidOperation:
        raise ValueError(f"factor {text!r} is not a number") from None
    if not value.is_finite():
        raise ValueError(f"factor {text!r} is not finite")
    if -value.as_tuple().exponent > MAX_FRACTION_DIGITS:
        raise ValueError(f"factor {text!r} has more than {MAX_FRACTION_DIGITS} fractional digits")
    return value


def check_factor_range(value: Decimal, *, division: str, line: int | None = None, source=None) -> None:
    if not ZERO <= value <= ONE:
        raise FactorRangeError(
            f"factor {value} for division {division} outside [0, 1]", line=line, source=source
        )


@dataclass(frozen=True)
class IncidenceMatrix:
    entries: Mapping[str, Decimal]
    source_id: str = "<memory>"
    labels: Mapping[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        checked = {}
        for code in sorted(self.entries):
            division = validate_cnae(code).code
            if division in checked:
                raise DuplicateKeyError(f"duplicate division {division}")
            value = Decimal(self.entries[code])
            check_factor_range(value, division=division)
            checked[division] = value
        object.__setattr__(self, "entries", MappingProxyType(checked))
        object.__setattr__(self, "labels", MappingProxyType(dict(self.labels)))

    def __getitem__(self, division: str) -> Decimal:
        return self.factor(division)

    def __contains__(self, division: object) -> bool:
        return division in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def factor(self, division: str) -> Decimal:
        try:
            return self.entries[division]
        except KeyError:
            raise MissingFactorError([division]) from None

    def float_factors(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.entries.items()}

    def with_entries(self, entries: Mapping[str, Decimal], source_id: str) -> "IncidenceMatrix":
        return IncidenceMatrix(entries, source_id=source_id, labels=self.labels)


def load_matrix(source, *, source_id: str | None = None) -> IncidenceMatrix:
    """Load a ``cnae,factor[,label]`` table.

    Raises MalformedRowError, DuplicateKeyError or FactorRangeError with the
    offending line number.
    """
    name = _csvio.source_name(source)
    entries: dict[str, Decimal] = {}
    labels: dict[str, str] = {}
    first_line: dict[str, int] = {}
    for line, row in _csvio.iter_rows(source, ("cnae", "factor"), ("label",)):
        try:
            division = validate_cnae(row["cnae"]).code
        except ValueError as exc:
            raise MalformedRowError(str(exc), line=line, source=name) from None
        try:
            value = parse_factor(row["factor"])
        except ValueError as exc:
            raise MalformedRowError(str(exc), line=line, source=name) from None
        check_factor_range(value, division=division, line=line, source=name)
        if division in entries:
            raise DuplicateKeyError(
                f"division {division} repeated (first at line {first_line[division]})",
                line=line,
                source=name,
            )
        entries[division] = value
        first_line[division] = line
        if row.get("label"):
            labels[division] = row["label"]
    return IncidenceMatrix(entries, source_id=source_id or name, labels=labels)


def _format_factor(value: Decimal) -> str:
    digits = max(3, -value.as_tuple().exponent)
    return f"{value:.{digits}f}"


def dump_matrix(matrix: IncidenceMatrix, *, labels: bool = True) -> str:
    """Canonical CSV: dot decimal, LF endings, rows in division order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cnae", "factor", "label"] if labels else ["cnae", "factor"])
    for division, value in matrix.entries.items():
        row = [division, _format_factor(value)]
        if labels:
            row.append(matrix.labels.get(division, ""))
        writer.writerow(row)
    return buf.getvalue()


_DEFAULT: IncidenceMatrix | None = None


def default_matrix() -> IncidenceMatrix:
    """The published 88-division matrix (factors 0.060 to 0.305)."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_matrix(
            io.StringIO(read_data_text("incidence_matrix.csv")), source_id="builtin:incidence_matrix"
        )
    return _DEFAULT


@dataclass(frozen=True)
class DiffRow:
    division: str
    factor_a: Decimal | None
    factor_b: Decimal | None

    @property
    def delta(self) -> Decimal | None:
        if self.factor_a is None or self.factor_b is None:
            return None
        return self.factor_b - self.factor_a


def matrix_diff(a: IncidenceMatrix, b: IncidenceMatrix) -> list[DiffRow]:
    """Divisions whose factor differs, or that exist in only one matrix (``None`` side)."""
    rows = []
    for division in sorted(set(a.entries) | set(b.entries)):
        fa, fb = a.entries.get(division), b.entries.get(division)
        if fa is None or fb is None or fa != fb:
            rows.append(DiffRow(division, fa, fb))
    return rows


def factor_range(matrix: IncidenceMatrix, divisions: Iterable[str] | None = None) -> tuple[Decimal, Decimal]:
    values = [matrix.entries[d] for d in (divisions if divisions is not None else matrix.entries)]
    return min(values), max(values)
