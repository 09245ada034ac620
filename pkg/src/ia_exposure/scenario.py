"""What-if analysis over the incidence matrix."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Mapping, NamedTuple

from . import _csvio
from .engine import compute_exposure
from .errors import DuplicateKeyError, MalformedRowError, UnknownDivisionError
from .ingestion import EmploymentTable
from .matrix import ONE, ZERO, IncidenceMatrix, check_factor_range, parse_factor
from .taxonomy import Level, Sex, validate_cnae


@dataclass(frozen=True)
class ScenarioSpec:
    base: IncidenceMatrix
    overrides: Mapping[str, Decimal] = field(default_factory=dict)
    uniform_shift: Decimal = ZERO


def apply_scenario(spec: ScenarioSpec) -> IncidenceMatrix:
    """Shift every factor (clamped to [0, 1]), then apply overrides."""
    shift = Decimal(spec.uniform_shift)
    entries = {d: min(ONE, max(ZERO, f + shift)) for d, f in spec.base.entries.items()}
    for code, value in spec.overrides.items():
        division = validate_cnae(code).code
        if division not in entries:
            raise UnknownDivisionError(f"override for division {division} absent from base matrix")
        value = Decimal(value)
        check_factor_range(value, division=division)
        entries[division] = value
    if not spec.overrides and shift == ZERO:
        return spec.base
    return spec.base.with_entries(entries, source_id=f"{spec.base.source_id}+scenario")


def load_overrides(source) -> dict[str, Decimal]:
    """Read a ``cnae,factor`` override file."""
    name = _csvio.source_name(source)
    out: dict[str, Decimal] = {}
    for line, row in _csvio.iter_rows(source, ("cnae", "factor"), ("label",)):
        try:
            division = validate_cnae(row["cnae"]).code
            value = parse_factor(row["factor"])
        except ValueError as exc:
            raise MalformedRowError(str(exc), line=line, source=name) from None
        check_factor_range(value, division=division, line=line, source=name)
        if division in out:
            raise DuplicateKeyError(f"override for {division} repeated", line=line, source=name)
        out[division] = value
    return out


class ScenarioDelta(NamedTuple):
    territory: str
    base_share: float | None
    scenario_share: float | None
    delta: float | None


def scenario_delta(
    table: EmploymentTable,
    spec: ScenarioSpec,
    level: Level | str = Level.PROVINCE,
    sex: Sex | str = Sex.TOTAL,
    year: int | None = None,
) -> list[ScenarioDelta]:
    """Per-territory share under ``spec.base`` versus the scenario matrix."""
    scenario = apply_scenario(spec)
    base_records = compute_exposure(table, spec.base, level, sex, year)
    new_records = compute_exposure(table, scenario, level, sex, year)
    rows = []
    for old, new in zip(base_records, new_records):
        delta = None
        if old.ia_share is not None and new.ia_share is not None:
            delta = new.ia_share - old.ia_share
        rows.append(ScenarioDelta(old.territory, old.ia_share, new.ia_share, delta))
    return rows


def shift_grid(
    table: EmploymentTable,
    base: IncidenceMatrix,
    shifts: Iterable[Decimal],
    level: Level | str = Level.PROVINCE,
    sex: Sex | str = Sex.TOTAL,
    year: int | None = None,
) -> list[tuple[Decimal, list[ScenarioDelta]]]:
    """Deterministic sweep of uniform shifts."""
    return [
        (Decimal(s), scenario_delta(table, ScenarioSpec(base, uniform_shift=Decimal(s)), level, sex, year))
        for s in shifts
    ]
