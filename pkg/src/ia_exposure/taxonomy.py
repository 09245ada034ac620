"""Code systems: CNAE-2009 divisions, provinces, autonomous communities, sexes.

Fixture tables live in ``ia_exposure/data`` as UTF-8 CSV and are loaded once.
Names keep the exact spellings used in the published annex tables; all
comparisons are on codes.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Mapping

from .errors import UnknownDivisionError, UnknownProvinceError

NATIONAL = "ES"


def read_data_text(name: str) -> str:
    return resources.files("ia_exposure").joinpath("data").joinpath(name).read_text(encoding="utf-8")


def _read_fixture(name: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(read_data_text(name))))


class Sex(str, enum.Enum):
    TOTAL = "T"
    FEMALE = "F"
    MALE = "M"

    @classmethod
    def parse(cls, value: "str | Sex") -> "Sex":
        if isinstance(value, Sex):
            return value
        try:
            return cls(value.strip().upper())
        except ValueError:
            raise ValueError(f"sex must be one of T, F, M (got {value!r})") from None

    @property
    def sort_key(self) -> int:
        return _SEX_ORDER[self]


_SEX_ORDER = {Sex.TOTAL: 0, Sex.FEMALE: 1, Sex.MALE: 2}


class Level(str, enum.Enum):
    PROVINCE = "province"
    REGION = "region"
    NATIONAL = "national"


@dataclass(frozen=True)
class CnaeDivision:
    code: str
    label: str | None = None


@dataclass(frozen=True)
class Province:
    code: str
    name: str
    region: str


@dataclass(frozen=True)
class Region:
    code: str
    name: str
    member_provinces: frozenset[str]


@lru_cache(maxsize=None)
def cnae_divisions() -> Mapping[str, CnaeDivision]:
    rows = _read_fixture("cnae_divisions.csv")
    return MappingProxyType({r["code"]: CnaeDivision(r["code"], r["label"]) for r in rows})


@lru_cache(maxsize=None)
def provinces() -> Mapping[str, Province]:
    rows = _read_fixture("provinces.csv")
    return MappingProxyType({r["code"]: Province(r["code"], r["name"], r["region"]) for r in rows})


@lru_cache(maxsize=None)
def regions() -> Mapping[str, Region]:
    members: dict[str, set[str]] = {}
    for p in provinces().values():
        members.setdefault(p.region, set()).add(p.code)
    rows = _read_fixture("regions.csv")
    return MappingProxyType(
        {r["code"]: Region(r["code"], r["name"], frozenset(members[r["code"]])) for r in rows}
    )


def _normalize_two_digit(code: str) -> str | None:
    code = str(code).strip()
    if not code.isdigit() or not code.isascii() or len(code) > 2:
        return None
    return code.zfill(2)


def validate_province(code: str) -> Province:
    norm = _normalize_two_digit(code)
    if norm is None or norm not in provinces():
        raise UnknownProvinceError(f"unknown province code {code!r} (expected 01..52)")
    return provinces()[norm]


def validate_cnae(code: str) -> CnaeDivision:
    """Validate a CNAE-2009 division code, zero-padding single digits ("7" -> "07")."""
    raw = str(code).strip()
    if not raw.isdigit() or not raw.isascii():
        raise UnknownDivisionError(f"CNAE division {code!r} is not numeric")
    norm = _normalize_two_digit(raw)
    if norm is None or norm == "00":
        raise UnknownDivisionError(f"CNAE division {code!r} out of range 01..99")
    try:
        return cnae_divisions()[norm]
    except KeyError:
        raise UnknownDivisionError(f"CNAE division {norm!r} does not exist in CNAE-2009") from None


def region_of(province: str) -> Region:
    return regions()[validate_province(province).region]


def territory_name(code: str, level: Level) -> str:
    if level is Level.PROVINCE:
        return provinces()[code].name
    if level is Level.REGION:
        return regions()[code].name
    return "España"
