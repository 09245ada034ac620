"""Territorial and gender AI-exposure indices from sector employment data."""

from .engine import (
    ExposureRecord,
    GapRecord,
    StabilityRecord,
    compute_exposure,
    exposure_weight,
    gender_gap,
    sector_contributions,
    spearman,
    yoy_delta,
)
from .ingestion import EmploymentTable, ValidationPolicy, emit_employment_csv, parse_employment_csv
from .matrix import IncidenceMatrix, default_matrix, dump_matrix, load_matrix, matrix_diff
from .scenario import ScenarioSpec, apply_scenario, scenario_delta
from .taxonomy import Level, Sex, region_of, validate_cnae

__version__ = "0.1.0"

__all__ = [
    "EmploymentTable",
    "ExposureRecord",
    "GapRecord",
    "IncidenceMatrix",
    "Level",
    "ScenarioSpec",
    "Sex",
    "StabilityRecord",
    "ValidationPolicy",
    "apply_scenario",
    "compute_exposure",
    "default_matrix",
    "dump_matrix",
    "emit_employment_csv",
    "exposure_weight",
    "gender_gap",
    "load_matrix",
    "matrix_diff",
    "parse_employment_csv",
    "region_of",
    "scenario_delta",
    "sector_contributions",
    "spearman",
    "validate_cnae",
    "yoy_delta",
]
