"""Exception types raised across the package.

Every error a user can trigger with bad input derives from ``ValidationError``
so the CLI can map it to exit status 1 in one place.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Bad input data. Carries optional file/line context."""

    def __init__(self, message: str, *, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(self._format())

    def _format(self) -> str:
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        prefix = ":".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


class UnknownProvinceError(ValidationError):
    pass


class UnknownDivisionError(ValidationError):
    pass


class MalformedRowError(ValidationError):
    pass


class DuplicateKeyError(ValidationError):
    pass


class NegativeCountError(ValidationError):
    pass


class FactorRangeError(ValidationError):
    pass


class MissingFactorError(ValidationError):
    """A division in the employment data has no factor in the matrix."""

    def __init__(self, divisions, **kwargs):
        self.divisions = sorted(set(divisions))
        super().__init__(
            "no incidence factor for CNAE division(s): " + ", ".join(self.divisions), **kwargs
        )


class EmptySelectionError(ValidationError):
    pass


class MissingSeriesError(ValidationError):
    pass


class TerritoryMismatchError(ValidationError):
    pass


class BinningError(ValidationError):
    pass


class GeometryKeyMismatchError(ValidationError):
    def __init__(self, codes, **kwargs):
        self.codes = sorted(set(codes))
        super().__init__("records reference codes absent from geometry: " + ",".join(self.codes), **kwargs)
