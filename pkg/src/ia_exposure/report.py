"""Table and choropleth emitters.

Every emitter is a pure function of its inputs and returns bytes; rows are
sorted by territory code and numbers are rounded half-up, so identical inputs
give byte-identical output.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Literal, Sequence
from xml.sax.saxutils import escape

from .engine import ExposureRecord, GapRecord
from .errors import BinningError, GeometryKeyMismatchError, ValidationError
from .taxonomy import Level, provinces, read_data_text, regions

SEQUENTIAL_PALETTE = ("#fff5eb", "#fdd0a2", "#fd8d3c", "#d94801", "#7f2704")
# Negative (male more exposed) in reds, positive (female more exposed) in blues.
DIVERGING_PALETTE = ("#b2182b", "#ef8a62", "#67a9cf", "#2166ac")
NO_DATA_COLOR = "#cccccc"

GAP_PRECISION = 2
# Result tables use ";" in both locales; input CSVs (employment, matrix) use ",".
TABLE_DELIMITER = ";"


class NoDataWarning(UserWarning):
    """Geometry features with no matching record were drawn as no-data."""


@dataclass(frozen=True)
class TableSpec:
    columns: tuple[str, ...] | None = None
    precision: int = 4
    locale: Literal["canonical", "es"] = "canonical"

    def __post_init__(self):
        if not 0 <= self.precision <= 6:
            raise ValueError(f"precision must be in [0, 6], got {self.precision}")
        if self.locale not in ("canonical", "es"):
            raise ValueError(f"locale must be 'canonical' or 'es', got {self.locale!r}")


EXPOSURE_COLUMNS = ("territory", "name", "year", "sex", "employment", "ia_employment", "ia_share")
ANNEX_COLUMNS = ("territory", "employment", "ia_employment", "ia_share")
GAP_COLUMNS = ("province", "name", "year", "share_female", "share_male", "gap_pp")


def round_half_up(value: float, digits: int) -> Decimal:
    # repr gives the shortest round-tripping decimal, so 0.21683 stays 0.21683.
    return Decimal(repr(float(value))).quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_UP)


def _fmt_decimal(value: Decimal, locale: str) -> str:
    text = f"{value:f}"
    return text.replace(".", ",") if locale == "es" else text


def _fmt_int(value: int, locale: str) -> str:
    return f"{value:,}".replace(",", ".") if locale == "es" else str(value)


def _name(code: str, level: Level) -> str:
    if level is Level.PROVINCE:
        return provinces()[code].name
    if level is Level.REGION:
        return regions()[code].name
    return "España"


def _exposure_cells(r: ExposureRecord, spec: TableSpec) -> dict[str, object]:
    share = None if r.ia_share is None else round_half_up(r.ia_share, spec.precision)
    return {
        "territory": r.territory,
        "name": _name(r.territory, r.level),
        "year": r.year,
        "sex": r.sex.value,
        "employment": r.employment,
        "ia_employment": int(round_half_up(r.ia_employment, 0)),
        "ia_share": share,
    }


def _gap_cells(r: GapRecord, spec: TableSpec) -> dict[str, object]:
    return {
        "province": r.province,
        "name": _name(r.province, Level.PROVINCE),
        "year": r.year,
        "share_female": round_half_up(r.share_female, spec.precision),
        "share_male": round_half_up(r.share_male, spec.precision),
        "gap_pp": round_half_up(r.gap_pp, GAP_PRECISION),
    }


def _rows(records, spec: TableSpec) -> tuple[tuple[str, ...], list[dict[str, object]]]:
    if not records:
        raise ValidationError("no records to emit")
    if all(isinstance(r, GapRecord) for r in records):
        cells = [_gap_cells(r, spec) for r in sorted(records, key=lambda r: (r.province, r.year))]
        return spec.columns or GAP_COLUMNS, cells
    ordered = sorted(records, key=lambda r: (r.level.value, r.territory, r.year, r.sex.sort_key))
    return spec.columns or EXPOSURE_COLUMNS, [_exposure_cells(r, spec) for r in ordered]


def _text(value: object, locale: str, column: str = "") -> str:
    if value is None:
        return ""
    if isinstance(value, Decimal):
        return _fmt_decimal(value, locale)
    if isinstance(value, int) and not isinstance(value, bool) and column != "year":
        return _fmt_int(value, locale)
    return str(value)


def emit_table(
    records: Sequence[ExposureRecord] | Sequence[GapRecord],
    spec: TableSpec | None = None,
    fmt: Literal["csv", "json", "markdown"] = "csv",
) -> bytes:
    spec = spec or TableSpec()
    columns, rows = _rows(records, spec)
    unknown = [c for c in columns if c not in rows[0]]
    if unknown:
        raise ValueError(f"unknown columns: {unknown}")

    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=TABLE_DELIMITER, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_text(row[c], spec.locale, c) for c in columns])
        return buf.getvalue().encode("utf-8")

    if fmt == "json":
        def plain(v):
            # Decimal -> JSON number text with exactly the rounded digits.
            return float(v) if isinstance(v, Decimal) else v

        payload = [{c: plain(row[c]) for c in columns} for row in rows]
        return (json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode("utf-8")

    if fmt == "markdown":
        lines = ["| " + " | ".join(columns) + " |", "|" + "|".join("---" for _ in columns) + "|"]
        for row in rows:
            lines.append("| " + " | ".join(_text(row[c], spec.locale, c) for c in columns) + " |")
        return ("\n".join(lines) + "\n").encode("utf-8")

    raise ValueError(f"unknown table format {fmt!r}")


@dataclass(frozen=True)
class ChoroplethSpec:
    bins: tuple[float, ...]
    palette: tuple[str, ...]
    geometry_source: str | None = None
    title: str = ""
    value_label: str = "ia_share"
    precision: int = 4

    def __post_init__(self):
        if len(self.bins) < 2 or any(b >= a for a, b in zip(self.bins[1:], self.bins)):
            raise BinningError("bin edges must be strictly increasing")
        if len(self.palette) != len(self.bins) - 1:
            raise BinningError(f"palette has {len(self.palette)} colors for {len(self.bins) - 1} bins")

    @property
    def n_bins(self) -> int:
        return len(self.bins) - 1

    def bin_index(self, value: float) -> int:
        i = bisect.bisect_right(self.bins, value) - 1
        return min(max(i, 0), self.n_bins - 1)


def _record_values(records) -> dict[str, float]:
    out = {}
    for r in records:
        if isinstance(r, GapRecord):
            out[r.province] = r.gap_pp
        elif r.ia_share is not None:
            out[r.territory] = r.ia_share
    return out


def bin_shares(
    records, n_bins: int = 5, strategy: Literal["equal-width", "quantile"] = "quantile"
) -> tuple[float, ...]:
    """Bin edges spanning [min, max] of the record values.

    ``records`` may be ExposureRecords, GapRecords or plain floats. Quantile
    edges sit midway between the sorted values at the cut positions, so each
    bin receives round(k * n / n_bins) - round((k - 1) * n / n_bins) values.
    """
    values = sorted(records if all(isinstance(v, (int, float)) for v in records) else _record_values(records).values())
    if n_bins < 2:
        raise BinningError("n_bins must be at least 2")
    if not values or values[0] == values[-1]:
        raise BinningError("degenerate range: all values equal")
    lo, hi = values[0], values[-1]
    if strategy == "equal-width":
        width = (hi - lo) / n_bins
        edges = [lo + k * width for k in range(n_bins)] + [hi]
    elif strategy == "quantile":
        n = len(values)
        if n < n_bins:
            raise BinningError(f"{n} values cannot fill {n_bins} quantile bins")
        edges = [lo]
        for k in range(1, n_bins):
            cut = int(Decimal(k * n) / n_bins + Decimal("0.5"))
            cut = min(max(cut, 1), n - 1)
            edges.append((values[cut - 1] + values[cut]) / 2)
        edges.append(hi)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise BinningError("tied values collapse quantile edges; use fewer bins or equal-width")
    return tuple(edges)


def sequential_spec(records, n_bins: int = 5, strategy="quantile", **kwargs) -> ChoroplethSpec:
    edges = bin_shares(records, n_bins, strategy)
    palette = SEQUENTIAL_PALETTE if n_bins == len(SEQUENTIAL_PALETTE) else _ramp(n_bins)
    return ChoroplethSpec(edges, tuple(palette), **kwargs)


def diverging_spec(records, **kwargs) -> ChoroplethSpec:
    """Zero-centred bins for gap maps: two below zero, two above."""
    values = list(_record_values(records).values()) if not all(isinstance(v, (int, float)) for v in records) else list(records)
    bound = max(abs(v) for v in values)
    if bound == 0:
        raise BinningError("degenerate range: all gaps are zero")
    edges = (-bound, -bound / 2, 0.0, bound / 2, bound)
    kwargs.setdefault("value_label", "gap_pp")
    kwargs.setdefault("precision", GAP_PRECISION)
    return ChoroplethSpec(edges, DIVERGING_PALETTE, **kwargs)


def _ramp(n: int) -> list[str]:
    lo, hi = (255, 245, 235), (127, 39, 4)
    out = []
    for i in range(n):
        t = i / (n - 1)
        out.append("#" + "".join(f"{round(a + (b - a) * t):02x}" for a, b in zip(lo, hi)))
    return out


def load_geometry(path: str | None = None) -> dict:
    """GeoJSON FeatureCollection; the bundled 52-square grid when ``path`` is None."""
    if path is None:
        return json.loads(read_data_text("grid_provinces.geojson"))
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _feature_code(feature: dict) -> str:
    props = feature.get("properties") or {}
    code = props.get("code", feature.get("id"))
    if code is None:
        raise ValidationError("geometry feature without 'code' property or id")
    return str(code).zfill(2)


def emit_choropleth(
    records, spec: ChoroplethSpec, fmt: Literal["geojson", "svg"] = "geojson", geometry: dict | None = None
) -> bytes:
    """Map-ready output.

    Records whose code is missing from the geometry raise
    GeometryKeyMismatchError; features without a record are drawn as no-data
    and reported through a NoDataWarning.
    """
    geometry = geometry if geometry is not None else load_geometry(spec.geometry_source)
    values = _record_values(records)
    features = geometry.get("features", [])
    codes = [_feature_code(f) for f in features]
    unmatched = set(values) - set(codes)
    if unmatched:
        raise GeometryKeyMismatchError(unmatched)
    no_data = sorted(set(codes) - set(values))
    if no_data:
        warnings.warn(f"no data for features: {','.join(no_data)}", NoDataWarning, stacklevel=2)
    if fmt == "geojson":
        return _geojson(geometry, features, codes, values, spec)
    if fmt == "svg":
        return _svg(features, codes, values, spec)
    raise ValueError(f"unknown map format {fmt!r}")


def _geojson(geometry, features, codes, values, spec) -> bytes:
    out_features = []
    for feature, code in zip(features, codes):
        props = dict(feature.get("properties") or {})
        if code in values:
            props[spec.value_label] = float(round_half_up(values[code], spec.precision))
            props["bin_index"] = spec.bin_index(values[code])
        else:
            props[spec.value_label] = None
            props["bin_index"] = None
        out = dict(feature)
        out["properties"] = props
        out_features.append(out)
    collection = dict(geometry)
    collection["features"] = out_features
    return (json.dumps(collection, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")


def _rings(geom: dict):
    if geom["type"] == "Polygon":
        yield from geom["coordinates"]
    elif geom["type"] == "MultiPolygon":
        for polygon in geom["coordinates"]:
            yield from polygon
    else:
        raise ValidationError(f"unsupported geometry type {geom['type']!r}")


def _svg(features, codes, values, spec: ChoroplethSpec, width: float = 600.0) -> bytes:
    points = [pt for f in features for ring in _rings(f["geometry"]) for pt in ring]
    xs, ys = [p[0] for p in points], [p[1] for p in points]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    scale = width / ((x1 - x0) or 1)
    height = (y1 - y0) * scale
    legend_h = 22 * spec.n_bins + 30

    def xy(p):
        # Flip y: geographic north up.
        return f"{(p[0] - x0) * scale:.3f},{(y1 - p[1]) * scale:.3f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 200:.0f}" '
        f'height="{max(height, legend_h):.0f}" viewBox="0 0 {width + 200:.3f} {max(height, legend_h):.3f}">',
    ]
    if spec.title:
        out.append(f"<title>{escape(spec.title)}</title>")
    out.append('<g id="features" stroke="#ffffff" stroke-width="0.5">')
    for feature, code in zip(features, codes):
        d = " ".join("M" + " L".join(xy(p) for p in ring) + " Z" for ring in _rings(feature["geometry"]))
        if code in values:
            fill = spec.palette[spec.bin_index(values[code])]
            label = f"{code}: {round_half_up(values[code], spec.precision)}"
        else:
            fill = NO_DATA_COLOR
            label = f"{code}: no data"
        out.append(f'<path id="p{escape(code)}" d="{d}" fill="{fill}"><title>{escape(label)}</title></path>')
    out.append("</g>")
    out.append(f'<g id="legend" transform="translate({width + 20:.0f},10)" font-family="sans-serif" font-size="11">')
    for i, color in enumerate(spec.palette):
        lo = round_half_up(spec.bins[i], spec.precision)
        hi = round_half_up(spec.bins[i + 1], spec.precision)
        out.append(f'<rect x="0" y="{22 * i}" width="16" height="16" fill="{color}"/>')
        out.append(f'<text x="22" y="{22 * i + 12}">{lo} – {hi}</text>')
    n = spec.n_bins
    out.append(f'<rect x="0" y="{22 * n}" width="16" height="16" fill="{NO_DATA_COLOR}"/>')
    out.append(f'<text x="22" y="{22 * n + 12}">no data</text>')
    out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")
