"""Command-line entry point.

Exit status: 0 success, 1 invalid input data, 2 usage error. Data goes to
stdout (or ``--output``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from decimal import Decimal, InvalidOperation
from typing import Sequence

from . import report, verify
from .engine import GapRecord, compute_exposure, gender_gap, sector_contributions, yoy_delta
from .errors import ValidationError
from .ingestion import ValidationPolicy, parse_employment_csv
from .matrix import default_matrix, dump_matrix, load_matrix, matrix_diff
from .scenario import ScenarioSpec, load_overrides, scenario_delta, shift_grid
from .taxonomy import Level, Sex


def _decimal(text: str) -> Decimal:
    try:
        return Decimal(text.replace(",", "."))
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _decimal_list(text: str) -> list[Decimal]:
    return [_decimal(t) for t in text.split(":") if t.strip()]


def _add_data_args(p: argparse.ArgumentParser, *, employment_required: bool = True) -> None:
    p.add_argument("--employment", required=employment_required, metavar="CSV",
                   help="long-format employment CSV (year,province,cnae,sex,count)")
    p.add_argument("--matrix", metavar="CSV", help="incidence matrix CSV; replaces the built-in matrix")
    p.add_argument("--unknown-division", choices=("reject", "skip"), default="reject",
                   help="rows with unknown CNAE divisions: fail (default) or skip with a warning")
    p.add_argument("--sex-tolerance", type=float, default=0.005,
                   help="relative T vs F+M tolerance before warning (default 0.005)")


def _add_output_args(p: argparse.ArgumentParser, formats=("csv", "json", "markdown")) -> None:
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--output", "-o", metavar="PATH", help="write here instead of stdout")
    p.add_argument("--precision", type=int, default=4, choices=range(0, 7), metavar="{0..6}",
                   help="fractional digits for shares (default 4)")
    p.add_argument("--locale", choices=("canonical", "es"), default="canonical",
                   help="'es' renders decimal comma, dot thousands, ';' delimiter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ia-exposure", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("compute", help="exposure shares by territory")
    _add_data_args(p)
    p.add_argument("--level", choices=[lv.value for lv in Level], default="province")
    p.add_argument("--sex", choices=[s.value for s in Sex], default="T")
    p.add_argument("--year", type=int, action="append", required=True, help="repeatable")
    p.add_argument("--breakdown", metavar="TERRITORY", help="per-sector contributions for one territory")
    _add_output_args(p)

    p = sub.add_parser("gap", help="female minus male exposure share per province")
    _add_data_args(p)
    p.add_argument("--year", type=int, action="append", required=True, help="repeatable")
    _add_output_args(p)

    p = sub.add_parser("stability", help="year-on-year deltas and Spearman rank correlation")
    _add_data_args(p, employment_required=False)
    p.add_argument("--year-a", type=int, default=2021)
    p.add_argument("--year-b", type=int, default=2022)
    p.add_argument("--level", choices=[lv.value for lv in Level], default="province")
    p.add_argument("--sex", choices=[s.value for s in Sex], default="T")
    p.add_argument("--output", "-o", metavar="PATH")

    p = sub.add_parser("scenario", help="share changes under factor overrides or a uniform shift")
    _add_data_args(p)
    p.add_argument("--overrides", metavar="CSV", help="cnae,factor override file")
    p.add_argument("--shift", type=_decimal, default=Decimal(0), help="uniform shift, clamped to [0,1]")
    p.add_argument("--shift-grid", metavar="S1:S2:...", type=_decimal_list,
                   help="colon-separated uniform shifts; overrides --shift and --overrides "
                        "(write --shift-grid=-0.01:0:0.01 when the first value is negative)")
    p.add_argument("--level", choices=[lv.value for lv in Level], default="province")
    p.add_argument("--sex", choices=[s.value for s in Sex], default="T")
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--output", "-o", metavar="PATH")

    p = sub.add_parser("verify", help="replay the published annex tables and claims")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--rounding", choices=("half-up", "half-even"), default="half-up")
    p.add_argument("--output", "-o", metavar="PATH")

    p = sub.add_parser("render", help="choropleth GeoJSON or SVG")
    _add_data_args(p, employment_required=False)
    p.add_argument("--year", type=int, default=2022)
    p.add_argument("--sex", choices=[s.value for s in Sex], default="T")
    p.add_argument("--gap", action="store_true", help="map female minus male gap (diverging palette)")
    p.add_argument("--geometry", metavar="GEOJSON", help="province boundaries keyed by 2-digit code")
    p.add_argument("--bins", type=int, default=5)
    p.add_argument("--strategy", choices=("quantile", "equal-width"), default="quantile")
    p.add_argument("--format", choices=("geojson", "svg"), default="geojson")
    p.add_argument("--output", "-o", metavar="PATH")

    p = sub.add_parser("inspect-matrix", help="print or diff incidence matrices")
    p.add_argument("--matrix", metavar="CSV", help="matrix to inspect (default: built-in)")
    p.add_argument("--diff", metavar="CSV", help="compare against this matrix")
    p.add_argument("--output", "-o", metavar="PATH")
    return parser


def _write(data: bytes | str, path: str | None) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _row(*cells) -> str:
    return report.TABLE_DELIMITER.join(str(c) for c in cells)


def _load_inputs(args):
    matrix = load_matrix(args.matrix) if args.matrix else default_matrix()
    table = None
    if getattr(args, "employment", None):
        policy = ValidationPolicy(args.unknown_division, args.sex_tolerance)
        table, warns = parse_employment_csv(args.employment, policy)
        for w in warns:
            print(f"warning: {args.employment}: {w}", file=sys.stderr)
    return matrix, table


def _table_spec(args) -> report.TableSpec:
    return report.TableSpec(precision=args.precision, locale=args.locale)


def _cmd_compute(args) -> int:
    matrix, table = _load_inputs(args)
    if args.breakdown:
        lines = [_row("year", "division", "employment", "ia_employment", "share_of_ia_employment")]
        for year in args.year:
            for division, emp, ia, share in sector_contributions(
                table, matrix, args.breakdown, args.level, args.sex, year
            ):
                lines.append(
                    _row(year, division, emp, report.round_half_up(ia, 0), report.round_half_up(share, args.precision))
                )
        _write("\n".join(lines) + "\n", args.output)
        return 0
    records = []
    for year in args.year:
        records.extend(compute_exposure(table, matrix, args.level, args.sex, year))
    _write(report.emit_table(records, _table_spec(args), args.format), args.output)
    return 0


def _cmd_gap(args) -> int:
    matrix, table = _load_inputs(args)
    records = [g for year in args.year for g in gender_gap(table, matrix, year)]
    _write(report.emit_table(records, _table_spec(args), args.format), args.output)
    return 0


def _cmd_stability(args) -> int:
    if args.employment:
        matrix, table = _load_inputs(args)
        a = compute_exposure(table, matrix, args.level, args.sex, args.year_a)
        b = compute_exposure(table, matrix, args.level, args.sex, args.year_b)
    else:
        if args.level != "province":
            raise ValidationError("annex fixtures are province-level; pass --employment for other levels")
        a = verify.annex_records(args.year_a, args.sex)
        b = verify.annex_records(args.year_b, args.sex)
        if not a or not b:
            raise ValidationError(f"annex fixtures cover years {verify.YEARS} only")
    rec = yoy_delta(a, b)
    lines = [
        f"# spearman={rec.rank_correlation!r} max_abs_delta={report.round_half_up(rec.max_abs_delta, 6)}",
        _row("territory", "share_a", "share_b", "delta"),
    ]
    for territory, (sa, sb, d) in rec.deltas.items():
        lines.append(_row(territory, *(report.round_half_up(v, 6) for v in (sa, sb, d))))
    _write("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_scenario(args) -> int:
    matrix, table = _load_inputs(args)
    lines = [_row("shift", "territory", "base_share", "scenario_share", "delta")]

    def fmt(v):
        return "" if v is None else str(report.round_half_up(v, 6))

    if args.shift_grid:
        runs = shift_grid(table, matrix, args.shift_grid, args.level, args.sex, args.year)
    else:
        overrides = load_overrides(args.overrides) if args.overrides else {}
        spec = ScenarioSpec(matrix, overrides, args.shift)
        runs = [(args.shift, scenario_delta(table, spec, args.level, args.sex, args.year))]
    for shift, rows in runs:
        for row in rows:
            lines.append(_row(shift, row.territory, fmt(row.base_share), fmt(row.scenario_share), fmt(row.delta)))
    _write("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_verify(args) -> int:
    reports = verify.run_all(args.rounding)
    render = verify.render_json if args.format == "json" else verify.render_text
    _write(render(reports, args.rounding), args.output)
    return 0


def _cmd_render(args) -> int:
    if args.employment:
        matrix, table = _load_inputs(args)
        records = gender_gap(table, matrix, args.year) if args.gap else compute_exposure(
            table, matrix, Level.PROVINCE, args.sex, args.year
        )
    elif args.gap:
        f = {r.territory: r.ia_share for r in verify.annex_records(args.year, Sex.FEMALE)}
        m = {r.territory: r.ia_share for r in verify.annex_records(args.year, Sex.MALE)}
        records = [GapRecord(p, args.year, f[p], m[p]) for p in sorted(f)]
    else:
        records = verify.annex_records(args.year, args.sex)
    if not records:
        raise ValidationError(f"no records for year {args.year}")
    geometry = report.load_geometry(args.geometry)
    if args.gap:
        spec = report.diverging_spec(records, geometry_source=args.geometry)
    else:
        spec = report.sequential_spec(records, args.bins, args.strategy, geometry_source=args.geometry)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", report.NoDataWarning)
        data = report.emit_choropleth(records, spec, args.format, geometry)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write(data, args.output)
    return 0


def _cmd_inspect_matrix(args) -> int:
    matrix = load_matrix(args.matrix) if args.matrix else default_matrix()
    if not args.diff:
        _write(dump_matrix(matrix), args.output)
        return 0
    other = load_matrix(args.diff)
    lines = [_row("cnae", "factor_a", "factor_b", "delta")]
    for row in matrix_diff(matrix, other):
        cells = ["" if v is None else f"{v:+}" if name == "delta" else str(v)
                 for name, v in (("a", row.factor_a), ("b", row.factor_b), ("delta", row.delta))]
        lines.append(_row(row.division, *cells))
    _write("\n".join(lines) + "\n", args.output)
    return 0


COMMANDS = {
    "compute": _cmd_compute,
    "gap": _cmd_gap,
    "stability": _cmd_stability,
    "scenario": _cmd_scenario,
    "verify": _cmd_verify,
    "render": _cmd_render,
    "inspect-matrix": _cmd_inspect_matrix,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
