from __future__ import annotations

import csv
import io
import os
from typing import Iterator

from .errors import MalformedRowError


def read_text(source) -> tuple[str, str]:
    """Return (text, display name). ``str`` and ``PathLike`` are file paths."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8-sig", newline="") as fh:
            return fh.read(), os.fspath(source)
    text = source.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8-sig")
    return text.lstrip("﻿"), getattr(source, "name", "<stream>")


def iter_rows(
    source, expected: tuple[str, ...], optional: tuple[str, ...] = ()
) -> Iterator[tuple[int, dict[str, str]]]:
    """Yield (line number, row) pairs after checking the header.

    Semicolon delimiters are detected from the header line. Blank lines are
    skipped. Line numbers are 1-based physical lines of the row start.
    """
    text, name = read_text(source)
    first = text.split("\n", 1)[0]
    delimiter = ";" if ";" in first and "," not in first else ","
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter, strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRowError("empty input, missing header", line=1, source=name) from None
    except csv.Error as exc:
        raise MalformedRowError(str(exc), line=1, source=name) from None
    header = [h.strip().lower() for h in header]
    allowed = list(expected) + list(optional)
    if header[: len(expected)] != list(expected) or any(h not in allowed for h in header):
        raise MalformedRowError(
            f"bad header {','.join(header)!r}; expected {','.join(expected)}"
            + (f"[,{','.join(optional)}]" if optional else ""),
            line=1,
            source=name,
        )
    while True:
        line = reader.line_num + 1
        try:
            fields = next(reader)
        except StopIteration:
            return
        except csv.Error as exc:
            raise MalformedRowError(str(exc), line=line, source=name) from None
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != len(header):
            raise MalformedRowError(
                f"expected {len(header)} fields, got {len(fields)}", line=line, source=name
            )
        yield line, {h: f.strip() for h, f in zip(header, fields)}


def source_name(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return os.fspath(source)
    return getattr(source, "name", "<stream>")
