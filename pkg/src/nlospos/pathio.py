"""Comma-separated path files: one path per row, mandatory header.

Columns: ``gain, aod_az_rad, aod_el_rad, aoa_az_rad, aoa_el_rad, toa_s`` and an
optional trailing ``bounce_count``. Floats are written with ``repr`` so a
write/read cycle reproduces every value exactly.
"""

from __future__ import annotations

import csv
import io
import os
from typing import Sequence

from .errors import ParseError, ValidationError
from .geometry import AnglePair, PathObservation

COLUMNS = ("gain", "aod_az_rad", "aod_el_rad", "aoa_az_rad", "aoa_el_rad", "toa_s")
BOUNCE_COLUMN = "bounce_count"


def format_paths(
    paths: Sequence[PathObservation], bounce_counts: Sequence[int] | None = None
) -> str:
    if bounce_counts is not None and len(bounce_counts) != len(paths):
        raise ValidationError("bounce_counts must align with paths")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS + ((BOUNCE_COLUMN,) if bounce_counts is not None else ()))
    for i, p in enumerate(paths):
        row = [
            repr(p.gain),
            repr(p.aod.azimuth),
            repr(p.aod.elevation),
            repr(p.aoa.azimuth),
            repr(p.aoa.elevation),
            repr(p.toa),
        ]
        if bounce_counts is not None:
            row.append(str(int(bounce_counts[i])))
        writer.writerow(row)
    return buf.getvalue()


def export_paths(
    path: str | os.PathLike,
    paths: Sequence[PathObservation],
    bounce_counts: Sequence[int] | None = None,
) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_paths(paths, bounce_counts))


def parse_paths(text: str) -> tuple[list[PathObservation], list[int] | None]:
    """Parse path-file text; returns observations and bounce counts (None if absent)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty path file", line=1) from None
    has_bounce = header == list(COLUMNS) + [BOUNCE_COLUMN]
    if not has_bounce and header != list(COLUMNS):
        raise ParseError(f"unexpected header {header}; expected {list(COLUMNS)}", line=1)

    width = len(header)
    paths: list[PathObservation] = []
    bounces: list[int] = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, got {len(row)}", line=line)
        try:
            values = [float(cell) for cell in row[:6]]
            if has_bounce:
                bounces.append(int(row[6]))
        except ValueError as exc:
            raise ParseError(str(exc), line=line) from None
        gain, daz, del_, aaz, ael, toa = values
        try:
            paths.append(PathObservation(gain, AnglePair(daz, del_), AnglePair(aaz, ael), toa))
        except ValidationError as exc:
            raise ValidationError(f"row {len(paths) + 1} (line {line}): {exc}") from None
        if has_bounce and bounces[-1] < 0:
            raise ValidationError(f"row {len(paths)} (line {line}): negative bounce_count")
    return paths, (bounces if has_bounce else None)


def import_paths(path: str | os.PathLike) -> tuple[list[PathObservation], list[int] | None]:
    with open(path, newline="") as fh:
        return parse_paths(fh.read())
