"""Power-curve tables.

One CSV file per curve with the header::

    n,gamma,smoothed,ci_low,ci_high,rejections,K,errors_excluded

Floats are written in their shortest round-trip form; a missing smoothed
value or interval end is an empty field. Output is byte-stable for equal
curves.
"""

import csv
import io
import os
from pathlib import Path
from typing import Optional, Union

from .exceptions import CurveFormatError
from .models import CurveLabel, PowerCurve, PowerCurvePoint

COLUMNS = ("n", "gamma", "smoothed", "ci_low", "ci_high", "rejections", "K", "errors_excluded")

PathLike = Union[str, os.PathLike]


def _number(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def format_curve_csv(curve: PowerCurve) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    smoothed = curve.smoothed if curve.smoothed is not None else [None] * len(curve.points)
    for point, value in zip(curve.points, smoothed):
        writer.writerow([point.n, _number(point.gamma), _number(value), _number(point.ci_low),
                         _number(point.ci_high), point.rejections, point.trials, point.errors_excluded])
    return buffer.getvalue()


def write_curve_csv(curve: PowerCurve, path: PathLike) -> None:
    """Write ``curve`` as a CSV table."""
    Path(path).write_text(format_curve_csv(curve), encoding="utf-8")


def _optional(value: str) -> Optional[float]:
    return float(value) if value.strip() else None


def parse_curve_csv(text: str, label: CurveLabel) -> PowerCurve:
    """Parse a curve table.

    Raises:
        CurveFormatError: On a wrong header, a malformed row or grid points
            that do not increase.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != COLUMNS:
        raise CurveFormatError(f"curve table header must be {','.join(COLUMNS)}, got {header}")
    points, smoothed = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise CurveFormatError(f"line {lineno}: expected {len(COLUMNS)} fields, got {len(row)}")
        try:
            point = PowerCurvePoint(n=int(row[0]), gamma=float(row[1]), rejections=int(row[5]), trials=int(row[6]),
                                    ci_low=_optional(row[3]), ci_high=_optional(row[4]),
                                    errors_excluded=int(row[7]))
            value = _optional(row[2])
        except ValueError as e:
            raise CurveFormatError(f"line {lineno}: {e}") from e
        if not 0.0 <= point.gamma <= 1.0:
            raise CurveFormatError(f"line {lineno}: gamma {point.gamma} outside [0, 1]")
        if points and point.n <= points[-1].n:
            raise CurveFormatError(f"line {lineno}: n={point.n} does not increase")
        points.append(point)
        smoothed.append(value)
    has_smoothed = bool(smoothed) and all(v is not None for v in smoothed)
    return PowerCurve(label=label, points=points, smoothed=smoothed if has_smoothed else None)


def read_curve_csv(path: PathLike, label: Optional[CurveLabel] = None) -> PowerCurve:
    """Read a curve table; the label defaults to one named after the file stem."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CurveFormatError(f"cannot read curve table {path}: {e.strerror}") from e
    return parse_curve_csv(text, label or CurveLabel(test=path.stem, strategy="", sources=("", "")))
