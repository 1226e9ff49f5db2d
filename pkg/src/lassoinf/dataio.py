"""CSV ingestion for regression data and the result table written by the
simulation harness."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .linear_model import LinearModelData

__all__ = ["load_csv", "ResultTable"]


def load_csv(
    path,
    response: str,
    drop: Optional[Sequence[str]] = None,
    normalize: bool = False,
    require_extra_row: bool = True,
) -> LinearModelData:
    """Read a headered numeric CSV into a linear model.

    The named response column becomes y; every remaining column (minus any in
    ``drop``) becomes a design column in header order.  ``normalize`` divides
    each design column by its Euclidean norm.  ``require_extra_row`` enforces
    n >= d + 1, which the unknown-variance tests need; pass False when the
    error scale is known.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        rows = list(reader)

    if response not in header:
        raise DataError(f"response column {response!r} not found in {path}")
    drop = set(drop or ())
    missing = drop - set(header)
    if missing:
        raise DataError(f"drop columns not present: {sorted(missing)}")
    keep = [h for h in header if h != response and h not in drop]
    if not keep:
        raise DataError("no predictor columns remain")

    col_of = {h: i for i, h in enumerate(header)}
    n = len(rows)
    y = np.empty(n)
    X = np.empty((n, len(keep)))
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row {r + 2} of {path} has {len(row)} cells, expected {len(header)}")
        for name, target, cidx in [(response, None, col_of[response])] + [
            (h, k, col_of[h]) for k, h in enumerate(keep)
        ]:
            cell = row[cidx].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"non-numeric cell at row {r + 2}, column {name!r}: {cell!r}"
                ) from None
            if target is None:
                y[r] = value
            else:
                X[r, target] = value

    if require_extra_row and n <= len(keep):
        raise DataError(
            f"need more rows than predictors for unknown error scale "
            f"(n={n}, d={len(keep)})"
        )
    if normalize:
        norms = np.linalg.norm(X, axis=0)
        if np.any(norms == 0):
            raise DataError("cannot normalize a zero column")
        X = X / norms
    return LinearModelData(y, X, column_names=tuple(keep))


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass
class ResultTable:
    """Rows of (scenario, method, metric, value, stderr) in insertion order."""

    columns: tuple = ("scenario", "method", "metric", "value", "stderr")
    rows: list = field(default_factory=list)

    def add(self, scenario: str, method: str, metric: str, value: float, stderr: float):
        self.rows.append((scenario, method, metric, float(value), float(stderr)))

    def lookup(self, method: str, metric: str) -> tuple:
        hits = [r for r in self.rows if r[1] == method and r[2] == metric]
        if not hits:
            raise KeyError(f"no row for method={method!r} metric={metric!r}")
        return hits[0][3], hits[0][4]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(x) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text
