"""CSV rows for simulator runs: quantity, value, stderr (or "exact"), N, M, seed, wall_time."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

HEADER = ("quantity", "value", "stderr", "N", "M", "seed", "wall_time")


@dataclass(frozen=True)
class Row:
    quantity: str
    value: float
    stderr: float | str  # "exact" for values that carry no sampling error
    N: int | str
    M: int | str
    seed: int
    wall_time: float

    def cells(self) -> list[str]:
        se = self.stderr if isinstance(self.stderr, str) else _fmt(self.stderr)
        return [self.quantity, _fmt(self.value), se, str(self.N), str(self.M), str(self.seed), f"{self.wall_time:.3f}"]


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def write_csv(rows, fh=None, include_wall_time: bool = True) -> str:
    """Write rows with a header; returns the text when ``fh`` is None."""
    out = fh if fh is not None else io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    header = HEADER if include_wall_time else HEADER[:-1]
    w.writerow(header)
    for r in rows:
        cells = r.cells()
        w.writerow(cells if include_wall_time else cells[:-1])
    return out.getvalue() if fh is None else ""
