"""CSV helpers shared by every exporter.

All floating-point values are written with 17 significant digits and a
'.' decimal separator, independent of locale, so repeated runs with the
same inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import os
from typing import Iterable


def format_value(x) -> str:
    """Render one cell; floats keep 17 significant digits."""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path: str, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_value(x) for x in row])
