"""Plot-ready tables from box-model CSV output."""

from __future__ import annotations

import csv
import io
from os import PathLike


def read_output(path: str | PathLike) -> tuple[dict[str, str], list[str], list[list[float]]]:
    """Parse a run CSV: ``(metadata from '#' lines, column names, rows)``."""
    meta: dict[str, str] = {}
    lines = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, value = item.partition("=")
                    meta[key] = value
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[float(v) for v in r] for r in reader if r]
    return meta, header, rows


def _column(header: list[str], species: str) -> int:
    for i, name in enumerate(header):
        if name.rsplit(" [", 1)[0] == species:
            return i
    raise KeyError(f"species {species!r} is not in the output")


def emit_plot_data(inputs, species: list[str]) -> str:
    """Whitespace-separated table for gnuplot and friends.

    ``inputs`` is a list of CSV paths or ``(label, path)`` pairs.  One input
    and one species gives two columns (time, value); anything else gives a
    long table ``label time species value`` keyed by the run label, which
    defaults to the representation stored in the CSV header.
    """
    if not species:
        raise ValueError("no species requested")
    runs = []
    for item in inputs:
        label, path = item if isinstance(item, tuple) else (None, item)
        meta, header, rows = read_output(path)
        cols = [_column(header, s) for s in species]
        runs.append((label or meta.get("representation", str(path)), rows, cols))
    out = io.StringIO()
    if len(runs) == 1 and len(species) == 1:
        _, rows, (c,) = runs[0]
        out.write(f"# time_s {species[0]}\n")
        for r in rows:
            out.write(f"{r[0]:.6g} {r[c]:.10g}\n")
        return out.getvalue()
    out.write("# label time_s species value\n")
    for label, rows, cols in runs:
        for r in rows:
            for s, c in zip(species, cols):
                out.write(f"{label} {r[0]:.6g} {s} {r[c]:.10g}\n")
    return out.getvalue()
