"""CSV input of curves and deterministic persistence of experiment reports."""
import csv
import math
from pathlib import Path

import numpy as np

from .datagen import CurveBatch
from .errors import CurveFileError


def format_value(v):
    """Text form used in every output file; floats keep 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_curves(path):
    """Read one curve per row from a comma-separated file.

    A first row containing any non-numeric cell is taken as a header.
    Blank lines are skipped.

    Raises
    ------
    CurveFileError
        For missing files, empty input, ragged rows or non-numeric cells
        (the message names the line and column, both 1-based).
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [(i, row) for i, row in enumerate(csv.reader(fh), start=1)
                    if any(c.strip() for c in row)]
    except OSError as exc:
        raise CurveFileError(f"{path}: {exc.strerror or exc}") from exc
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise CurveFileError(f"{path}: no curves found (empty input)")
    width = len(rows[0][1])
    values = np.empty((len(rows), width))
    for k, (line, row) in enumerate(rows):
        if len(row) != width:
            raise CurveFileError(
                f"{path}: line {line} has {len(row)} values, expected {width} (ragged rows)"
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise CurveFileError(
                    f"{path}: line {line}, column {j + 1}: non-numeric value {cell.strip()!r}"
                ) from None
            if not math.isfinite(v):
                raise CurveFileError(f"{path}: line {line}, column {j + 1}: value is not finite")
            values[k, j] = v
    return CurveBatch(values)


def _write_rows(fh, rows, delimiter=","):
    for row in rows:
        fh.write(delimiter.join(format_value(v) for v in row) + "\n")


def write_curves(dest, values, truth=None):
    """Write curves as CSV rows to a path or an open text stream.

    When ``truth`` is given and ``dest`` is a path, it goes to a sibling
    file ``<stem>.truth.csv``. Returns the paths written.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if hasattr(dest, "write"):
        _write_rows(dest, values)
        return []
    dest = Path(dest)
    written = [dest]
    with dest.open("w", encoding="utf-8", newline="\n") as fh:
        _write_rows(fh, values)
    if truth is not None:
        tpath = dest.with_name(dest.stem + ".truth.csv")
        with tpath.open("w", encoding="utf-8", newline="\n") as fh:
            _write_rows(fh, np.atleast_2d(truth))
        written.append(tpath)
    return written


def _write_keyvalues(path, mapping):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for k, v in mapping.items():
            fh.write(f"{k}={format_value(v)}\n")


def write_report(report, out_dir, figures=True):
    """Persist a report as ``report.csv``, ``config.txt``, plot data and figures.

    Files are written in a fixed order with fixed formatting, so an
    identical report produces identical bytes. Runtime is not written.
    Returns the list of paths.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        path = out / "report.csv"
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(report.columns) + "\n")
            _write_rows(fh, ([c[k] for k in report.columns] for c in report.cells))
        written.append(path)
        path = out / "config.txt"
        _write_keyvalues(path, report.config)
        written.append(path)
        if report.diagnostics:
            path = out / "diagnostics.txt"
            _write_keyvalues(path, report.diagnostics)
            written.append(path)
        for name, (columns, rows) in report.plotdata.items():
            path = out / f"plotdata_{name}.tsv"
            with path.open("w", encoding="utf-8", newline="\n") as fh:
                fh.write("\t".join(columns) + "\n")
                _write_rows(fh, rows, "\t")
            written.append(path)
        if figures:
            from .plotting import render_report
            written.extend(render_report(report, out))
    except OSError as exc:
        raise CurveFileError(f"cannot write report to {out}: {exc}") from exc
    return written
