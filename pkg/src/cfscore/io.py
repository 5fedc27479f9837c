"""CSV logs and run manifests.

Single-classifier files have the header ``x0,...,x{d-1},r,s`` with an
optional trailing expert column ``e``; paired files have
``x0,...,x{d-1},r_a,s_a,r_b,s_b``. Absent values are empty cells, floats are
written with ``repr`` (shortest round-trip form), files are UTF-8 with LF
line endings.
"""

import csv
import datetime as _dt
import hashlib
import math

import numpy as np

from . import __version__
from .core import ACCURACY_RANGE, EvalDataset, PairedDataset
from .errors import ValidationError

SINGLE_TAILS = (("r", "s"), ("r", "s", "e"))
PAIRED_TAIL = ("r_a", "s_a", "r_b", "s_b")


class SchemaError(ValidationError):
    """A CSV file does not follow the declared schema."""


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def _feature_header(d):
    return [f"x{j}" for j in range(d)]


def _write(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _score_cells(arm):
    return [None if arm.r[i] == 1 else float(arm.s.data[i]) for i in range(arm.n)]


def write_single_csv(path, ds: EvalDataset, expert=None):
    """Write one classifier's log; ``expert`` holds values on abstained rows."""
    header = _feature_header(ds.d) + ["r", "s"] + (["e"] if expert is not None else [])
    scores = _score_cells(ds)
    rows = []
    for i in range(ds.n):
        row = [_fmt(v) for v in ds.x[i]] + [str(int(ds.r[i])), _fmt(scores[i])]
        if expert is not None:
            row.append(_fmt(expert[i]) if ds.r[i] == 1 else "")
        rows.append(row)
    _write(path, header, rows)


def write_paired_csv(path, pds: PairedDataset):
    header = _feature_header(pds.a.d) + list(PAIRED_TAIL)
    sa, sb = _score_cells(pds.a), _score_cells(pds.b)
    rows = [[_fmt(v) for v in pds.x[i]]
            + [str(int(pds.a.r[i])), _fmt(sa[i]), str(int(pds.b.r[i])), _fmt(sb[i])]
            for i in range(pds.n)]
    _write(path, header, rows)


def _split_header(header):
    d = 0
    while d < len(header) and header[d] == f"x{d}":
        d += 1
    if d == 0:
        raise SchemaError("header must start with feature columns x0, x1, ...")
    return d, tuple(header[d:])


def _parse_cell(text, row, col, allow_empty):
    text = text.strip()
    if text == "":
        if allow_empty:
            return math.nan
        raise SchemaError(f"row {row}: column {col!r} is empty")
    try:
        v = float(text)
    except ValueError:
        raise SchemaError(f"row {row}: column {col!r} has non-numeric value {text!r}") from None
    if not math.isfinite(v):
        raise SchemaError(f"row {row}: column {col!r} is not finite")
    return v


def _parse_flag(text, row, col):
    text = text.strip()
    if text not in ("0", "1"):
        raise SchemaError(f"row {row}: column {col!r} must be 0 or 1, got {text!r}")
    return int(text)


def read_table(path):
    """Parse a log file into ``(kind, columns)`` without dataset validation.

    ``kind`` is ``"single"`` or ``"paired"``. Row numbers in error messages
    count data rows from 0.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("file is empty") from None
        d, tail = _split_header(header)
        if tail in SINGLE_TAILS:
            kind = "single"
        elif tail == PAIRED_TAIL:
            kind = "paired"
        else:
            raise SchemaError(f"unrecognized columns after features: {list(tail)}")
        cols = {name: [] for name in header}
        for i, line in enumerate(reader):
            if len(line) != len(header):
                raise SchemaError(f"row {i}: expected {len(header)} cells, got {len(line)}")
            for name, cell in zip(header, line):
                if name.startswith("r"):
                    cols[name].append(_parse_flag(cell, i, name))
                else:
                    cols[name].append(_parse_cell(cell, i, name, allow_empty=not name.startswith("x")))
    if not cols["x0"]:
        raise SchemaError("file has no data rows")
    x = np.column_stack([np.asarray(cols[f"x{j}"]) for j in range(d)])
    out = {"x": x}
    out.update({k: np.asarray(v) for k, v in cols.items() if not k.startswith("x")})
    return kind, out


def read_single_csv(path, score_range=ACCURACY_RANGE):
    """Return ``(EvalDataset, expert or None)``."""
    kind, cols = read_table(path)
    if kind != "single":
        raise SchemaError("expected a single-classifier file with columns r,s")
    expert = cols.get("e")
    if expert is not None:
        clash = (cols["r"] == 0) & ~np.isnan(expert)
        if clash.any():
            raise SchemaError(f"row {int(np.flatnonzero(clash)[0])}: expert value on a non-abstained row")
        hole = (cols["r"] == 1) & np.isnan(expert)
        if hole.any():
            raise SchemaError(f"row {int(np.flatnonzero(hole)[0])}: expert value missing on an abstained row")
    return EvalDataset.from_arrays(cols["x"], cols["r"], cols["s"], score_range), expert


def read_paired_csv(path, score_range=ACCURACY_RANGE):
    kind, cols = read_table(path)
    if kind != "paired":
        raise SchemaError("expected a paired file with columns r_a,s_a,r_b,s_b")
    return PairedDataset.from_arrays(cols["x"], cols["r_a"], cols["s_a"], cols["r_b"], cols["s_b"],
                                     score_range)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def make_manifest(command, config, seed, inputs=()):
    """Provenance record attached to every output."""
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
