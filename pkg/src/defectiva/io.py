"""CSV readers and writers for datasets and curves."""

from __future__ import annotations

import csv
import hashlib
import math
from pathlib import Path

import numpy as np

from .bdgd import Dataset
from .errors import DataError

DATASET_HEADER = ("t1", "delta1", "t2", "delta2")


def _fmt(x) -> str:
    # repr round-trips doubles exactly
    return repr(float(x))


def read_dataset_csv(path) -> Dataset:
    """Read a ``t1,delta1,t2,delta2`` file. Row numbers in errors count data rows from 1."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("file is empty") from None
        if tuple(h.strip() for h in header) != DATASET_HEADER:
            raise DataError(f"header must be {','.join(DATASET_HEADER)}, got {','.join(header)}")
        cols = ([], [], [], [])
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise DataError(f"expected 4 fields, found {len(row)}", row=row_no)
            t1, d1, t2, d2 = (c.strip() for c in row)
            for name, raw in (("t1", t1), ("t2", t2)):
                try:
                    value = float(raw)
                except ValueError:
                    raise DataError(f"{name} is not a decimal number: {raw!r}", row=row_no) from None
                if not math.isfinite(value) or value < 0:
                    raise DataError(f"{name} must be a finite nonnegative time, got {raw}", row=row_no)
            for name, raw in (("delta1", d1), ("delta2", d2)):
                if raw not in ("0", "1"):
                    raise DataError(f"{name} must be 0 or 1, got {raw!r}", row=row_no)
            for name, t, d in (("t1", t1, d1), ("t2", t2, d2)):
                if float(t) == 0 and d == "1":
                    raise DataError(f"observed event with {name} == 0", row=row_no)
            cols[0].append(float(t1))
            cols[1].append(int(d1))
            cols[2].append(float(t2))
            cols[3].append(int(d2))
    if not cols[0]:
        raise DataError("file has no data rows")
    return Dataset(*(np.array(c) for c in cols))


def write_dataset_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_HEADER)
        for t1, d1, t2, d2 in zip(data.t1, data.delta1, data.t2, data.delta2):
            w.writerow((_fmt(t1), int(d1), _fmt(t2), int(d2)))


def write_columns_csv(path, header, *columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
