"""Long-form CSV ingestion and the wide-layout converter."""

from __future__ import annotations

import csv
import math
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .._errors import DomainError, InputError
from ..capability import SpecificationLimits
from ..statcore import MeasurementBatch

__all__ = ["HEADER", "Dimension", "ingest", "convert_wide", "load_fixture", "FIXTURE"]

HEADER = ("dim", "nominal", "tol_plus", "tol_minus", "idx", "value")
FIXTURE = "fixture32.csv"

# Row labels of the wide layout (first column); everything else is an index.
_WIDE_LABELS = {"t": "nominal", "nominal": "nominal", "tol+": "tol_plus", "tol_plus": "tol_plus",
                "tol-": "tol_minus", "tol_minus": "tol_minus"}


class Dimension(NamedTuple):
    batch: MeasurementBatch
    spec: SpecificationLimits

    @property
    def dimension_id(self) -> str:
        return self.batch.dimension_id


def _number(text: str, what: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{what} is not a number: {text!r}", line) from None
    if not math.isfinite(v):
        raise InputError(f"{what} must be finite, got {text!r}", line)
    return v


def _read(handle, source: str) -> list[Dimension]:
    reader = csv.reader(handle)
    header = next(reader, None)
    if header is None or not any(c.strip() for c in header):
        raise InputError(f"no records in {source}", 1)
    header = tuple(c.strip().lstrip("﻿") for c in header)
    if header != HEADER:
        raise InputError(f"expected header {','.join(HEADER)}, got {','.join(header)}", 1)

    specs: dict[str, tuple[float, float, float]] = {}
    values: dict[str, dict[int, float]] = {}
    count = 0
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(HEADER):
            raise InputError(f"expected {len(HEADER)} fields, got {len(row)}", line)
        dim = row[0].strip()
        if not dim:
            raise InputError("empty dimension id", line)
        spec = tuple(_number(row[k].strip(), HEADER[k], line) for k in (1, 2, 3))
        idx_f = _number(row[4].strip(), "idx", line)
        if idx_f != int(idx_f) or idx_f < 1:
            raise InputError(f"idx must be a positive integer, got {row[4].strip()!r}", line)
        idx = int(idx_f)
        value = _number(row[5].strip(), "value", line)
        if dim in specs and specs[dim] != spec:
            raise InputError(f"inconsistent nominal/tolerance for dimension {dim}", line)
        specs.setdefault(dim, spec)
        obs = values.setdefault(dim, {})
        if idx in obs:
            raise InputError(f"duplicate idx {idx} for dimension {dim}", line)
        obs[idx] = value
        count += 1
    if count == 0:
        raise InputError(f"no records in {source}", reader.line_num or 1)

    out = []
    for dim in sorted(values):
        obs = values[dim]
        if sorted(obs) != list(range(1, len(obs) + 1)):
            raise InputError(f"observation indices of dimension {dim} are not contiguous from 1")
        nominal, tp, tm = specs[dim]
        try:
            spec = SpecificationLimits(nominal, tp, tm)
            batch = MeasurementBatch(dim, np.array([obs[i] for i in range(1, len(obs) + 1)]))
        except DomainError as exc:
            raise InputError(f"dimension {dim}: {exc}") from None
        out.append(Dimension(batch, spec))
    return out


def ingest(path) -> list[Dimension]:
    """Read a long-form dataset, one :class:`Dimension` per ``dim``, sorted by id.

    Raises
    ------
    InputError
        Malformed rows (with the line number), an empty file, or a
        dimension whose nominal/tolerances change between rows.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        return _read(fh, str(path))


def load_fixture() -> list[Dimension]:
    """The bundled 18-dimension, n = 32 dataset."""
    ref = resources.files("cpkrisk").joinpath("data", FIXTURE)
    with ref.open("r", newline="", encoding="utf-8") as fh:
        return _read(fh, FIXTURE)


def convert_wide(src, dst) -> int:
    """Convert the wide layout (one column per dimension) to long form.

    The wide file has a header ``NO.,D1,D2,...`` followed by rows labelled
    ``T``, ``Tol+``, ``Tol-`` and then numbered observation rows.  Returns
    the number of long records written.
    """
    with Path(src).open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise InputError(f"no records in {src}", 1)
    dims = [c.strip() for c in rows[0][1:]]
    if not dims or any(not d for d in dims):
        raise InputError("wide header needs a label column and dimension ids", 1)
    meta: dict[str, list[str]] = {}
    obs: list[list[str]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(dims) + 1:
            raise InputError(f"expected {len(dims) + 1} fields, got {len(row)}", lineno)
        label = row[0].strip().lower()
        if label in _WIDE_LABELS:
            meta[_WIDE_LABELS[label]] = [c.strip() for c in row[1:]]
        else:
            obs.append([c.strip() for c in row[1:]])
    missing = {"nominal", "tol_plus", "tol_minus"} - meta.keys()
    if missing:
        raise InputError(f"wide layout lacks rows for {sorted(missing)}")
    n_written = 0
    with Path(dst).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for j, dim in enumerate(dims):
            idx = 0
            for row in obs:
                if not row[j]:
                    continue
                idx += 1
                w.writerow([dim, meta["nominal"][j], meta["tol_plus"][j], meta["tol_minus"][j], idx, row[j]])
                n_written += 1
    return n_written
