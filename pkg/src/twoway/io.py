"""Readers and writers for matrices, pattern files, partitions and vectors.

Matrix text format: a header line ``m n`` followed by ``m`` lines of ``n``
space-separated numbers written with 17 significant digits, which
round-trips IEEE doubles exactly. Files ending in ``.csv`` are read and
written as headerless RFC 4180 CSV instead.

Pattern files are JSON documents
``{"pattern": [[...]], "row_sizes": [...], "col_sizes": [...]}``.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import DataError
from .model import BlockStructure, PatternMatrix, check_compatible
from .validation import check_matrix


def _fmt(x):
    return format(float(x), ".17g")


def write_matrix(path, M):
    path = Path(path)
    M = check_matrix(M, "matrix")
    if path.suffix.lower() == ".csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            for row in M:
                writer.writerow([_fmt(x) for x in row])
        return
    with path.open("w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(_fmt(x) for x in row))
            fh.write("\n")


def read_matrix(path):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
        try:
            M = np.array([[float(x) for x in row] for row in rows])
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc
        return check_matrix(M, str(path))
    lines = path.read_text().split("\n")
    try:
        m, n = (int(t) for t in lines[0].split())
        body = [line.split() for line in lines[1:] if line.strip()]
        M = np.array([[float(x) for x in row] for row in body], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: malformed matrix file ({exc})") from exc
    if M.shape != (m, n):
        raise DataError(f"{path}: header says {m}x{n} but body is {M.shape}")
    return check_matrix(M, str(path))


def read_pattern(path):
    """Return ``(PatternMatrix, BlockStructure)`` from a JSON pattern file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    return pattern_from_dict(doc)


def pattern_from_dict(doc):
    try:
        P = PatternMatrix(doc["pattern"], check_support=doc.get("check_support", True))
        bs = BlockStructure(tuple(doc["row_sizes"]), tuple(doc["col_sizes"]))
    except KeyError as exc:
        raise DataError(f"pattern document lacks key {exc}") from exc
    check_compatible(P, bs)
    return P, bs


def write_pattern(path, P, bs):
    doc = {"pattern": np.asarray(P).tolist(), **bs.to_dict()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def write_partition(path, labels):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "label"])
        for i, lab in enumerate(labels):
            writer.writerow([i, int(lab)])


def read_partition(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["index", "label"]:
        raise DataError(f"{path}: expected header 'index,label'")
    body = rows[1:]
    idx = [int(r[0]) for r in body]
    if idx != list(range(len(body))):
        raise DataError(f"{path}: indices must run 0..N-1 in order")
    return np.array([int(r[1]) for r in body], dtype=np.intp)


def write_coordinates(path, coords, weights):
    """One row per category: nontrivial coordinates followed by the weight."""
    coords = np.asarray(coords)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index"] + [f"coord_{j + 1}" for j in range(coords.shape[1])] + ["weight"])
        for i, (row, w) in enumerate(zip(coords, weights)):
            writer.writerow([i] + [_fmt(x) for x in row] + [_fmt(w)])


def read_vector(path):
    """Whitespace- or newline-separated numbers."""
    try:
        return np.array([float(t) for t in Path(path).read_text().split()], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_vector(path, values):
    Path(path).write_text("".join(_fmt(v) + "\n" for v in values))


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")
