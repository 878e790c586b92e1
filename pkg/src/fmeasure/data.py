"""Dataset and prediction file readers.

Dense: CSV with a header row, feature columns, and optionally a final
``label`` column of 0/1.

Sparse multilabel: one instance per line,
``<labels> <i>:<v> <i>:<v> ...`` where ``<labels>`` is a comma-separated
list of label indices or ``-`` for none, and feature indices are 0-based and
strictly ascending.

Predictions: CSV ``index,probability,prediction``.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    pass


_LABELS = re.compile(r"^(-|\d+(,\d+)*)$")
_PAIR = re.compile(r"^\d+:[^:\s]+$")


@dataclass
class DenseData:
    X: np.ndarray
    y: np.ndarray | None
    columns: list[str]


@dataclass
class SparseData:
    X: np.ndarray
    labels: list[frozenset[int]]

    def binary_labels(self, label: int) -> np.ndarray:
        return np.array([int(label in ls) for ls in self.labels], dtype=np.int64)

    def label_ids(self) -> list[int]:
        return sorted(set().union(*self.labels)) if self.labels else []


def _lines(path) -> list[str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return [ln for ln in text.splitlines() if ln.strip()]


def sniff_format(path) -> str:
    lines = _lines(path)
    if not lines:
        raise DataError(f"{path}: file is empty")
    tokens = lines[0].split()
    if tokens and _LABELS.match(tokens[0]) and all(_PAIR.match(t) for t in tokens[1:]):
        return "sparse"
    return "dense"


def _finite(value: str, where: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise DataError(f"{where}: {value!r} is not a number") from None
    if not math.isfinite(v):
        raise DataError(f"{where}: non-finite value {value!r}")
    return v


def read_dense(path, require_label: bool = True) -> DenseData:
    lines = _lines(path)
    if not lines:
        raise DataError(f"{path}: file is empty")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    has_label = bool(header) and header[-1] == "label"
    if require_label and not has_label:
        raise DataError(f"{path}: last header column must be 'label'")
    n_feat = len(header) - int(has_label)
    if n_feat < 1:
        raise DataError(f"{path}: no feature columns")
    X, y = [], []
    for lineno, row in enumerate(reader, 2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        X.append([_finite(v, f"{path}:{lineno}") for v in row[:n_feat]])
        if has_label:
            lab = row[-1].strip()
            if lab not in ("0", "1"):
                raise DataError(f"{path}:{lineno}: label must be 0 or 1, got {lab!r}")
            y.append(int(lab))
    if not X:
        raise DataError(f"{path}: no data rows")
    return DenseData(np.array(X), np.array(y, dtype=np.int64) if has_label else None, header[:n_feat])


def read_sparse(path, dim: int | None = None) -> SparseData:
    rows: list[dict[int, float]] = []
    labels: list[frozenset[int]] = []
    for lineno, line in enumerate(_lines(path), 1):
        where = f"{path}:{lineno}"
        tokens = line.split()
        if not _LABELS.match(tokens[0]):
            raise DataError(f"{where}: bad label field {tokens[0]!r}")
        if tokens[0] == "-":
            ls: list[int] = []
        else:
            ls = [int(t) for t in tokens[0].split(",")]
        if len(set(ls)) != len(ls):
            raise DataError(f"{where}: repeated label index")
        feats: dict[int, float] = {}
        last = -1
        for tok in tokens[1:]:
            idx, sep, val = tok.partition(":")
            if not sep or not idx.isdigit():
                raise DataError(f"{where}: bad feature {tok!r}")
            i = int(idx)
            if i <= last:
                raise DataError(f"{where}: feature indices must be unique and ascending")
            last = i
            feats[i] = _finite(val, where)
        rows.append(feats)
        labels.append(frozenset(ls))
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = max((max(r) + 1 for r in rows if r), default=0)
    if dim is not None:
        if width > dim:
            raise DataError(f"{path}: feature index {width - 1} exceeds dimension {dim}")
        width = dim
    X = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        for j, v in r.items():
            X[i, j] = v
    return SparseData(X, labels)


@dataclass
class Predictions:
    index: np.ndarray
    probability: np.ndarray
    prediction: np.ndarray


def read_predictions(path) -> Predictions:
    lines = _lines(path)
    if not lines:
        raise DataError(f"{path}: file is empty")
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or "prediction" not in reader.fieldnames:
        raise DataError(f"{path}: expected header index,probability,prediction")
    idx, prob, pred = [], [], []
    for lineno, row in enumerate(reader, 2):
        p = row["prediction"].strip()
        if p not in ("0", "1"):
            raise DataError(f"{path}:{lineno}: prediction must be 0 or 1")
        pred.append(int(p))
        idx.append(int(row.get("index") or lineno - 2))
        raw = (row.get("probability") or "").strip()
        prob.append(_finite(raw, f"{path}:{lineno}") if raw else math.nan)
    return Predictions(np.array(idx), np.array(prob), np.array(pred, dtype=np.int64))


def read_label_column(path, columns=("label", "prediction")) -> np.ndarray:
    """0/1 values from the first of ``columns`` present in a CSV header."""
    lines = _lines(path)
    if not lines:
        raise DataError(f"{path}: file is empty")
    reader = csv.DictReader(lines)
    names = [c for c in columns if c in (reader.fieldnames or [])]
    if not names:
        raise DataError(f"{path}: no column named {' or '.join(columns)}")
    out = []
    for lineno, row in enumerate(reader, 2):
        v = (row[names[0]] or "").strip()
        if v not in ("0", "1"):
            raise DataError(f"{path}:{lineno}: {names[0]} must be 0 or 1, got {v!r}")
        out.append(int(v))
    return np.array(out, dtype=np.int64)


def write_predictions(probs, preds, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["index", "probability", "prediction"])
    for i, (p, s) in enumerate(zip(probs, preds)):
        writer.writerow([i, format(float(p), ".17g"), int(s)])
