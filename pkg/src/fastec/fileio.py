"""CSV and JSON persistence.

Numbers are written with 17 significant digits so every double survives a
write/read cycle unchanged.  Model documents carry ``schema_version = 1``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NonFinite
from .factorization import FactorModel
from .solver import FitResult

SCHEMA_VERSION = 1


def fmt(x) -> str:
    """Full-precision text for one cell (integers and strings pass through)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header: Optional[Sequence[str]], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(list(header))
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_matrix(path, A, header: Optional[Sequence[str]] = None, index=None,
                 index_name: str = "") -> None:
    """Write a 2-D array, optionally prefixed by an index column."""
    A = np.atleast_2d(np.asarray(A))
    if index is None:
        write_csv(path, header, A.tolist())
        return
    if header is not None:
        header = [index_name] + list(header)
    write_csv(path, header, ([i] + list(r) for i, r in zip(index, A.tolist())))


def write_records(path, records: Sequence[dict], columns: Sequence[str]) -> None:
    write_csv(path, columns, ([rec[c] for c in columns] for rec in records))


def _parse_float(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InvalidConfig(f"non-numeric value {text!r} at {where}") from None
    if not math.isfinite(v):
        raise NonFinite(f"non-finite value {text!r} at {where}")
    return v


def _read_rows(path) -> list:
    with Path(path).open(newline="", encoding="utf-8-sig") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DimensionMismatch(f"{path}: no data")
    return rows


def read_matrix(path, header: bool = False) -> tuple:
    """Numeric CSV to ``(array, column_names or None)``."""
    rows = _read_rows(path)
    names = [c.strip() for c in rows[0]] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise DimensionMismatch(f"{path}: no data rows")
    width = len(body[0])
    out = np.empty((len(body), width))
    for i, r in enumerate(body):
        if len(r) != width:
            raise DimensionMismatch(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")
        for j, c in enumerate(r):
            out[i, j] = _parse_float(c.strip(), f"{path}:{i + 1}:{j + 1}")
    if names is not None and len(names) != width:
        raise DimensionMismatch(f"{path}: header has {len(names)} names for {width} columns")
    return out, names


def read_labeled(path, header: bool = True) -> tuple:
    """CSV whose first column is a label (date or time).

    Returns ``(labels, values, column_names)``; ``column_names`` is None
    without a header row.
    """
    rows = _read_rows(path)
    names = [c.strip() for c in rows[0][1:]] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise DimensionMismatch(f"{path}: no data rows")
    width = len(body[0])
    if width < 2:
        raise DimensionMismatch(f"{path}: need a label column and at least one value column")
    labels = []
    out = np.empty((len(body), width - 1))
    for i, r in enumerate(body):
        if len(r) != width:
            raise DimensionMismatch(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")
        labels.append(r[0].strip())
        for j, c in enumerate(r[1:]):
            out[i, j] = _parse_float(c.strip(), f"{path}:{i + 1}:{j + 2}")
    return labels, out, names


# -- model documents -------------------------------------------------------

def model_document(result: FitResult, n: int, factor_model: FactorModel, **extra) -> dict:
    p, m = result.gamma_hat.shape
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tau": result.tau,
        "lambda": result.lam,
        "kappa": result.kappa,
        "epsilon": result.epsilon,
        "dims": {"n": int(n), "p": int(p), "m": int(m)},
        "gamma": result.gamma_hat.tolist(),
        "loss_history": result.loss_history.tolist(),
        "iterations": result.iterations,
        "objective": result.objective,
        "termination": result.termination.value,
        "svd": factor_model.to_dict(),
    }
    doc.update(extra)
    return doc


def save_json(path, doc: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_json(path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: invalid JSON ({exc})") from None


def load_model(path) -> dict:
    """Read a model document; ``gamma`` comes back as a p x m array."""
    doc = load_json(path)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InvalidConfig(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    for key in ("tau", "lambda", "dims", "gamma", "svd"):
        if key not in doc:
            raise InvalidConfig(f"{path}: missing field {key!r}")
    dims = doc["dims"]
    gamma = np.asarray(doc["gamma"], dtype=np.float64)
    if gamma.shape != (dims["p"], dims["m"]):
        raise DimensionMismatch(f"{path}: gamma is {gamma.shape}, dims say {(dims['p'], dims['m'])}")
    doc["gamma"] = gamma
    doc["loss_history"] = np.asarray(doc.get("loss_history", []), dtype=np.float64)
    return doc
