"""On-disk formats: embeddings CSV, history CSV and canonical JSON."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_embeddings(path, X: np.ndarray) -> None:
    """CSV with header ``node_id,c0,...`` and 17 significant digits per value."""
    X = np.asarray(X, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id"] + [f"c{j}" for j in range(X.shape[1])])
        for i, row in enumerate(X):
            w.writerow([i] + [_fmt(v) for v in row])


def read_embeddings(path) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "node_id":
        raise ValueError(f"{path}: missing node_id header")
    ids = np.array([int(r[0]) for r in body])
    X = np.array([[float(v) for v in r[1:]] for r in body], dtype=float).reshape(len(body), len(header) - 1)
    out = np.empty_like(X)
    out[ids] = X
    return out


def clean(obj):
    """Recursively convert numpy scalars and arrays to JSON types; NaN/inf become None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path, obj) -> None:
    text = json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_history(path, history: list[dict]) -> None:
    cols: list[str] = []
    for row in history:
        cols.extend(k for k in row if k not in cols)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in history:
            vals = []
            for c in cols:
                v = row.get(c)
                if v is None or (isinstance(v, float) and not math.isfinite(v)):
                    vals.append("")
                elif isinstance(v, (int, np.integer)):
                    vals.append(str(int(v)))
                else:
                    vals.append(_fmt(v))
            w.writerow(vals)


def read_history(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({k: (None if v == "" else int(v) if k == "epoch" else float(v)) for k, v in r.items()})
    return out
