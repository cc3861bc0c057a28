"""Strict readers for the engine's published JSON/CSV files.

Every reader validates the layout it was written against and raises
SchemaError on anything unexpected.  No physics is recomputed here; the
figures only rearrange numbers the engine already published.
"""

from __future__ import annotations

import csv
import json
import math


class SchemaError(ValueError):
    pass


TRACE_HEADER = ["interval", "a", "b", "lambda", "re_det", "im_det", "arg_det_unwrapped"]
HEXAGON_HEADER = ["edge", "param", "re_det", "im_det"]
MANIFEST_HEADER = [
    "trial_id",
    "n",
    "theta",
    "intricate",
    "C",
    "var_det_s",
    "bound_total",
    "residual",
    "status",
]


def _load_json(path: str, expected_kind: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    if data.get("kind") != expected_kind:
        raise SchemaError(f"{path}: kind {data.get('kind')!r}, wanted {expected_kind!r}")
    if data.get("schema_version") != "1":
        raise SchemaError(f"{path}: unsupported schema_version {data.get('schema_version')!r}")
    return data


def read_levinson_json(path: str) -> dict:
    data = _load_json(path, "levinson-report")
    for key in ("params", "var_det_s", "lhs", "residual", "bound_states"):
        if key not in data:
            raise SchemaError(f"{path}: missing {key!r}")
    return data


def read_hexagon_json(path: str) -> dict:
    data = _load_json(path, "hexagon-report")
    for key in ("case", "winding", "winding_nearest_int"):
        if key not in data:
            raise SchemaError(f"{path}: missing {key!r}")
    return data


def _read_rows(path: str, header: list[str]) -> list[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise SchemaError(f"{path}: header {rows[0] if rows else []} != {header}")
    return rows[1:]


def read_trace_csv(path: str) -> list[dict]:
    """Phase traces grouped per inter-threshold interval, in file order."""
    intervals: dict[int, dict] = {}
    for row in _read_rows(path, TRACE_HEADER):
        if len(row) != len(TRACE_HEADER):
            raise SchemaError(f"{path}: ragged row {row}")
        idx = int(row[0])
        item = intervals.setdefault(
            idx,
            {"index": idx, "a": float(row[1]), "b": float(row[2]), "lam": [], "re": [], "im": [], "arg": []},
        )
        item["lam"].append(float(row[3]))
        item["re"].append(float(row[4]))
        item["im"].append(float(row[5]))
        item["arg"].append(float(row[6]))
    if not intervals:
        raise SchemaError(f"{path}: no data rows")
    return [intervals[k] for k in sorted(intervals)]


def read_hexagon_csv(path: str) -> dict[str, dict]:
    """Edge determinant traces keyed by edge name (edge1..edge6)."""
    edges: dict[str, dict] = {}
    for row in _read_rows(path, HEXAGON_HEADER):
        if len(row) != len(HEXAGON_HEADER):
            raise SchemaError(f"{path}: ragged row {row}")
        item = edges.setdefault(row[0], {"param": [], "re": [], "im": []})
        item["param"].append(float(row[1]))
        item["re"].append(float(row[2]))
        item["im"].append(float(row[3]))
    if not edges:
        raise SchemaError(f"{path}: no data rows")
    return edges


def read_manifest_csv(path: str) -> list[dict]:
    """Sweep manifest rows; numeric fields are None when the trial errored."""
    out = []
    for row in _read_rows(path, MANIFEST_HEADER):
        if len(row) != len(MANIFEST_HEADER):
            raise SchemaError(f"{path}: ragged row {row}")
        def opt(text: str) -> float | None:
            return None if text == "" else float(text)
        rec = {
            "trial_id": row[0],
            "n": int(row[1]),
            "theta": float(row[2]),
            "intricate": row[3] == "true",
            "C": None if row[4] == "" else int(row[4]),
            "var_det_s": opt(row[5]),
            "bound_total": None if row[6] == "" else int(row[6]),
            "residual": opt(row[7]),
            "status": row[8],
        }
        if rec["residual"] is not None and not math.isfinite(rec["residual"]):
            raise SchemaError(f"{path}: non-finite residual in {row[0]}")
        out.append(rec)
    if not out:
        raise SchemaError(f"{path}: no data rows")
    return out
