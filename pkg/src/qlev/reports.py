"""Report serialization: JSON with full-precision floats, CSV tables, atomic writes.

Every number is written with 17 significant digits so the files round-trip
losslessly through float64.  Writes go to a temp file in the target directory
followed by an atomic rename; readers validate the schema version before use.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile

import numpy as np

from .model import Model
from .scattering import s_matrix_batch, unitarity_defect_batch
from .winding import LevinsonReport, PhaseTrace

SCHEMA_VERSION = "1"

_FLOAT_SENTINEL = "@f64:"
_SENTINEL_RE = re.compile(r'"@f64:([^"]*)"')


class SchemaError(ValueError):
    """A report file does not match the expected schema."""


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite number in report: {x}")
    out = f"{x:.17g}"
    # keep whole values float-typed through a JSON round trip
    if "." not in out and "e" not in out and "E" not in out:
        out += ".0"
    return out


def _sentinelize(obj):
    """Recursively wrap floats in sentinel strings for post-format."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _FLOAT_SENTINEL + _fmt(float(obj))
    if isinstance(obj, complex):
        raise TypeError("serialize complex values as explicit re/im pairs")
    if isinstance(obj, str):
        if obj.startswith(_FLOAT_SENTINEL):
            raise ValueError("string collides with the float sentinel")
        return obj
    if isinstance(obj, dict):
        return {str(k): _sentinelize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sentinelize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sentinelize(v) for v in obj.tolist()]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    text = json.dumps(_sentinelize(obj), indent=2)
    return _SENTINEL_RE.sub(lambda m: m.group(1), text) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    atomic_write_text(path, dumps_json(obj))


def read_json(path: str, expected_kind: str | None = None) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level is not an object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema_version {data.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION!r}"
        )
    if expected_kind is not None and data.get("kind") != expected_kind:
        raise SchemaError(f"{path}: kind {data.get('kind')!r}, expected {expected_kind!r}")
    return data


def write_csv(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- the counting-identity report ----------------------------------------------


_REQUIRED_REPORT_KEYS = (
    "schema_version",
    "params",
    "intricate",
    "thresholds",
    "var_det_s",
    "correction_C",
    "bound_states",
    "lhs",
    "residual",
)


def levinson_report_dict(report: LevinsonReport) -> dict:
    thresholds = []
    for t in report.thresholds:
        mat = np.asarray(t.matrix)
        entry = {
            "level_k": t.k,
            "side": t.side,
            "energy": t.energy,
            "class": t.classification.value,
            "matrix_re": mat.real,
            "matrix_im": mat.imag,
            "extrap_residual": t.extrap_residual,
        }
        if t.reflection_a is not None:
            entry["reflection_a"] = t.reflection_a
            entry["reflection_b_re"] = t.reflection_b.real
            entry["reflection_b_im"] = t.reflection_b.imag
        thresholds.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "levinson-report",
        "params": {"n": report.n, "theta": report.theta, "v": list(report.v)},
        "intricate": {"flag": report.intricate, "alpha": report.alpha},
        "thresholds": thresholds,
        "var_det_s": report.var_det_s,
        "correction_C": report.correction_c,
        "bound_states": {
            "discrete": [
                {"energy": s.energy, "multiplicity": s.multiplicity}
                for s in report.discrete.states
            ],
            "embedded": [
                {"energy": s.energy, "multiplicity": s.multiplicity}
                for s in report.embedded.states
            ],
            "total": report.bound_total,
            "oracle_total": report.oracle_total,
        },
        "lhs": report.lhs,
        "residual": report.residual,
        "warnings": list(report.warnings),
    }


def validate_levinson_dict(data: dict, path: str = "<memory>") -> dict:
    for key in _REQUIRED_REPORT_KEYS:
        if key not in data:
            raise SchemaError(f"{path}: missing key {key!r}")
    if data.get("kind") not in (None, "levinson-report"):
        raise SchemaError(f"{path}: unexpected kind {data.get('kind')!r}")
    return data


def read_levinson_report(path: str) -> dict:
    return validate_levinson_dict(read_json(path), path)


# -- phase-trace CSV -------------------------------------------------------------

TRACE_HEADER = ["interval", "a", "b", "lambda", "re_det", "im_det", "arg_det_unwrapped"]


def write_trace_csv(path: str, traces: list[PhaseTrace]) -> None:
    rows = []
    for i, tr in enumerate(traces):
        args = tr.unwrapped_args
        for lam, det, arg in zip(tr.lams, tr.dets, args):
            rows.append(
                [
                    str(i),
                    _fmt(tr.a),
                    _fmt(tr.b),
                    _fmt(float(lam)),
                    _fmt(float(det.real)),
                    _fmt(float(det.imag)),
                    _fmt(float(arg)),
                ]
            )
    write_csv(path, TRACE_HEADER, rows)


# -- scattering-grid CSV ----------------------------------------------------------


def scattering_grid(model: Model, points: int = 512):
    """Sample S on a uniform energy grid over the spectral hull, grouped per
    inter-threshold interval.  Returns (lams, dims, mats, defects, args) per
    interval."""
    cuts = [float(c) for c in model.threshold_energies()]
    lo, hi = cuts[0], cuts[-1]
    grid = np.linspace(lo, hi, points + 2)[1:-1]
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a < 1e-12:
            continue
        mid = 0.5 * (a + b)
        js = model.open_channels(mid)
        if not js:
            continue
        sel = grid[(grid > a + 1e-9) & (grid < b - 1e-9)]
        if sel.size == 0:
            sel = np.array([mid])
        mats = s_matrix_batch(model, sel, js)
        defects = unitarity_defect_batch(mats)
        dets = np.linalg.det(mats)
        inc = np.angle(dets[1:] / dets[:-1]) if dets.size > 1 else np.array([])
        args = np.concatenate([[np.angle(dets[0])], np.angle(dets[0]) + np.cumsum(inc)])
        out.append((sel, js, mats, defects, args))
    return out


def write_scattering_csv(path: str, model: Model, points: int = 512) -> float:
    """CSV rows: lambda, dim, re/im of every S entry (row-major, ascending
    channel), arg_det_unwrapped, unitarity.  Columns are padded to the largest
    open-channel count in the file.  Returns the max unitarity defect."""
    blocks = scattering_grid(model, points)
    dmax = max(len(js) for _, js, _, _, _ in blocks)
    header = ["lambda", "dim"]
    for a in range(1, dmax + 1):
        for b in range(1, dmax + 1):
            header += [f"re_s_{a}_{b}", f"im_s_{a}_{b}"]
    header += ["arg_det_unwrapped", "unitarity"]

    rows = []
    worst = 0.0
    for sel, js, mats, defects, args in blocks:
        d = len(js)
        worst = max(worst, float(defects.max()))
        for i, lam in enumerate(sel):
            row = [_fmt(float(lam)), str(d)]
            for a in range(dmax):
                for b in range(dmax):
                    if a < d and b < d:
                        row += [_fmt(float(mats[i, a, b].real)), _fmt(float(mats[i, a, b].imag))]
                    else:
                        row += ["", ""]
            row += [_fmt(float(args[i])), _fmt(float(defects[i]))]
            rows.append(row)
    write_csv(path, header, rows)
    return worst


# -- hexagon outputs ---------------------------------------------------------------

HEXAGON_TRACE_HEADER = ["edge", "param", "re_det", "im_det"]


def write_hexagon_csv(path: str, symbol) -> None:
    rows = []
    for name in type(symbol).ORDER:
        tr = symbol.edges[name]
        for p, det in zip(tr.params, tr.dets):
            p = float(p)
            ptxt = "inf" if math.isinf(p) and p > 0 else ("-inf" if math.isinf(p) else _fmt(p))
            rows.append([name, ptxt, _fmt(float(det.real)), _fmt(float(det.imag))])
    write_csv(path, HEXAGON_TRACE_HEADER, rows)


def hexagon_report_dict(model: Model, winding, constants) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "hexagon-report",
        "params": {
            "n": model.n,
            "theta": model.theta,
            "v": list(model.params.v),
        },
        "intricate": {
            "flag": model.intricate.is_intricate,
            "alpha": model.intricate.alpha,
        },
        "case": winding.case_label,
        "winding": winding.winding,
        "winding_nearest_int": winding.nearest_int,
        "sigma_low": winding.sigma_low,
        "sigma_high": winding.sigma_high,
        "pattern_residual": winding.pattern_residual,
        "det_formula_residual": winding.det_formula_residual,
        "unimodularity_defect": winding.unimodularity_defect,
        "vertex_gap": winding.vertex_gap,
        "constants": {
            "s_low_m4_re": constants.s_low_m4.real,
            "s_low_m4_im": constants.s_low_m4.imag,
            "s_low_0_re": constants.s_low_0.real,
            "s_low_0_im": constants.s_low_0.imag,
            "s_up_0_re": constants.s_up_0.real,
            "s_up_0_im": constants.s_up_0.imag,
            "s_up_4_re": constants.s_up_4.real,
            "s_up_4_im": constants.s_up_4.imag,
        },
        "warnings": list(winding.warnings),
    }
