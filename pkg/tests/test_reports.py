import json
import math
import os

import numpy as np
import pytest

from qlev import build_model
from qlev.hexagon import hexagon_symbol
from qlev.reports import (
    SCHEMA_VERSION,
    SchemaError,
    TRACE_HEADER,
    atomic_write_text,
    dumps_json,
    levinson_report_dict,
    read_json,
    read_levinson_report,
    validate_levinson_dict,
    write_hexagon_csv,
    write_json,
    write_scattering_csv,
    write_trace_csv,
)
from qlev.winding import levinson_report, var_det_s


def test_json_floats_round_trip_losslessly():
    payload = {
        "pi": math.pi,
        "third": 1.0 / 3.0,
        "tenth": 0.1,
        "tiny": 5e-324,
        "big": 1.7976931348623157e308,
        "whole": 2.0,
        "neg": -0.0,
        "count": 7,
        "flag": True,
        "nothing": None,
        "nested": [[1.0 / 7.0, 2.0], {"x": -1e-17}],
    }
    back = json.loads(dumps_json(payload))
    assert back["pi"] == math.pi
    assert back["third"] == 1.0 / 3.0
    assert back["tiny"] == 5e-324
    assert back["big"] == 1.7976931348623157e308
    assert isinstance(back["whole"], float) and back["whole"] == 2.0
    assert isinstance(back["count"], int) and back["count"] == 7
    assert back["flag"] is True and back["nothing"] is None
    assert back["nested"][0][0] == 1.0 / 7.0
    assert back["nested"][1]["x"] == -1e-17


def test_json_handles_numpy_scalars_and_arrays():
    back = json.loads(dumps_json({"a": np.float64(0.7), "b": np.int64(3), "m": np.eye(2)}))
    assert back["a"] == 0.7 and isinstance(back["b"], int)
    assert back["m"] == [[1.0, 0.0], [0.0, 1.0]]
    assert all(isinstance(x, float) for row in back["m"] for x in row)


def test_json_rejects_bad_values():
    with pytest.raises(ValueError):
        dumps_json({"x": float("nan")})
    with pytest.raises(ValueError):
        dumps_json({"x": float("inf")})
    with pytest.raises(TypeError):
        dumps_json({"x": 1j})
    with pytest.raises(TypeError):
        dumps_json({"x": object()})
    with pytest.raises(ValueError):
        dumps_json({"x": "@f64:1.5"})


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out.json"
    atomic_write_text(str(target), "hello\n")
    assert target.read_text() == "hello\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]


def test_atomic_write_failure_keeps_old_content(tmp_path):
    target = tmp_path / "out.json"
    target.write_text("original")
    with pytest.raises(TypeError):
        atomic_write_text(str(target), 123)
    assert target.read_text() == "original"
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]


def test_read_json_validates_schema(tmp_path):
    good = tmp_path / "good.json"
    write_json(str(good), {"schema_version": SCHEMA_VERSION, "kind": "levinson-report"})
    assert read_json(str(good))["kind"] == "levinson-report"
    with pytest.raises(SchemaError):
        read_json(str(good), expected_kind="hexagon-report")

    bad_version = tmp_path / "bad1.json"
    bad_version.write_text('{"schema_version": "99"}\n')
    with pytest.raises(SchemaError):
        read_json(str(bad_version))

    not_object = tmp_path / "bad2.json"
    not_object.write_text("[1, 2]\n")
    with pytest.raises(SchemaError):
        read_json(str(not_object))


def test_levinson_report_file_round_trip(tmp_path):
    rep = levinson_report(build_model(n=2, theta=0.0, v=(1.0, 0.0)), include_oracle=False)
    data = levinson_report_dict(rep)
    validate_levinson_dict(data)
    path = tmp_path / "report.json"
    write_json(str(path), data)
    back = read_levinson_report(str(path))
    assert back["params"]["n"] == 2
    assert isinstance(back["params"]["theta"], float)
    assert isinstance(back["params"]["v"][0], float)
    assert back["var_det_s"] == rep.var_det_s
    assert back["lhs"] == rep.lhs
    assert back["intricate"] == {"flag": True, "alpha": -1}
    assert isinstance(back["thresholds"][0]["matrix_re"][0][0], float)

    del data["lhs"]
    with pytest.raises(SchemaError):
        validate_levinson_dict(data)


def test_trace_csv_layout(tmp_path):
    m = build_model(n=2, theta=0.0, v=(0.7, -1.3))
    _, traces = var_det_s(m)
    path = tmp_path / "trace.csv"
    write_trace_csv(str(path), traces)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert len(lines) - 1 == sum(len(t.lams) for t in traces)
    for line in lines[1:]:
        cells = line.split(",")
        assert int(cells[0]) in (0, 1)
        lam, re_d, im_d = float(cells[3]), float(cells[4]), float(cells[5])
        assert float(cells[1]) <= lam <= float(cells[2])
        assert abs(math.hypot(re_d, im_d) - 1.0) < 1e-9


def test_scattering_csv_unitarity_and_padding(tmp_path):
    m = build_model(n=3, theta=1.0, v=(0.5, -1.0, 2.0))
    path = tmp_path / "scat.csv"
    worst = write_scattering_csv(str(path), m, points=64)
    assert worst < 1e-9
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    assert header[:2] == ["lambda", "dim"]
    assert header[-2:] == ["arg_det_unwrapped", "unitarity"]
    dims = set()
    for line in lines[1:]:
        cells = line.split(",")
        d = int(cells[1])
        dims.add(d)
        # entries beyond the open-channel block stay empty
        blanks = sum(1 for c in cells[2:-2] if c == "")
        assert blanks == len(cells[2:-2]) - 2 * d * d
        assert float(cells[-1]) < 1e-9
    assert dims == {1, 2, 3}


def test_hexagon_csv_covers_all_edges(tmp_path):
    sym = hexagon_symbol(build_model(n=2, theta=0.0, v=(1.0, 0.0)))
    path = tmp_path / "hex.csv"
    write_hexagon_csv(str(path), sym)
    lines = path.read_text().splitlines()
    assert lines[0] == "edge,param,re_det,im_det"
    names = {line.split(",")[0] for line in lines[1:]}
    assert names == {f"edge{i}" for i in range(1, 7)}
    # unbounded interpolation parameters serialize as literal inf
    assert any(line.split(",")[1] in ("inf", "-inf") for line in lines[1:])
    for line in lines[1:]:
        cells = line.split(",")
        float(cells[2]), float(cells[3])
