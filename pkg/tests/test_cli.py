import math
import types

import pytest

from qlev.cli import (
    EXIT_IDENTITY,
    EXIT_OK,
    EXIT_UNCLASSIFIED,
    EXIT_USAGE,
    UsageError,
    main,
    parse_theta,
    parse_v,
)
from qlev.reports import read_json
from qlev.scattering import UnclassifiedThresholdError


def test_parse_theta_pi_forms():
    assert parse_theta("pi") == math.pi
    assert parse_theta("pi/2") == math.pi / 2
    assert parse_theta("3pi/4") == 3 * math.pi / 4
    assert parse_theta("0.5pi") == math.pi / 2
    assert parse_theta("-pi/2") == 3 * math.pi / 2
    assert parse_theta("2pi") == 0.0
    assert parse_theta("1.25") == 1.25
    assert abs(parse_theta("7") - (7.0 - 2 * math.pi)) < 1e-15


def test_parse_theta_rejects_garbage():
    with pytest.raises(UsageError):
        parse_theta("abc")
    with pytest.raises(UsageError):
        parse_theta("pi/0")


def test_parse_v():
    assert parse_v("1,0.5,-2") == (1.0, 0.5, -2.0)
    with pytest.raises(UsageError):
        parse_v("1,x")


def test_usage_errors_exit_64(capsys):
    assert main(["spectrum", "--n", "2", "--theta", "abc", "--v", "1,0"]) == EXIT_USAGE
    assert main(["spectrum", "--n", "2", "--theta", "0", "--v", "0,0"]) == EXIT_USAGE
    assert main(["spectrum", "--n", "2", "--theta", "0", "--v", "1"]) == EXIT_USAGE
    assert main(["hexagon", "--n", "3", "--theta", "0", "--v", "1,0,0.5"]) == EXIT_USAGE
    assert main(["check-levinson", "--theta", "0", "--v", "1,0"]) == EXIT_USAGE
    capsys.readouterr()


def test_spectrum_smoke(capsys):
    assert main(["spectrum", "--n", "3", "--theta", "pi/3", "--v", "1,0,-0.5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "level" in out or "band" in out


def test_thresholds_writes_json(tmp_path, capsys):
    out = tmp_path / "thr.json"
    rc = main(["thresholds", "--n", "2", "--theta", "0", "--v", "0.7,-1.3", "--out", str(out)])
    assert rc == EXIT_OK
    data = read_json(str(out), expected_kind="thresholds")
    assert len(data["thresholds"]) == 4
    assert {t["class"] for t in data["thresholds"]} == {"MinusOne"}
    capsys.readouterr()


def test_check_levinson_writes_report_and_trace(tmp_path, capsys):
    out = tmp_path / "rep.json"
    csv = tmp_path / "trace.csv"
    rc = main(
        [
            "check-levinson", "--n", "2", "--theta", "0", "--v", "1,0",
            "--out", str(out), "--csv", str(csv), "--no-oracle",
        ]
    )
    assert rc == EXIT_OK
    assert "counting identity holds" in capsys.readouterr().out
    data = read_json(str(out), expected_kind="levinson-report")
    assert data["intricate"]["flag"] is True
    header = csv.read_text().splitlines()[0]
    assert header == "interval,a,b,lambda,re_det,im_det,arg_det_unwrapped"


def test_scattering_csv_via_cli(tmp_path, capsys):
    out = tmp_path / "s.csv"
    rc = main(["scattering", "--n", "3", "--theta", "1.0", "--v", "0.5,-1,2", "--csv", str(out)])
    assert rc == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("lambda,dim,")
    assert all(float(line.split(",")[-1]) < 1e-9 for line in lines[1:])
    capsys.readouterr()


def test_hexagon_via_cli(tmp_path, capsys):
    out = tmp_path / "hex.json"
    csv = tmp_path / "hex.csv"
    rc = main(
        ["hexagon", "--n", "2", "--theta", "0", "--v", "1,0", "--out", str(out), "--csv", str(csv)]
    )
    assert rc == EXIT_OK
    data = read_json(str(out), expected_kind="hexagon-report")
    assert data["case"] == "iv"
    assert data["winding_nearest_int"] == 1
    assert csv.read_text().splitlines()[0] == "edge,param,re_det,im_det"
    capsys.readouterr()


def test_identity_gate_exit_code(monkeypatch, capsys):
    fake = types.SimpleNamespace(
        n=2, theta=0.0, v=(1.0, 0.0), var_det_s=0.0, correction_c=0,
        lhs=0.5, residual=0.5, intricate=False, alpha=0, bound_total=0,
        discrete=types.SimpleNamespace(total=0), embedded=types.SimpleNamespace(total=0),
        oracle_total=None, warnings=[], traces=[], thresholds=[],
    )
    monkeypatch.setattr("qlev.cli.levinson_report", lambda *a, **k: fake)
    rc = main(["check-levinson", "--n", "2", "--theta", "0", "--v", "1,0", "--no-oracle"])
    assert rc == EXIT_IDENTITY
    assert "FAILED" in capsys.readouterr().err


def test_unclassified_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise UnclassifiedThresholdError("no stable limit")

    monkeypatch.setattr("qlev.cli.levinson_report", boom)
    rc = main(["check-levinson", "--n", "2", "--theta", "0", "--v", "1,0", "--no-oracle"])
    assert rc == EXIT_UNCLASSIFIED
    capsys.readouterr()


def test_sweep_via_cli_idempotent(tmp_path, capsys):
    args = [
        "sweep", "--n", "2", "--theta-grid", "2", "--trials", "1",
        "--seed", "5", "--out", str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert "manifest.csv" in first
    assert main(args) == EXIT_OK
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert second == first
    capsys.readouterr()
