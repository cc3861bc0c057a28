import subprocess
import sys

import pytest


def engine(*args: str) -> None:
    """Produce input files through the engine's public CLI only."""
    subprocess.run(
        [sys.executable, "-m", "qlev.cli", *args],
        check=True,
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("engine_output")
    engine(
        "check-levinson", "--n", "2", "--theta", "0", "--v", "1,0",
        "--out", str(d / "rep.json"), "--csv", str(d / "traces.csv"),
    )
    engine(
        "hexagon", "--n", "2", "--theta", "0", "--v", "1,0",
        "--out", str(d / "hex.json"), "--csv", str(d / "hex.csv"),
    )
    engine(
        "sweep", "--n", "2", "--theta-grid", "2", "--trials", "2",
        "--seed", "11", "--out", str(d / "sweep"),
    )
    return d
