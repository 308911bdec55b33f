import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def barrier_result(tmp_path_factory):
    """A completed barrier-scenario result directory, produced through the
    simulator's public CLI (the only interface this package consumes)."""
    out = tmp_path_factory.mktemp("results") / "barrier"
    cmd = [
        sys.executable,
        "-m",
        "qpot.cli",
        "scenario",
        "barrier",
        "--out",
        str(out),
        "--set",
        "evolution.steps=1500",
        "--set",
        "evolution.output_stride=100",
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out
