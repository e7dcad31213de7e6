import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]

# (label, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE = []


def record(label: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def run_cli(args, cwd, env=None, timeout=600):
    """Run ``python -m qla.cli`` in a subprocess; returns CompletedProcess."""
    full_env = dict(os.environ)
    full_env.pop("QLA_WORKERS", None)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "qla.cli", *args],
        cwd=cwd, env=full_env, capture_output=True, text=True, timeout=timeout,
    )


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
