import os
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
SRC_DIR = REPO_ROOT / "src"

# Gate speed / circuit depth of the worked-example quantum computer,
# about 224 iterations per second.
EXAMPLE_GROVER_RATE = 66.7e6 / 297784


def run_cli(args, env=None):
    """Run the CLI in a subprocess; returns CompletedProcess with text output."""
    full_env = os.environ.copy()
    full_env["PYTHONPATH"] = str(SRC_DIR) + os.pathsep + full_env.get("PYTHONPATH", "")
    full_env.setdefault("SOURCE_DATE_EPOCH", "1600000000")
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "qrace", *args],
        capture_output=True,
        text=True,
        env=full_env,
    )


@pytest.fixture(scope="session")
def cli():
    return run_cli
