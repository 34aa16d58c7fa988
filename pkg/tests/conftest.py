import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ispso import Dataset, load_dataset  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


def toy(samples, labels, name="toy"):
    samples = np.asarray(samples, dtype=float)
    return Dataset(name, tuple(f"f{j}" for j in range(samples.shape[1])), samples, np.asarray(labels))


@pytest.fixture(scope="session")
def uci():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_dataset(DATA / f"{name}.csv", "class", name=name)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
