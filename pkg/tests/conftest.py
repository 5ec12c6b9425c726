import numpy as np
import pytest

from hurra.core import Dataset, GroundTruth

# filled by test_acceptance.py, printed after the run
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"AC{number}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(values, names=None, timestamps=None, name="d"):
    values = np.asarray(values, dtype=float)
    F, T = values.shape
    names = names or [f"f{j}" for j in range(F)]
    ts = np.arange(T) if timestamps is None else timestamps
    return Dataset(name, tuple(names), ts, values)


def make_gt(labels, names=None):
    labels = np.asarray(labels, dtype=np.int8)
    names = names or [f"f{j}" for j in range(labels.shape[0])]
    return GroundTruth(tuple(names), labels)
