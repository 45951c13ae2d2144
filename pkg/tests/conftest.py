import os

import pytest

from approxify.cli.corpus import corpus, trace_paths
from approxify.energy import load_trace
from approxify.interp import get_platform


@pytest.fixture(scope="session")
def plat():
    return get_platform("cortex-m")


@pytest.fixture(scope="session")
def benchmarks():
    return corpus()


@pytest.fixture(scope="session")
def traces():
    return {name: load_trace(path) for name, path in trace_paths().items()}


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = os.path.join(tmp_path, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
        return path
    return _write


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py::test_ac" in rep.nodeid:
                lines.append((rep.nodeid, outcome))
    if not lines:
        return
    import test_acceptance

    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in sorted(lines):
        name = nodeid.rsplit("::", 1)[1]
        label = (getattr(test_acceptance, name).__doc__ or name).strip()
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {label}")
