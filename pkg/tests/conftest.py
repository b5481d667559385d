import pytest

from condensation import datasets as ds
from condensation.engine import CondensationConfig, run

# Bandwidth for the 64-point shape experiments: about 1.75x the squared arc
# spacing of the ellipse, which yields a ~125-iteration run.
SHAPE_EPSILON = 0.04


@pytest.fixture(scope="session")
def blobs_dataset():
    return ds.blobs()


@pytest.fixture(scope="session")
def blobs_trace(blobs_dataset):
    return run(blobs_dataset.data, CondensationConfig(epsilon0="nn"))


@pytest.fixture(scope="session")
def ellipse_trace():
    return run(ds.hyperuniform_ellipse(64, 2.0, 1.0).data, CondensationConfig(epsilon0=SHAPE_EPSILON))


@pytest.fixture(scope="session")
def circle_trace():
    return run(ds.hyperuniform_circle(64).data, CondensationConfig(epsilon0=SHAPE_EPSILON))


ACCEPTANCE_LINES = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, {})

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"acceptance #{number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
