import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gasleak import _accel, dataio, simulate
from gasleak import models as M

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TRAIN_SEED = 1
TRAIN_SAMPLES = 21000


def backends():
    names = ["python"]
    if _accel.compiled_available():
        names.append("cython")
    return names


@pytest.fixture(params=backends())
def backend(request):
    previous = _accel.use_backend(request.param)
    yield _accel.backend
    _accel.backend = previous


@pytest.fixture(scope="session")
def training_stream():
    return simulate.synth_stream(duration_samples=TRAIN_SAMPLES, seed=TRAIN_SEED)


class Observers:
    """Outlet and inlet observers for every family, trained once per session."""

    def __init__(self, stream):
        self.outlet, self.inlet, self.seconds = {}, {}, {}
        for family in M.FAMILIES:
            t0 = time.perf_counter()
            self.outlet[family] = M.train_observer(stream, family, grid=M.QUICK_GRIDS[family])
            self.seconds[family] = time.perf_counter() - t0
        for family, model in self.outlet.items():
            fixed = {k: [v] for k, v in model.params.items() if k in M.QUICK_GRIDS[family]}
            self.inlet[family] = M.train_observer(stream, family, grid=fixed,
                                                  target=dataio.INLET_FLOWRATE, k=None)

    @property
    def total_seconds(self) -> float:
        return sum(self.seconds.values())


@pytest.fixture(scope="session")
def observers(training_stream):
    return Observers(training_stream)


@pytest.fixture(scope="session")
def small_stream():
    return simulate.synth_stream(duration_samples=3000, seed=3)


@pytest.fixture(scope="session")
def quick_tree(small_stream):
    return M.train_observer(small_stream, "decision_tree", grid={"min_samples_split": [10]}, k=2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def quick_inlet(small_stream):
    return M.train_observer(small_stream, "decision_tree", grid={"min_samples_split": [10]},
                            target=dataio.INLET_FLOWRATE, k=None)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record one acceptance line, then fail the test if the criterion failed."""

    def record(number: int, title: str, ok: bool, detail: str, seconds: float):
        ACCEPTANCE_LINES[number] = (f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  "
                                    f"{title} ({seconds:.1f} s): {detail}")
        print(ACCEPTANCE_LINES[number])
        assert ok, ACCEPTANCE_LINES[number]

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
