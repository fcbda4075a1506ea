import numpy as np
import pytest

from symm.rng import SplitMix64

ACCEPTANCE = {}


class AcceptanceRecorder:
    def __init__(self, key, title):
        self.key = key
        self.title = title
        self.checks = []

    def check(self, name, value, ok):
        self.checks.append((name, value, bool(ok)))
        ACCEPTANCE[self.key] = self
        return bool(ok)

    @property
    def passed(self):
        return bool(self.checks) and all(ok for _, _, ok in self.checks)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        worst = [f"{n}={v}" for n, v, ok in self.checks if not ok]
        detail = "; ".join(worst) if worst else f"{len(self.checks)} checks"
        return f"{self.key} {status}  {self.title}  ({detail})"


@pytest.fixture
def acceptance(request):
    marker = request.node.get_closest_marker("criterion")
    key, title = marker.args
    rec = AcceptanceRecorder(key, title)
    ACCEPTANCE[key] = rec
    yield rec
    print(rec.line())


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion run by this test")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        terminalreporter.write_line(ACCEPTANCE[key].line())


@pytest.fixture
def rng():
    return SplitMix64(12345)


@pytest.fixture
def nprng():
    return np.random.default_rng(7)
