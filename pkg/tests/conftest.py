import numpy as np
import pytest

from membrane_nlcs.nonlinearity import make_profile

_ACCEPTANCE_LINES = []


class CriterionRecorder:
    """Collects one verdict line per acceptance criterion and asserts it."""

    def __call__(self, number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line


@pytest.fixture
def criterion():
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def prof95():
    return make_profile((0.95, 0.19, 1e-4), 120)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
