import pytest

from qprenorm.qp import ModeAction
from qprenorm.spectral import fixed_point

# criterion label ("1", "8a", ...) -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def phi30():
    return fixed_point(30)


@pytest.fixture(scope="session")
def phi40():
    return fixed_point(40)


@pytest.fixture(scope="session")
def phi80():
    return fixed_point(80)


@pytest.fixture(scope="session")
def act30(phi30):
    return ModeAction(phi30)


@pytest.fixture(scope="session")
def act40(phi40):
    return ModeAction(phi40)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=_natural):
        ok, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"criterion {label:>3}: {'PASS' if ok else 'FAIL'}  {detail}")


def _natural(label):
    digits = "".join(ch for ch in label if ch.isdigit())
    return int(digits), label
