import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qmlab.words import PSL2Z, Presentation, Word  # noqa: E402


def modular_string(w: Word) -> str:
    """Word in Z/2 * Z/3 as a string over {S, R} for the oracles."""
    return "".join(w.presentation.names[g] * e for g, e in w.units)


@pytest.fixture(scope="session")
def F2() -> Presentation:
    return Presentation.free(2)


@pytest.fixture(scope="session")
def G23() -> Presentation:
    return PSL2Z


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
