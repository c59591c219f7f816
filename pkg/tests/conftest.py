from importlib import resources

import pytest

from kreinverse import gk_model as gk
from kreinverse.refpot import PseudoMorseParams


def _builtin(name: str) -> gk.ModelConfig:
    text = resources.files("kreinverse").joinpath("configs", name + ".cfg").read_text("utf-8")
    return gk.parse_config(text)


@pytest.fixture(scope="session")
def xe2() -> gk.ModelConfig:
    return _builtin("xe2_reference")


@pytest.fixture(scope="session")
def toy() -> gk.ModelConfig:
    return _builtin("toy_lorentzian")


@pytest.fixture(scope="session")
def morse(xe2) -> PseudoMorseParams:
    return PseudoMorseParams.from_mapping(xe2.refpot)


# acceptance criteria report one line each at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    return ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
