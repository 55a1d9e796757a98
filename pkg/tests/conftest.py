import numpy as np
import pytest

from signmon.ontology import SignClass
from signmon.scenegen import GenerationConfig, generate_dataset, render_sign


@pytest.fixture(scope="session")
def templates():
    return {cls: render_sign(cls, 206, seed=1) for cls in SignClass}


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    manifest = generate_dataset(GenerationConfig(scenes=12, master_seed=5), root)
    return manifest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
