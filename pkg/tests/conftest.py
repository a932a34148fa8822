from __future__ import annotations

import numpy as np
import pytest

from unionlap.graph import build_graph
from unionlap.manifolds import model_preset, sample_mixture


@pytest.fixture(scope="session")
def paper_model():
    return model_preset("paper-rect-segment")


@pytest.fixture(scope="session")
def small_paper_graph(paper_model):
    cloud = sample_mixture(paper_model, 400, 11)
    return build_graph(cloud, 0.3, "indicator")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store one acceptance verdict; printed at the end of the run."""
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} {detail}")
