from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from formval.ingest import PilotDataset
from formval.spec_model import ConstructSpec, ItemSpec, MeasurementSpec, parse_spec

EXAMPLE_DIR = Path(resources.files("formval") / "data" / "example_project")
GOLDEN_DIR = Path(__file__).parent / "golden"


def make_dataset(values, items=None, respondents=None, iteration_id="t"):
    values = np.asarray(values, dtype=float)
    n, k = values.shape
    items = items or [f"X{j + 1}" for j in range(k)]
    respondents = respondents or [f"R{i + 1}" for i in range(n)]
    return PilotDataset(iteration_id, tuple(respondents), tuple(items), values)


def make_construct(items, model="formative", cid="C", weight_source="manual",
                   manual_weights=None, lo=1, hi=5):
    return ConstructSpec(cid, cid, model, tuple(ItemSpec(i, scale_min=lo, scale_max=hi,
                                                         citation="src")
                                                for i in items),
                         (), weight_source,
                         None if manual_weights is None else tuple(manual_weights))


def make_spec(*constructs):
    return MeasurementSpec(tuple(constructs))


SIMPLE_SPEC = """
spec_version: 1
title: t
constructs:
  - id: A
    model: formative
    items:
      - {id: A1, scale: [1, 5], citation: s1}
      - {id: A2, scale: [1, 5], citation: s2}
      - {id: A3, scale: [1, 5], citation: s1}
      - {id: A4, scale: [1, 5], citation: s2}
      - {id: A5, scale: [1, 5], citation: s1, reverse: true}
"""


@pytest.fixture(scope="session")
def simple_spec():
    return parse_spec(SIMPLE_SPEC)


@pytest.fixture(scope="session")
def example_dir():
    return EXAMPLE_DIR


# -- acceptance summary: one PASS/FAIL line per criterion -----------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    rep = outcome.get_result()
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.outcome == "passed" else "FAIL"
        _CRITERIA[number] = (title, status, f"{rep.duration:.2f}s")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, took = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}  {status}  {title}  ({took})")
