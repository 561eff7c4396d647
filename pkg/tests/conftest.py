"""Shared fixtures plus the acceptance-criterion summary printed after the run."""

from __future__ import annotations

import numpy as np
import pytest

from eigentraj.dataset import load_scenes
from eigentraj.synthetic import write_corpus

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    if report.skipped:
        status = "NOT RUN"
    elif report.failed:
        status = "FAIL"
    elif report.when == "call":
        status = "PASS"
    else:
        return
    prev = _CRITERIA.get(n, (None, title))[0]
    if prev in ("FAIL", "NOT RUN") and status == "PASS":
        return
    _CRITERIA[n] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, title = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status:<7} {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corpus_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    write_corpus(root, ("eth", "hotel", "univ"), seed=7, n_peds=30)
    return root


@pytest.fixture(scope="session")
def corpus(corpus_root):
    return load_scenes(corpus_root, ("eth", "hotel", "univ"))
