import os
from collections import defaultdict

import numpy as np
import pytest

from hopedetect.corpus import LabeledCorpus

_CRITERIA = defaultdict(list)

_TITLES = {
    1: "dataset-free property suite",
    2: "synthetic end-to-end, every model F1 >= 0.95 in < 2 min",
    3: "shared-task data reproduction",
    4: "external prediction import and confusion cells",
}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for mark in getattr(report, "_criteria", ()):
        _CRITERIA[mark].append((report.nodeid, report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    report._criteria = [m.args[0] for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        outcomes = [o for _, o in _CRITERIA[n]]
        if "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        passed = outcomes.count("passed")
        tr.write_line(f"criterion {n}: {status} ({passed}/{len(outcomes)} checks passed) "
                      f"{_TITLES.get(n, '')}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_corpus():
    pairs = [
        ("we hope for peace", "HS"),
        ("stay strong together", "HS"),
        ("this is useless", "NHS"),
        ("never again", "NHS"),
        ("enna da romba", "NIL"),
        ("hope you win", "HS"),
        ("hate this video", "NHS"),
        ("vanakkam nanba", "NIL"),
        ("so inspiring", "HS"),
        ("worst thing ever", "NHS"),
    ]
    return LabeledCorpus.from_pairs(pairs, language="english", split="train")


@pytest.fixture
def data_dir():
    path = os.environ.get("HOPEDETECT_DATA")
    if not path or not os.path.isdir(path):
        pytest.skip("set HOPEDETECT_DATA to the shared-task data directory")
    return path
