import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dlselect import standardize

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_ds(rng):
    X = rng.standard_normal((50, 20))
    beta = np.zeros(20)
    beta[:4] = (2.0, -1.5, 1.0, 0.5)
    return standardize(X, X @ beta + rng.standard_normal(50))


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        props = dict(report.user_properties)
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE[name] = (report.outcome, props.get("summary", ""), props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("_")[2])):
        outcome, summary, detail = _ACCEPTANCE[name]
        tag = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        num = name.split("_")[2]
        line = f"criterion {num}: {tag}  {summary}"
        if detail:
            line += f"  [{detail}]"
        tr.write_line(line)
