import random

import pytest

from pihier import corpus, parse
from pihier.generators import seeded


@pytest.fixture
def rng() -> random.Random:
    return seeded()


def typable_terms():
    return [e for e in corpus() if e.typable]


@pytest.fixture(params=[e.name for e in corpus()])
def corpus_term(request):
    from pihier import corpus_entry
    return corpus_entry(request.param)


def P(src: str):
    return parse(src)


# ------------------------------------------------------- acceptance report

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion."""
    num = request.node.get_closest_marker("criterion").args[0]
    info = {"detail": ""}
    _CRITERIA[num] = (False, "did not finish")
    yield info
    _CRITERIA[num] = (info.get("ok", False), info["detail"])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is not None and call.when == "call":
        num = marker.args[0]
        ok, detail = _CRITERIA.get(num, (False, ""))
        _CRITERIA[num] = (ok and call.excinfo is None, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        ok, detail = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
