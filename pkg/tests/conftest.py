import logging
from collections import defaultdict

import pytest

# criterion number -> list of (test id, passed); details -> list of strings
_OUTCOMES = defaultdict(list)
_DETAILS = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")
    # planner warnings about gap coverage are expected in several tests
    logging.getLogger("losplan").setLevel(logging.ERROR)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _OUTCOMES[mark.args[0]].append((item.name, rep.passed))


@pytest.fixture()
def detail(request):
    """Attach a one-line measurement to the test's criterion summary."""
    mark = request.node.get_closest_marker("criterion")

    def add(text):
        _DETAILS[mark.args[0]].append(text)

    return add


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        runs = _OUTCOMES[n]
        ok = all(p for _, p in runs)
        failed = [name for name, p in runs if not p]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({sum(p for _, p in runs)}/{len(runs)} tests)"
        if failed:
            line += " failed: " + ", ".join(failed)
        tr.write_line(line)
        for d in _DETAILS[n]:
            tr.write_line(f"    {d}")
