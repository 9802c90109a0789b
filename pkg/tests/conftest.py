import pytest

CRITERIA = {
    1: "two-circle potential golden values",
    2: "point-mass toy: exact solutions, density, gaps",
    3: "radial reproduction on annulus [1.2, 2]",
    4: "two-circle solutions concentrate on A-support and B-curves",
    5: "normalized spacing on the outer lobe at n=400",
    6: "argument-derivative identities on level curves",
    7: "unwinding exactness on random polynomials",
    8: "outside-disk invariance on annulus [1.5, 2.5]",
    9: "upper-deviation probabilities nonincreasing in n",
    10: "numerics property suite",
}

_outcomes: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    k = getattr(report, "criterion", None)
    if k is None:
        return
    ok = report.passed
    _outcomes.setdefault(k, []).append((report.nodeid.split("::")[-1], ok))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(CRITERIA):
        if k not in _outcomes:
            tr.write_line(f"criterion {k:2d}: NOT RUN  ({CRITERIA[k]})")
            continue
        res = _outcomes[k]
        status = "PASS" if all(ok for _, ok in res) else "FAIL"
        failed = [name for name, ok in res if not ok]
        tail = f"  failing: {', '.join(failed)}" if failed else ""
        tr.write_line(f"criterion {k:2d}: {status}  ({CRITERIA[k]}){tail}")
