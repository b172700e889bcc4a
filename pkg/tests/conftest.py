import pytest

from strikespan import bs_curve, gbm_pool, payoff as po

_CRITERIA = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    ok = call.excinfo is None
    prev = _CRITERIA.get(number, (title, True))
    _CRITERIA[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}")


@pytest.fixture(scope="session")
def bs_zero_rate():
    return bs_curve(100.0, 0.2, 0.0, 1.0)


@pytest.fixture(scope="session")
def bs_main():
    return bs_curve(100.0, 0.2, 0.05, 1.0)


@pytest.fixture(scope="session")
def pool_1e5():
    return gbm_pool(7, 100_000, 100.0, 0.2, 0.05, 1.0)


@pytest.fixture(scope="session")
def catalog_payoffs():
    return [
        po.call(100),
        po.put(100),
        po.straddle(100),
        po.butterfly(90, 100, 110),
        po.capped_call(100, 20),
        po.power_call(2, 10000),
        po.digital_ge(100),
        po.digital_gt(105),
        po.polynomial([1.0, 0.5, 0.01], 80, 120),
        po.piecewise_linear([[50, 0], [80, 10], [100, 5], [150, 30]]),
        po.power(2),
    ]
