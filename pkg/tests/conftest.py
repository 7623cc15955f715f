import warnings

import pytest

from laddermem.config import load_scenario


@pytest.fixture(scope="session")
def on_res():
    return load_scenario("flame2_on_res")


@pytest.fixture(scope="session")
def off_res():
    return load_scenario("flame2_off_res")


@pytest.fixture(scope="session")
def on_res_result(on_res):
    from laddermem.solver import run_storage_retrieval

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_storage_retrieval(on_res)


def pytest_configure(config):
    config.addinivalue_line("filterwarnings", "ignore::laddermem.solver.WindowPlacementWarning")


@pytest.fixture(scope="session")
def dressing_curves():
    """Efficiency vs storage time with and without dressing, on the calibrated presets."""
    from laddermem.calibration import DEFAULT_STORAGE_TIMES
    from laddermem.solver import lifetime_curve

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        on = lifetime_curve(load_scenario("flame2_on_res"), DEFAULT_STORAGE_TIMES)
        off = lifetime_curve(load_scenario("flame2_no_dressing"), DEFAULT_STORAGE_TIMES)
    return on, off


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one verdict line per acceptance check; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(criterion, ok, detail):
        lines.append(f"criterion {criterion:<3} {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip("abc"))):
            terminalreporter.write_line(line)
