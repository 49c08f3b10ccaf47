import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ufofdm.design import DesignSpec  # noqa: E402
from ufofdm.pipeline import design_filter  # noqa: E402
from ufofdm.reference import dolph_chebyshev, identity_filter  # noqa: E402


@pytest.fixture(scope="session")
def default_spec():
    return DesignSpec()


@pytest.fixture(scope="session")
def designs():
    """Design results for the three weights used throughout, keyed by lambda."""
    return {lam: design_filter(DesignSpec(lam=lam)) for lam in (1.0, 1e-2, 1e-4)}


@pytest.fixture(scope="session")
def designed(designs):
    return designs[1e-4].filter


@pytest.fixture(scope="session")
def chebyshev(default_spec):
    return dolph_chebyshev(16, 45.0, default_spec)


@pytest.fixture(scope="session")
def identity(default_spec):
    return identity_filter(default_spec)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    ran = {int(r.nodeid.rsplit("_c", 1)[-1][:2]) for k in ("passed", "failed", "error")
           for r in terminalreporter.stats.get(k, []) if "test_acceptance.py::" in r.nodeid}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance_log.TITLES):
        if n in acceptance_log.VERDICTS:
            terminalreporter.write_line(acceptance_log.VERDICTS[n])
        elif n in ran:
            terminalreporter.write_line(
                f"[{n:2d}] FAIL  {acceptance_log.TITLES[n]}: error before a verdict was reached")
