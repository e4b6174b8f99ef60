import numpy as np
import pytest

from gskdet.kernel import make_spec

BENCH_NU = "0.1 + 0.05*lambda"
BENCH_U = "lambda - 0.1*lambda^2"
TIME_U = "lambda - lambda^2"


def fit_exponent(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


@pytest.fixture(scope="session")
def bench():
    """Space-like benchmark with g = 0.2 sin(lambda), lambda0 = 5."""
    return make_spec(BENCH_NU, BENCH_U, "0.2*sin(lambda)", q=1.0, x=100.0)


@pytest.fixture(scope="session")
def bench_g0():
    return make_spec(BENCH_NU, BENCH_U, "0", q=1.0, x=100.0)


@pytest.fixture(scope="session")
def timelike():
    """Time-like instance, lambda0 = 1/2."""
    return make_spec(BENCH_NU, TIME_U, "0.2*sin(lambda)", q=1.0, x=100.0)


@pytest.fixture(scope="session", params=["space", "time"])
def both(request, bench, timelike):
    return bench if request.param == "space" else timelike


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record one summary line per acceptance criterion; printed at the end of the run."""

    def record(number: int, ok: bool, detail: str):
        _CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
