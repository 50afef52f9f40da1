import numpy as np
import pytest

from newtonflow.casefile import bundled_case, bundled_case_names, parse_case
from newtonflow.network import PowerFlowModel

TWO_BUS = """\
function mpc = two_bus
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0   0   0  0  1  1.0  0  230  1  1.1  0.9;
    2  1  50  10  0  0  1  1.0  0  230  1  1.1  0.9;
];
mpc.gen = [
    1  0  0  100  -100  1.0  100  1  200  0;
];
mpc.branch = [
    1  2  {r}  0.1  0  0  0  0  0  0  1;
];
"""


def two_bus_text(r=0.0):
    return TWO_BUS.format(r=r)


@pytest.fixture
def two_bus():
    return parse_case(two_bus_text(), name="two_bus")


@pytest.fixture
def two_bus_lossy():
    return parse_case(two_bus_text(r=0.02), name="two_bus_lossy")


@pytest.fixture(scope="session")
def case14():
    return bundled_case("case14")


@pytest.fixture(scope="session")
def case118():
    return bundled_case("case118")


@pytest.fixture(scope="session")
def model14(case14):
    return PowerFlowModel(case14)


@pytest.fixture(scope="session")
def model118(case118):
    return PowerFlowModel(case118)


@pytest.fixture(scope="session", params=bundled_case_names())
def bundled_model(request):
    return PowerFlowModel(bundled_case(request.param))


def random_states(model, count, seed):
    """States scattered around the case profile: angles +-0.3 rad, magnitudes in [0.9, 1.1]."""
    rng = np.random.default_rng(seed)
    base = model.initial_state().values
    na = model.n_angle
    out = []
    for _ in range(count):
        y = base.copy()
        y[:na] += rng.uniform(-0.3, 0.3, na)
        y[na:] = rng.uniform(0.9, 1.1, model.n - na)
        out.append(y)
    return out


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
