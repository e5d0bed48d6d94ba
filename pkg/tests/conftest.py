import pytest

from interface_spectra.profile import InterfaceConfig, ShearProfile as S


def make_kh(rho_plus=0.1, g=9.8, sigma=0.07):
    return InterfaceConfig(rho_plus, 1.0, g, sigma, S.constant("upper", 1.0, 1.0), S.constant("lower", 1.0, 0.0))


def make_convex(g=9.8, sigma=0.07, rho_plus=0.1):
    return InterfaceConfig(rho_plus, 1.0, g, sigma, S.poly("upper", 1.0, [0.5, 1.0, 0.2]),
                           S.poly("lower", 1.0, [0.0, 1.0, 0.2]))


def make_concave(g=9.8, sigma=0.07, rho_plus=0.1):
    return InterfaceConfig(rho_plus, 1.0, g, sigma, S.poly("upper", 1.0, [0.5, 1.0, -0.2]),
                           S.poly("lower", 1.0, [0.0, 1.0, -0.2]))


def make_couette(rho_plus=0.1):
    return InterfaceConfig(rho_plus, 1.0, 9.8, 0.07, S.poly("upper", 1.0, [1.0, 1.0]), S.poly("lower", 1.0, [0.0, 1.0]))


def make_exclusion():
    """Disjoint ranges and strong surface tension: passes the exclusion certificate."""
    return InterfaceConfig(0.1, 1.0, 9.8, 10.0, S.poly("upper", 1.0, [1.0, 1.0, 0.2]),
                           S.poly("lower", 1.0, [0.0, 1.0, 0.2]))


@pytest.fixture
def kh():
    return make_kh()


@pytest.fixture
def convex():
    return make_convex()


@pytest.fixture
def concave():
    return make_concave()


@pytest.fixture
def couette():
    return make_couette()


@pytest.fixture
def exclusion_cfg():
    return make_exclusion()


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
