import pytest

from doublereduction.conservation import Equation, PdeSystem, conserved_vector
from doublereduction.expr import Deriv, VariableContext, parse
from doublereduction.problem import load
from doublereduction.symmetry import generator_from_coefficients

WAVE_PDE = "D(u,t,t) - D(f(u)*D(u,x), x) - D(g(u)*D(u,y), y)"


@pytest.fixture(scope="session")
def wave_ctx():
    return VariableContext(("t", "x", "y"), ("u",), ("c1", "c2"), ("f", "g"), signatures=(("f", ("u",)), ("g", ("u",))))


@pytest.fixture(scope="session")
def P(wave_ctx):
    return lambda text: parse(text, wave_ctx)


@pytest.fixture(scope="session")
def wave_system(wave_ctx, P):
    return PdeSystem((Equation(P(WAVE_PDE), Deriv("u", ("t", "t"))),), wave_ctx)


@pytest.fixture(scope="session")
def wave_T(wave_system, P):
    return conserved_vector([P("-D(u,t)"), P("f(u)*D(u,x)"), P("g(u)*D(u,y)")], wave_system)


@pytest.fixture(scope="session")
def wave_gens(wave_ctx):
    specs = [
        ("X1", {"xi_t": "1"}),
        ("X2", {"xi_x": "1"}),
        ("X3", {"xi_y": "1"}),
        ("X4", {"xi_t": "t", "xi_x": "x", "xi_y": "y"}),
    ]
    return {name: generator_from_coefficients(name, wave_ctx, c) for name, c in specs}


@pytest.fixture(scope="session")
def wave_problem():
    return load("wave2p1")


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts, one line per criterion, at the end of the run."""
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
