import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from doublereduction.conservation import ConservedVector, Equation, PdeSystem
from doublereduction.expr import Deriv, VariableContext, parse, pretty, to_str
from doublereduction.pipeline import (
    ComboSyntaxError,
    NoAssociatedGenerator,
    NotAssociatedError,
    SelectionStrategy,
    UnknownGeneratorError,
    parse_combo,
    reduce_once,
    run_pipeline,
    select_associated,
)
from doublereduction.problem import bundled_path, loads

WAVE_TEXT = bundled_path("wave2p1").read_text()
FIRST_INTEGRAL = "D(v,n)*f(v) + n^2*D(v,n)*g(v) - c2^2*n^2*D(v,n) - c1^2*D(v,n) + 2*c1*c2*n*D(v,n)"


@pytest.fixture(scope="module")
def combo_trace(wave_problem):
    start = time.perf_counter()
    trace = run_pipeline(wave_problem.system, wave_problem.conserved, wave_problem.generators, wave_problem.strategy)
    return trace, time.perf_counter() - start


def test_combo_run_end_to_end(combo_trace):
    trace, seconds = combo_trace
    assert seconds < 30
    assert trace.complete and not trace.diagnostic
    assert [s.used_generator.name for s in trace.steps] == ["X1 + c1*X2 + c2*X3", "X4"]
    assert to_str(trace.first_integral.lhs) == FIRST_INTEGRAL
    assert pretty(trace.first_integral.lhs) == "D(v,n)*(f(v) + n^2*g(v) - c2^2*n^2 - c1^2 + 2*c1*c2*n)"
    assert trace.first_integral.verified


def test_every_stage_passes_its_checks(combo_trace):
    for step in combo_trace[0].steps:
        assert step.divergence.holds
        assert step.rowrep_agrees and step.bracket_vanishes and step.canonical_flux_vanishes


def test_order_bookkeeping(combo_trace):
    trace = combo_trace[0]
    assert (trace.original_order, trace.final_order) == (2, 1)
    assert trace.order_drops_by_one
    assert [s.reduced_system.order for s in trace.steps] == [2, 2]
    assert [len(s.reduced_system.ctx.independents) for s in trace.steps] == [2, 1]


def test_back_substitution(combo_trace):
    defs = {n: pretty(d) for n, d in combo_trace[0].definitions}
    assert defs == {"n": "(x - c1*t)/(y - c2*t)", "v": "u"}


def test_combined_generators_are_consumed(combo_trace):
    step1 = combo_trace[0].steps[0]
    assert [i.source.name for i in step1.inherited] == ["X1", "X2", "X3", "X4"]
    assert combo_trace[0].steps[1].used_generator.name == "X4"


def test_first_strategy(wave_problem):
    trace = run_pipeline(wave_problem.system, wave_problem.conserved, wave_problem.generators, "first")
    assert [s.used_generator.name for s in trace.steps] == ["X1", "X2"]
    assert to_str(trace.first_integral.lhs) == "-D(v,n)*g(v)"
    assert trace.order_drops_by_one


def test_exhaustive_strategy_finds_the_travelling_wave(wave_problem, combo_trace):
    trace = run_pipeline(wave_problem.system, wave_problem.conserved, wave_problem.generators, "exhaustive")
    assert str(trace.steps[0].used_generator) == "d/dt + c1*d/dx + c2*d/dy"
    assert trace.first_integral.lhs == combo_trace[0].first_integral.lhs


def test_no_associated_generator(wave_problem):
    x4 = [wave_problem.generator("X4")]
    with pytest.raises(NoAssociatedGenerator):
        select_associated(wave_problem.conserved, x4)
    trace = run_pipeline(wave_problem.system, wave_problem.conserved, x4)
    assert not trace.complete and trace.steps == []
    assert "X4" in trace.diagnostic and trace.residual_system is wave_problem.system


def test_reduce_once_rejects_unassociated(wave_problem):
    with pytest.raises(NotAssociatedError) as info:
        reduce_once(wave_problem.system, wave_problem.conserved, wave_problem.generator("X4"))
    assert "[T^t, X] = -D(u,t)" in str(info.value)


def test_single_independent_needs_no_reduction():
    ctx = VariableContext(("x",), ("u",))
    sys_ = PdeSystem((Equation(parse("u_xx", ctx), Deriv("u", ("x", "x"))),), ctx)
    T = ConservedVector((parse("u_x", ctx),), sys_)
    trace = run_pipeline(sys_, T, [])
    assert trace.steps == [] and trace.complete
    assert trace.first_integral.lhs == parse("u_x", ctx) and trace.first_integral.verified


def test_combo_parsing(wave_problem):
    gens = wave_problem.generators
    X = parse_combo("X1 - c1*X2", gens)
    assert str(X) == "d/dt - c1*d/dx"
    with pytest.raises(UnknownGeneratorError):
        parse_combo("X1 + X9", gens)
    with pytest.raises(ComboSyntaxError):
        parse_combo("X1 + + X2", gens)


def test_strategy_validation():
    with pytest.raises(ValueError):
        SelectionStrategy("greedy")
    with pytest.raises(ValueError):
        SelectionStrategy("combo")


def test_injected_generator(wave_problem):
    text = WAVE_TEXT.replace(
        "strategy combo: X1 + c1*X2 + c2*X3",
        "strategy first\nsym@2 Z: xi_r = r, xi_s = s",
    )
    p = loads(text)
    trace = run_pipeline(p.system, p.conserved, [p.generator("X1")], p.strategy)
    assert [s.used_generator.name for s in trace.steps] == ["X1", "Z"]
    assert trace.complete


USER_CHANGES = """
change stage=1 canonical=q: r = y - c2*t, s = x - c1*t, q = t, w = u
change stage=2 canonical=m: n = s/r, m = ln(r), v = w
inverse stage=2: r = exp(m), s = n*exp(m), w = v
"""


def test_user_supplied_changes(wave_problem, combo_trace):
    p = loads(WAVE_TEXT + USER_CHANGES)
    changes = {k: spec.build for k, spec in p.changes.items()}
    trace = run_pipeline(p.system, p.conserved, p.generators, p.strategy, changes)
    assert trace.complete
    assert trace.first_integral.lhs == combo_trace[0].first_integral.lhs
    assert [s.canonical for s in trace.steps] == [None, None]


def test_user_change_that_is_not_canonical(wave_problem):
    bad = "change stage=1 canonical=q: r = y, s = x, q = t + x, w = u\n"
    p = loads(WAVE_TEXT + bad)
    trace = run_pipeline(p.system, p.conserved, p.generators, p.strategy, {1: p.changes[1].build})
    assert not trace.complete and "not d/dq" in trace.diagnostic


# solution transport ---------------------------------------------------------------------------
#
# Concrete f, g, c1, c2 and C.  Integrate the first-order ODE K(n, v) v' = C numerically,
# lift v(n) back through n = (x - c1 t)/(y - c2 t), and check the original PDE with
# derivatives of n worked out by hand.

C1, C2, CONST = 0.5, 1.0 / 3.0, 0.7


def f(u):
    return 1 + u * u


def fp(u):
    return 2 * u


def g(u):
    return 2 + u


def gp(u):
    return 1.0


def K(n, v):
    return f(v) + n * n * g(v) - C2 * C2 * n * n - C1 * C1 + 2 * C1 * C2 * n


def K_n(n, v):
    return 2 * n * g(v) - 2 * C2 * C2 * n + 2 * C1 * C2


def K_v(n, v):
    return fp(v) + n * n * gp(v)


def _solution():
    sol = solve_ivp(lambda n, v: CONST / K(n, v), (-1.0, 2.0), [0.3], rtol=1e-12, atol=1e-13, dense_output=True)
    assert sol.success
    return sol.sol


def _pde_residual(v_of, t, x, y, c1=C1, c2=C2):
    S, R = x - c1 * t, y - c2 * t
    n = S / R
    v = v_of(n)[0]
    v1 = CONST / K(n, v)
    v2 = -(K_n(n, v) * v1 + K_v(n, v) * v1 * v1) / K(n, v)
    nt, nx, ny = (c2 * S - c1 * R) / R**2, 1 / R, -S / R**2
    ntt, nxx, nyy = 2 * c2 * (c2 * S - c1 * R) / R**3, 0.0, 2 * S / R**3
    u_x, u_y = v1 * nx, v1 * ny
    u_tt = v2 * nt * nt + v1 * ntt
    u_xx = v2 * nx * nx + v1 * nxx
    u_yy = v2 * ny * ny + v1 * nyy
    return u_tt - fp(v) * u_x**2 - f(v) * u_xx - gp(v) * u_y**2 - g(v) * u_yy


def test_first_integral_solutions_solve_the_original_pde(combo_trace):
    # the ODE driving the integration is exactly the first integral produced by the pipeline
    fi = combo_trace[0].first_integral
    ctx = fi.system.ctx
    assert fi.lhs == parse("D(v,n)*(f(v) + n^2*g(v) - c2^2*n^2 - c1^2 + 2*c1*c2*n)", ctx)
    v_of = _solution()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        t = rng.uniform(-1, 1)
        y = C2 * t + rng.uniform(1.0, 2.0)
        n = rng.uniform(-0.9, 1.9)
        x = C1 * t + n * (y - C2 * t)
        worst = max(worst, abs(_pde_residual(v_of, t, x, y)))
    assert worst < 1e-6


def test_solution_transport_control():
    # with the wrong wave speed the same profile is not a solution
    v_of = _solution()
    t, y = 0.4, 1.5
    x = C1 * t + 0.5 * (y - C2 * t)
    assert abs(_pde_residual(v_of, t, x, y, c1=C1 + 0.25)) > 1e-3
