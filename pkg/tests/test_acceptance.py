"""Acceptance criteria 1-11.

Each test prints one ``criterion N: PASS`` or ``criterion N: FAIL`` line (collected
again in the pytest terminal summary) and then asserts the same verdict.
Run ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

if __name__ == "__main__":  # pragma: no cover
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s"]))

import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doublereduction.cli import main as cli_main
from doublereduction.conservation import (
    ConservedVector,
    Equation,
    PdeSystem,
    association,
    bracket,
    check_divergence,
    divergence,
    reduce_mod_system,
)
from doublereduction.coordinates import (
    chain_rule_residuals,
    transform_conserved,
    transform_conserved_rowrep,
    transform_generator,
    transformed_bracket,
    transport_residual,
)
from doublereduction.expr import Deriv, derivative, is_zero, parse, to_str, total_derivative
from doublereduction.oracle import verify_all_zero, verify_zero
from doublereduction.pipeline import run_pipeline
from doublereduction.problem import load
from doublereduction.symmetry import Prolongation, combine

from cases import random_affine_case
from strategies import CTX, INDEPENDENTS, expressions, generator_pairs, generators, param_atoms

TOL = 1e-9
RESULTS = {}


def report(n, ok, detail=""):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def wave():
    return load("wave2p1")


@pytest.fixture(scope="module")
def trace(wave):
    start = time.perf_counter()
    tr = run_pipeline(wave.system, wave.conserved, wave.generators, wave.strategy)
    return tr, time.perf_counter() - start


def _changes(trace):
    """(change, incoming vector, full transformed system) for the wave stages and 40 random affine cases."""
    out = [(s.change, s.incoming, s.full_system) for s in trace[0].steps]
    for n in (2, 3):
        for seed in range(20):
            ch, T = random_affine_case(n, seed)
            out.append((ch, T, None))
    return out


def test_criterion_1_divergence(wave, capsys):
    start = time.perf_counter()
    T = wave.conserved
    symbolic = check_divergence(T)
    div = reduce_mod_system(divergence(T.components, T.ctx), T.system)
    numeric = verify_zero(div, T.ctx, samples=100, tol=TOL)
    code = cli_main(["check-div", "wave2p1", "--samples", "100"])
    capsys.readouterr()
    elapsed = time.perf_counter() - start
    ok = symbolic.holds and div.is_zero and numeric.passed and numeric.evaluated == 100 and code == 0 and elapsed < 5
    report(1, ok, f"max residual {numeric.max_abs_residual:.1e} over 100 samples, {elapsed:.2f} s")


def test_criterion_2_association(wave):
    start = time.perf_counter()
    T = wave.conserved
    P = lambda s: parse(s, T.ctx)
    rows = {g.name: association(T, g) for g in wave.generators}
    verdicts = {n: a.associated for n, a in rows.items()}
    numeric_agrees = all(
        verify_all_zero(a.reduced, T.ctx, samples=20).passed == a.associated for a in rows.values()
    )
    # hand expansion for X4 = t d/dt + x d/dx + y d/dy, t-component:
    #   W = -t u_t - x u_x - y u_y, zeta_t = D_t W + t u_tt + x u_tx + y u_ty = -u_t,
    #   X4(-u_t) + (-u_t) * div(xi) - T^j D_j(xi^t) = u_t - 3 u_t + u_t = -u_t
    zeta_t = P("-u_t - t*u_tt - x*u_xt - y*u_yt") + P("t*u_tt + x*u_tx + y*u_ty")
    hand = -zeta_t + P("-u_t") * 3 - P("-u_t")
    t_comp = rows["X4"].reduced[0]
    elapsed = time.perf_counter() - start
    ok = (
        verdicts == {"X1": True, "X2": True, "X3": True, "X4": False}
        and t_comp == P("-u_t") == hand
        and numeric_agrees
        and elapsed < 5
    )
    report(2, ok, f"X4 t-component {to_str(t_comp)}, {elapsed:.2f} s")


def test_criterion_3_first_reduction(trace):
    step = trace[0].steps[0]
    names = [n for n, _ in step.change.new_independents]
    defs = [to_str(d) for _, d in step.change.new_independents]
    got = [to_str(c) for c in step.full_T.components]
    ctx = step.change.target
    expected = [
        parse("c2^2*w_r + c1*c2*w_s - g(w)*w_r", ctx),
        parse("c1*c2*w_r + c1^2*w_s - f(w)*w_s", ctx),
        parse("-c2*w_r - c1*w_s", ctx),
    ]
    golden = [
        "-D(w,r)*g(w) + c2^2*D(w,r) + c1*c2*D(w,s)",
        "-D(w,s)*f(w) + c1^2*D(w,s) + c1*c2*D(w,r)",
        "-c2*D(w,r) - c1*D(w,s)",
    ]
    ok = (
        names == ["r", "s", "q"]
        and defs == ["y - c2*t", "x - c1*t", "t"]
        and list(step.full_T.components) == expected
        and got == golden
    )
    report(3, ok, "; ".join(f"T^{n} = {g}" for n, g in zip(names, got)))


def test_criterion_4_inherited(trace, wave):
    step = trace[0].steps[0]
    inh = transform_generator(wave.generator("X4"), step.change)
    ctx = inh.projected.ctx
    ok = (
        inh.inheritable
        and str(inh.projected) == "r*d/dr + s*d/ds"
        and inh.projected.xi["r"] == parse("r", ctx)
        and inh.projected.xi["s"] == parse("s", ctx)
        and all(e.is_zero for e in inh.projected.eta.values())
    )
    report(4, ok, f"X4 -> {inh.projected}")


def test_criterion_5_first_integral(trace):
    tr, elapsed = trace
    fi = tr.first_integral
    ctx = fi.system.ctx if fi else None
    defs = {n: to_str(d) for n, d in tr.definitions}
    orig = tr.system.ctx
    ok = (
        tr.complete
        and fi.lhs == parse("v_n*(-c2^2*n^2 + 2*c1*c2*n + n^2*g(v) - c1^2 + f(v))", ctx)
        and fi.constant_name == "C"
        and fi.verified
        and parse(defs["n"], orig) == parse("(x - c1*t)/(y - c2*t)", orig)
        and defs["v"] == "u"
        and elapsed < 30
    )
    report(5, ok, f"T^n = {to_str(fi.lhs)} = C, {elapsed:.2f} s")


def test_criterion_6_rowrep_equals_matrix_form(trace):
    worst, all_zero = 0.0, True
    cases = _changes(trace)
    for k, (ch, T, full) in enumerate(cases):
        a = transform_conserved(T, ch, full)
        b = transform_conserved_rowrep(T, ch, full)
        diffs = [x - y for x, y in zip(a.components, b.components)]
        all_zero &= all(d.is_zero for d in diffs)
        v = verify_all_zero(diffs, ch.target, samples=20, seed=k, tol=TOL)
        all_zero &= v.passed
        worst = max(worst, v.max_abs_residual)
    report(6, all_zero, f"{len(cases)} changes, max numeric residual {worst:.1e}")


def test_criterion_7_transport_identity(trace):
    worst, ok = 0.0, True
    cases = _changes(trace)
    for k, (ch, T, full) in enumerate(cases):
        Tt = transform_conserved(T, ch, full)
        r = transport_residual(T, Tt, ch)
        v = verify_zero(r, ch.target, samples=100, seed=k, tol=TOL)
        ok &= is_zero(r) and v.passed and v.evaluated == 100
        worst = max(worst, v.max_abs_residual)
    report(7, ok, f"{len(cases)} changes symbolic and 100 samples each, max residual {worst:.1e}")


def test_criterion_8_chain_rule(trace):
    worst, ok, count = 0.0, True, 0
    for k, (ch, T, _) in enumerate(_changes(trace)):
        for h in (T.components[0], T.components[0] * T.components[-1]):
            for r in chain_rule_residuals(h, ch):
                v = verify_zero(r, ch.target, samples=20, seed=k, tol=TOL)
                ok &= v.passed and v.evaluated == 20
                worst = max(worst, v.max_abs_residual)
                count += 1
    report(8, ok, f"{count} residuals at 20 bindings each, max {worst:.1e}")


def test_criterion_9_transformed_bracket(trace, wave):
    ok = True
    for step in trace[0].steps:
        br = transformed_bracket(step.incoming, step.used_generator, step.change)
        reduced = [reduce_mod_system(c, step.full_system) for c in br]
        ok &= all(is_zero(c) for c in reduced)
        ok &= verify_all_zero(reduced, step.change.target, samples=20, tol=TOL).passed
    step1 = trace[0].steps[0]
    br4 = [reduce_mod_system(c, step1.full_system) for c in transformed_bracket(wave.conserved, wave.generator("X4"), step1.change)]
    v4 = verify_all_zero(br4, step1.change.target, samples=20, tol=TOL)
    nonzero = not all(c.is_zero for c in br4) and not v4.passed and not v4.inconclusive
    report(9, ok and nonzero, f"associated stages vanish; X4 bracket max {v4.max_abs_residual:.1e}")


def test_criterion_10_order(trace):
    tr = trace[0]
    ok = tr.complete and tr.original_order == 2 and tr.final_order == 1 and tr.order_drops_by_one
    report(10, ok, f"order {tr.original_order} -> {tr.final_order}")


# criterion 11 ---------------------------------------------------------------------------------

CASES = 200


def _run(body, *strategies):
    """Run a property over CASES derandomized examples; returns the reprs of the inputs seen."""
    seen = []

    @settings(max_examples=CASES, derandomize=True, deadline=None, database=None)
    @given(st.tuples(*strategies))
    def prop(args):
        seen.append(repr(args))
        body(*args)

    prop()
    return seen


def _commute(e, i, j):
    lhs = total_derivative(total_derivative(e, j, CTX), i, CTX)
    assert is_zero(lhs - total_derivative(total_derivative(e, i, CTX), j, CTX), CTX)


def _leibniz(a, b, x):
    res = total_derivative(a * b, x, CTX) - a * total_derivative(b, x, CTX) - b * total_derivative(a, x, CTX)
    assert is_zero(res, CTX)


def _recursion(X, J, j):
    pro = Prolongation(X)
    rhs = total_derivative(pro.zeta("u", tuple(J)), j, CTX)
    for k in INDEPENDENTS:
        rhs = rhs - derivative(CTX, "u", tuple(J) + (k,)) * total_derivative(X.xi[k], j, CTX)
    assert is_zero(pro.zeta("u", tuple(J) + (j,)) - rhs, CTX)


_SYSTEM = PdeSystem((Equation(parse("u_tt - u_xx", CTX), Deriv("u", ("t", "t"))),), CTX)
_T = ConservedVector(tuple(parse(c, CTX) for c in ("-u_t", "f(u)*u_x", "u*u_y")), _SYSTEM)


def _linearity(pair, a, b):
    X, Y = pair
    both = bracket(_T, combine([(a, X), (b, Y)]))
    for lhs, bx, by in zip(both, bracket(_T, X), bracket(_T, Y)):
        assert is_zero(lhs - a * bx - b * by, CTX)


indep = st.sampled_from(INDEPENDENTS)
PROPERTIES = {
    "commuting derivatives": (_commute, expressions, indep, indep),
    "Leibniz": (_leibniz, expressions, expressions, indep),
    "prolongation recursion": (_recursion, generators(), st.lists(indep, max_size=2), indep),
    "bracket linearity": (_linearity, generator_pairs, param_atoms, param_atoms),
}


def test_criterion_11_property_suites():
    details, ok = [], True
    for name, (body, *strats) in PROPERTIES.items():
        try:
            first = _run(body, *strats)
            again = _run(body, *strats)
            passed = len(first) >= CASES and first == again
        except Exception as exc:  # a failing property must still produce a FAIL line
            passed, first = False, []
            details.append(f"{name} raised {type(exc).__name__}")
        ok &= passed
        details.append(f"{name} {len(first)}")
    report(11, ok, ", ".join(details) + " cases, seed-deterministic")
