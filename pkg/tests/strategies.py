"""Hypothesis strategies for random expressions and generators."""

from hypothesis import strategies as st

from doublereduction.expr import ONE, Deriv, Var, VariableContext, const, exp_, from_atom, func, ln_

CTX = VariableContext(("t", "x", "y"), ("u",), ("a", "b"), ("f",), signatures=(("f", ("u",)),))
INDEPENDENTS = CTX.independents

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def _jet(index):
    return from_atom(Deriv("u", CTX.sort_index(index)))


jet_atoms = st.lists(st.sampled_from(INDEPENDENTS), min_size=0, max_size=2).map(_jet)
var_atoms = st.sampled_from(INDEPENDENTS).map(lambda x: from_atom(Var(x, "indep")))
param_atoms = st.sampled_from(CTX.parameters).map(lambda p: from_atom(Var(p, "param")))
constants = rationals.map(const)

leaves = st.one_of(var_atoms, jet_atoms, param_atoms, constants)


def _combine(children):
    return st.one_of(
        st.tuples(children, children).map(lambda p: p[0] + p[1]),
        st.tuples(children, children).map(lambda p: p[0] * p[1]),
        st.tuples(children, children).map(lambda p: p[0] - p[1]),
        children.map(lambda e: func("f", e)),
        st.tuples(children, st.integers(0, 2)).map(lambda p: p[0] ** p[1]),
    )


polynomials = st.recursive(leaves, _combine, max_leaves=6)
"""Polynomial expressions in variables, jets, parameters and f(...)."""


def _transcendental(children):
    return st.one_of(
        _combine(children),
        children.map(lambda e: exp_(e)),
        children.map(lambda e: ln_(e * e + ONE)),
        children.map(lambda e: (e * e + ONE) ** -1),
    )


expressions = st.recursive(leaves, _transcendental, max_leaves=5)
"""Also exp, ln and reciprocals (arguments kept away from singularities)."""

point_coefficients = st.recursive(
    st.one_of(var_atoms, param_atoms, constants.filter(lambda c: c != 0)),
    lambda ch: st.one_of(
        st.tuples(ch, ch).map(lambda p: p[0] + p[1]),
        st.tuples(ch, ch).map(lambda p: p[0] * p[1]),
        st.tuples(ch, st.sampled_from([from_atom(Deriv("u", ()))])).map(lambda p: p[0] * p[1]),
    ),
    max_leaves=4,
)
"""Coefficients of point generators: functions of t, x, y, u and parameters."""


@st.composite
def generators(draw, name="R"):
    """Point generators on CTX with a random subset of nonzero coefficients."""
    from doublereduction.symmetry import generator_from_coefficients

    coeffs = {}
    for label in ("xi_t", "xi_x", "xi_y", "eta_u"):
        if draw(st.booleans()):
            coeffs[label] = draw(point_coefficients)
    return generator_from_coefficients(name, CTX, coeffs)


generator_pairs = st.tuples(generators("X"), generators("Y"))
