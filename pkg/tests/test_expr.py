import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from jetforms.expr import (Expr, SubstitutionError, UnassignedAtom, antiderivative, base,
                           canonicalize, compare, diff, equals, eval_numeric, exp, field, fn, jet,
                           partial_derivative, substitute)
from jetforms.jets import JetContext
from jetforms.parse import ParseError, parse_expr
from jetforms.printing import to_latex, to_text

from helpers import atom_of, atom_sympy, coords_of, random_poly, sym_equal, to_sympy


@pytest.fixture
def ctx():
    c = JetContext(2, 2, 1)
    return c.with_functions({'L': tuple(coords_of(c))})


# ---------------------------------------------------------------- parsing


def test_product_is_ordered_canonically(ctx):
    a = parse_expr("y[1]*x[1]", ctx)
    b = parse_expr("x[1]*y[1]", ctx)
    assert a == b
    assert to_text(a, ctx) == to_text(b, ctx)


def test_declared_function_parses_to_plain_atom(ctx):
    e = parse_expr("L(x,y,z)", ctx)
    (mono, c), = e.terms.items()
    (atom, p), = mono
    assert atom[0] == 'f' and atom.name == 'L' and atom.derivs == () and c == 1 and p == 1
    assert parse_expr("L", ctx) == e


def test_diff_call_matches_partial_derivative(ctx):
    L = parse_expr("L", ctx)
    assert parse_expr("diff(L, z[1,(1)])", ctx) == partial_derivative(L, jet(0, (0,)))


@pytest.mark.parametrize("text, pos", [
    ("x[1] +", 6),
    ("x[3]", 2),
    ("foo(x[1])", 0),
    ("(x[1]", 5),
])
def test_parse_errors_report_position(ctx, text, pos):
    with pytest.raises(ParseError) as info:
        parse_expr(text, ctx)
    assert info.value.pos == pos
    assert "column" in str(info.value)


def test_non_admitted_jet_is_rejected():
    ctx = JetContext(2, 1, 1, admitted=[(0, (0,))])
    assert parse_expr("z[1,1]", ctx) == Expr.atom(jet(0, (0,)))
    with pytest.raises(ParseError, match="not admitted"):
        parse_expr("z[1,2]", ctx)


def test_rational_literals_and_powers(ctx):
    e = parse_expr("3/4*x[1]^2 - x[1]^(-1)", ctx)
    assert eval_numeric(e, {base(0): 2.0}) == pytest.approx(3 - 0.5)


# ---------------------------------------------------------------- derivatives


def test_product_rule_on_jets():
    e = Expr.atom(jet(0, (0,))) * Expr.atom(jet(1, (0,)))
    assert partial_derivative(e, jet(0, (0,))) == Expr.atom(jet(1, (0,)))


def test_function_atom_rule_and_commuting_partials(ctx):
    L = parse_expr("L", ctx)
    Ly = partial_derivative(L, field(0))
    assert Ly.is_monomial and Ly != L
    a = partial_derivative(Ly, jet(0, (0,)))
    b = partial_derivative(partial_derivative(L, jet(0, (0,))), field(0))
    assert a == b


def test_derivative_by_non_argument_vanishes():
    f = fn('f', (field(0),))
    assert partial_derivative(f, base(0)).is_zero
    assert partial_derivative(f, field(0)) == fn('f', (field(0),), (field(0),))


def test_antiderivative_is_undone_by_its_variable():
    th = field(0)
    g = fn('g', (th,))
    integral = antiderivative(g, th)
    assert partial_derivative(integral, th) == g
    assert partial_derivative(integral, base(0)).is_zero


def test_derivative_matches_sympy_oracle():
    rng = random.Random(11)
    ctx = JetContext(2, 2, 2)
    atoms = coords_of(ctx)
    f = fn('f', tuple(ctx.field_coords()))
    for _ in range(40):
        e = random_poly(rng, atoms, 4, 3) * (f + random_poly(rng, atoms, 2, 1))
        v = rng.choice(atoms)
        mine = to_sympy(partial_derivative(e, v))
        oracle = sp.diff(to_sympy(e), atom_sympy(v))
        assert sym_equal(mine, oracle)


def test_exp_atom_chain_rule():
    x = Expr.atom(base(0))
    e = exp(x * x)
    assert partial_derivative(e, base(0)) == 2 * x * e


# ---------------------------------------------------------------- substitution


def test_substitute_concrete_function_rewrites_derivatives(ctx):
    L = parse_expr("L", ctx)
    Lz = partial_derivative(L, jet(0, (0,)))
    z = Expr.atom(jet(0, (0,)))
    assert substitute(Lz, {atom_of(L): z * z * Fraction(1, 2)}) == z


def test_substitute_empty_is_identity(ctx):
    e = parse_expr("L*x[1] + y[2]^2", ctx)
    assert substitute(e, {}) == e


def test_substitute_coordinates_simultaneously():
    x, y = Expr.atom(base(0)), Expr.atom(field(0))
    e = x * y + x
    assert substitute(e, {base(0): y, field(0): x}) == y * x + y


def test_inconsistent_derivative_binding_is_rejected(ctx):
    L = parse_expr("L", ctx)
    Lz = partial_derivative(L, jet(0, (0,)))
    z = Expr.atom(jet(0, (0,)))
    with pytest.raises(SubstitutionError):
        substitute(L + Lz, {atom_of(L): z * z, atom_of(Lz): z})


# ---------------------------------------------------------------- equality and evaluation


def test_ring_identity_and_distinct_atoms():
    x, y = Expr.atom(base(0)), Expr.atom(field(0))
    assert equals((x + y) ** 2, x * x + 2 * x * y + y * y)
    F11 = fn('F11', (jet(0, (0,)),))
    F12 = fn('F12', (jet(0, (0,)),))
    assert not equals(F11, F12)


def test_reciprocal_identity_is_probable():
    x, y = Expr.atom(base(0)), Expr.atom(field(0))
    a = (x + y) ** -1 * (x + y) ** 2
    v = compare(a, x + y)
    assert v.equal
    b = (x + y) ** -1 * x + (x + y) ** -1 * y
    v = compare(b, Expr.const(1))
    assert v.equal and v.certainty == 'probable'
    assert not compare(b, Expr.const(2)).equal


def test_eval_numeric_examples():
    x = Expr.atom(base(0))
    assert eval_numeric(x * x, {base(0): 3.0}) == 9.0
    assert eval_numeric(exp(x), {base(0): 0.0}) == 1.0
    zt, zx = Expr.atom(jet(0, (0,))), Expr.atom(jet(0, (1,)))
    L = (zt * zt - zx * zx) * Fraction(1, 2)
    assert eval_numeric(L, {jet(0, (0,)): 2.0, jet(0, (1,)): 1.0}) == 1.5


def test_eval_numeric_errors():
    x = Expr.atom(base(0))
    with pytest.raises(UnassignedAtom):
        eval_numeric(x, {})
    with pytest.raises(ZeroDivisionError):
        eval_numeric(x ** -1, {base(0): 0.0})


# ---------------------------------------------------------------- properties

CTX = JetContext(2, 2, 2, base_names=['t', 'x'], field_names=['u', 'v'])
ATOMS = coords_of(CTX)
FUNCS = {'f': (field(0), jet(0, (0,))), 'g': tuple(CTX.field_coords())}
PCTX = CTX.with_functions(FUNCS)


@st.composite
def exprs(draw, depth=2):
    leaves = [Expr.atom(a) for a in ATOMS] + [fn(nm, args) for nm, args in FUNCS.items()]
    if depth == 0 or draw(st.booleans()):
        if draw(st.booleans()):
            return Expr.const(Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 3))))
        return draw(st.sampled_from(leaves))
    a = draw(exprs(depth=depth - 1))
    b = draw(exprs(depth=depth - 1))
    op = draw(st.sampled_from(['+', '-', '*', 'pow', 'd']))
    if op == '+':
        return a + b
    if op == '-':
        return a - b
    if op == '*':
        return a * b
    if op == 'pow':
        return a ** draw(st.integers(0, 3))
    return partial_derivative(a, draw(st.sampled_from(ATOMS)))


@settings(max_examples=60, deadline=None)
@given(exprs(depth=3))
def test_canonicalize_is_idempotent(e):
    c = canonicalize(e)
    assert canonicalize(c) == c
    assert c.key() == canonicalize(c).key()


@settings(max_examples=60, deadline=None)
@given(exprs(depth=3), st.sampled_from(ATOMS), st.sampled_from(ATOMS))
def test_partial_derivatives_commute(e, a, b):
    assert equals(diff(e, a, b), diff(e, b, a))


@settings(max_examples=60, deadline=None)
@given(exprs(depth=3))
def test_print_parse_round_trip(e):
    assert parse_expr(to_text(e, PCTX), PCTX) == e


@settings(max_examples=60, deadline=None)
@given(exprs(depth=2))
def test_latex_printer_is_total(e):
    assert isinstance(to_latex(e, PCTX), str)


@settings(max_examples=30, deadline=None)
@given(exprs(depth=2), exprs(depth=2), st.integers(0, 10_000))
def test_equals_agrees_with_numeric_evaluation(a, b, seed):
    rng = random.Random(seed)
    same = equals(a, b)
    diff_ = a - b
    atoms = diff_.leaf_atoms()
    agree = True
    for _ in range(32):
        asg = {t: rng.uniform(0.3, 1.7) for t in atoms}
        if abs(eval_numeric(diff_, asg)) > 1e-9:
            agree = False
            break
    if same:
        assert agree
    assert equals(a, a + 0)
