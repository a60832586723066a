import random

import pytest
from hypothesis import given, settings, strategies as st

from jetforms.expr import ONE, Expr, partial_derivative
from jetforms.forms import (Form, NotLiftable, SpaceError, con_differential, contact_decompose,
                            contract, d_extra, d_function, dx, dy, dz, eta, eta_i, eta_ik, exterior_d,
                            is_horizontal, lie_derivative, omega, split_dh_dv, wedge)
from jetforms.jets import JetContext, lift_n_plus_1, p_source, prolong, vector_field

from helpers import X, Y, Z, coords_of, random_context, random_form, random_poly, random_structure_field


def _sym(n=3, m=1, k=1):
    return JetContext(n, m, k, density='symbolic')


# ---------------------------------------------------------------- wedge and the volume identities


def test_wedge_basics():
    ctx = JetContext(2, 1, 1)
    assert wedge(dx(ctx, 1, 0), dx(ctx, 1, 0)).is_zero
    assert wedge(dx(ctx, 1, 0), dx(ctx, 1, 1)) == -wedge(dx(ctx, 1, 1), dx(ctx, 1, 0))


def test_wedge_rejects_other_context():
    a, b = JetContext(2, 1, 1), JetContext(2, 1, 1)
    with pytest.raises(SpaceError):
        wedge(dx(a, 1, 0), dx(b, 1, 0))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_volume_identities_with_symbolic_density(n):
    ctx = _sym(n)
    h = 1
    vol = eta(ctx, h)
    for i in range(n):
        for j in range(n):
            lhs = wedge(dx(ctx, h, j), eta_i(ctx, h, i))
            assert lhs == (vol if i == j else Form(ctx, h))
        assert exterior_d(eta_i(ctx, h, i)) == vol.scale(ctx.lam(i))
    for i in range(n):
        for k in range(n):
            for j in range(n):
                lhs = wedge(dx(ctx, h, j), eta_ik(ctx, h, i, k))
                rhs = Form(ctx, h)
                if j == k:
                    rhs = rhs + eta_i(ctx, h, i)
                if j == i:
                    rhs = rhs - eta_i(ctx, h, k)
                assert lhs == rhs
            lhs = exterior_d(eta_ik(ctx, h, i, k))
            rhs = eta_i(ctx, h, i).scale(ctx.lam(k)) - eta_i(ctx, h, k).scale(ctx.lam(i))
            assert lhs == rhs


# ---------------------------------------------------------------- d


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 2), st.booleans())
def test_d_squared_vanishes(seed, degree, partial):
    rng = random.Random(seed)
    ctx = random_context(rng, partial=partial)
    a = random_form(rng, ctx, ctx.k, degree)
    assert exterior_d(exterior_d(a)).is_zero


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_d_is_a_graded_derivation(seed):
    rng = random.Random(seed)
    ctx = random_context(rng, k_max=1)
    p = rng.randint(0, 2)
    a, b = random_form(rng, ctx, 1, p, 2), random_form(rng, ctx, 1, rng.randint(0, 2), 2)
    lhs = exterior_d(wedge(a, b))
    da = wedge(exterior_d(a), b)
    db = wedge(a, exterior_d(b))
    assert lhs == (da + db if p % 2 == 0 else da - db)


def test_d_of_function_times_volume_is_vertical():
    rng = random.Random(2)
    ctx = JetContext(2, 2, 1)
    for _ in range(5):
        f = random_poly(rng, coords_of(ctx, 1), 4, 3)
        lhs = exterior_d(eta(ctx, 1).scale(f))
        _, dv = split_dh_dv(ctx, 0, f)
        assert lhs == wedge(dv, eta(ctx, 1))
        assert all(any(k[0] != 3 for k in w) for w in lhs.terms)


def test_d_of_contact_form_is_minus_dz_wedge_dx():
    ctx = JetContext(2, 1, 1)
    lhs = exterior_d(omega(ctx, 1, 0))
    rhs = -(wedge(dz(ctx, 1, 0, (0,)), dx(ctx, 1, 0)) + wedge(dz(ctx, 1, 0, (1,)), dx(ctx, 1, 1)))
    assert lhs == rhs


def test_d_rejects_coefficients_above_home_order():
    ctx = JetContext(1, 1, 2)
    with pytest.raises(SpaceError):
        d_function(ctx, 1, Z(0, 0, 0))


# ---------------------------------------------------------------- contraction and Lie derivative


def test_contract_examples():
    ctx = JetContext(2, 2, 1)
    h = 1
    assert contract(vector_field(ctx, {0: ONE}), eta(ctx, h)) == eta_i(ctx, h, 0)
    xi = vector_field(ctx, {}, {0: X(0), 1: Y(0)})
    assert contract(xi, omega(ctx, h, 1)) == Form.scalar(ctx, h, Y(0))
    for j in range(2):
        # the total lift of d/dx^j sees dy through z_j
        dj = vector_field(ctx, {j: ONE}, {0: Z(0, j)})
        lhs = contract(dj, wedge(dy(ctx, h, 0), eta(ctx, h)))
        rhs = -wedge(dy(ctx, h, 0), eta_i(ctx, h, j)) + eta(ctx, h).scale(Z(0, j))
        assert lhs == rhs
        bare = contract(vector_field(ctx, {j: ONE}), wedge(dy(ctx, h, 0), eta(ctx, h)))
        assert bare == -wedge(dy(ctx, h, 0), eta_i(ctx, h, j))


def test_contract_on_contact_form_gives_characteristic():
    ctx = JetContext(2, 1, 1)
    xi = vector_field(ctx, {0: X(1), 1: ONE}, {0: Y(0)})
    val = contract(prolong(xi, 1, ctx), omega(ctx, 1, 0))
    assert val == Form.scalar(ctx, 1, Y(0) - X(1) * Z(0, 0) - Z(0, 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_contract_is_an_antiderivation(seed):
    rng = random.Random(seed)
    ctx = random_context(rng, k_max=1)
    xi = prolong(random_structure_field(rng, ctx), 1, ctx)
    p = rng.randint(1, 2)
    a, b = random_form(rng, ctx, 1, p, 2), random_form(rng, ctx, 1, rng.randint(1, 2), 2)
    lhs = contract(xi, wedge(a, b))
    ia = wedge(contract(xi, a), b)
    ib = wedge(a, contract(xi, b))
    assert lhs == (ia + ib if p % 2 == 0 else ia - ib)
    assert contract(xi, contract(xi, a)).is_zero


def test_lie_derivative_of_dx_along_translation():
    ctx = JetContext(2, 1, 1)
    assert lie_derivative(vector_field(ctx, {0: ONE}), dx(ctx, 1, 0)).is_zero


@pytest.mark.parametrize("seed", range(4))
def test_lifted_field_preserves_source_form(seed):
    rng = random.Random(seed)
    ctx = JetContext(rng.randint(1, 2), rng.randint(1, 2), 1)
    xi = random_structure_field(rng, ctx)
    lifted = lift_n_plus_1(xi, ctx)
    form = Form(ctx, 0)
    for mu in range(ctx.m):
        form = form + wedge(dy(ctx, 0, mu).scale(Expr.atom(p_source(mu))), eta(ctx, 0))
    assert lie_derivative(lifted, form).is_zero


# ---------------------------------------------------------------- contact structure


def test_dy_decomposes_into_contact_and_horizontal_parts():
    ctx = JetContext(2, 1, 1)
    parts = contact_decompose(dy(ctx, 0, 0))
    assert parts[0] == dx(ctx, 1, 0).scale(Z(0, 0)) + dx(ctx, 1, 1).scale(Z(0, 1))
    assert parts[1] == omega(ctx, 1, 0)


def test_horizontal_top_form_is_its_own_decomposition():
    ctx = JetContext(2, 1, 1)
    f = eta(ctx, 1).scale(Y(0) * Z(0, 1))
    parts = contact_decompose(f)
    assert len(parts) == 1 and parts[0] == f.lift(2)


def test_decomposition_of_df_matches_total_derivatives():
    ctx = JetContext(2, 2, 1)
    F = Y(0) * Z(1, 0) + X(1) * Z(0, 1) * Z(0, 1)
    parts = contact_decompose(d_function(ctx, 1, F))
    for i in range(2):
        assert parts[0].coefficient(((3, i),)) == ctx.total_derivative(F, i)
    expect = Form(ctx, 2)
    for c in F.free_coords():
        if c.kind in (1, 2):
            mu, I = c.index, c.multi if c.kind == 2 else ()
            expect = expect + omega(ctx, 2, mu, I).scale(partial_derivative(F, c))
    assert parts[1] == expect


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_decomposition_round_trips_and_grades(seed):
    rng = random.Random(seed)
    ctx = random_context(rng, k_max=1)
    a = random_form(rng, ctx, 0, rng.randint(1, 2), 3)
    parts = contact_decompose(a)
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    assert total == a.lift(1)
    assert is_horizontal(parts[0])
    for i, p in enumerate(parts):
        assert all(sum(1 for key in w if key[0] == 0) == i for w in p.terms)


def test_decomposition_rejects_fibre_differentials():
    ctx = JetContext(1, 1, 1)
    with pytest.raises(NotLiftable):
        contact_decompose(d_extra(ctx, 1, p_source(0)))


def test_split_examples():
    ctx = JetContext(2, 1, 1)
    comps, dv = split_dh_dv(ctx, 0, X(0))
    assert comps == [ONE, Expr.const(0)] and dv.is_zero
    comps, dv = split_dh_dv(ctx, 0, Y(0))
    assert comps == [Z(0, 0), Z(0, 1)] and dv == omega(ctx, 1, 0)


def test_horizontal_d_squares_to_zero():
    rng = random.Random(4)
    ctx = JetContext(2, 2, 2)
    for _ in range(5):
        f = random_poly(rng, coords_of(ctx, 0), 3, 2) * random_poly(rng, coords_of(ctx, 0), 3, 2)
        for i in range(2):
            for j in range(2):
                assert ctx.total_derivative(ctx.total_derivative(f, i), j) == \
                    ctx.total_derivative(ctx.total_derivative(f, j), i)


# ---------------------------------------------------------------- con-differential


def test_con_differential_examples():
    rng = random.Random(6)
    ctx = JetContext(2, 1, 1)
    alpha = random_form(rng, ctx, 1, 1)
    first, second = con_differential(alpha, Form(ctx, 1))
    assert first == -exterior_d(alpha) and second.is_zero
    beta = random_form(rng, ctx, 1, 2)
    a2, b2 = con_differential(*con_differential(alpha, beta))
    assert a2.is_zero and b2.is_zero


def test_con_differential_rejects_degree_mismatch():
    ctx = JetContext(2, 1, 1)
    with pytest.raises(SpaceError):
        con_differential(dx(ctx, 1, 0), dx(ctx, 1, 0))
    with pytest.raises(SpaceError):
        con_differential(Form.scalar(ctx, 1, Y(0)), eta(ctx, 1))


def test_con_differential_of_balance_pair():
    ctx = JetContext(2, 1, 1)
    F = [Y(0) * Z(0, 0), Z(0, 1)]
    Pi = Y(0) * Y(0)
    Fm = eta_i(ctx, 1, 0).scale(F[0]) + eta_i(ctx, 1, 1).scale(F[1])
    first, second = con_differential(Fm, eta(ctx, 1).scale(Pi))
    div = ctx.total_derivative(F[0], 0) + ctx.total_derivative(F[1], 1)
    parts = contact_decompose(first)
    assert parts[0] == eta(ctx, 2).scale(Pi - div)
    assert second == wedge(d_function(ctx, 1, Pi), eta(ctx, 1))
