import random
from pathlib import Path

import pytest
import sympy as sp

from jetforms.balance import (admissible_check, balance_system, dual_form_expansion, euler_lagrange,
                              ibs_decomposition, is_semi_lagrangian, modified_decomposition,
                              modified_pc_form, symbolic_vector_field, variational_identity)
from jetforms.constitutive import ConstitutiveRelation, build_cr, lift_cr, zero_cr
from jetforms.expr import ONE, ZERO, Expr, sum_exprs
from jetforms.jets import JetContext, characteristic, prolong, vector_field
from jetforms.model import load_model
from jetforms.printing import to_text
from jetforms.secondary import cattaneo_build

from helpers import (X, Y, Z, coord_symbol, coords_of, random_lagrangian, random_poly,
                     random_structure_field, sym_equal, sym_total, to_sympy, wave_context, wave_lagrangian)

GOLDEN = Path(__file__).parent / 'golden'


def random_ccr(rng, ctx, density=True):
    atoms = coords_of(ctx, ctx.k)
    F = [[random_poly(rng, atoms, 3, 2) for _ in range(ctx.m)] for _ in range(ctx.n)]
    Pi = [random_poly(rng, atoms, 3, 2) for _ in range(ctx.m)]
    p = random_poly(rng, atoms, 3, 2) if density else None
    return ConstitutiveRelation(ctx, F, Pi, p)


# ---------------------------------------------------------------- balance systems


def test_zero_relation_has_zero_residuals():
    bs = balance_system(zero_cr(JetContext(3, 2, 1)))
    assert all(b.is_zero for b in bs.residuals)


def test_cattaneo_residuals_against_sympy():
    model = cattaneo_build()
    ctx = model.ctx
    bs = balance_system(model.cr)
    th = coord_symbol(ctx.y(0))
    tau, Lam = sp.Function('tau')(th), sp.Function('Lam')(th)
    q = [coord_symbol(ctx.y(A)) for A in range(1, 4)]
    eps = to_sympy(model.energy)
    expect0 = sym_total(eps, 0, ctx) + sum(sym_total(q[A], A + 1, ctx) for A in range(3))
    assert sym_equal(to_sympy(bs[0]), expect0)
    for A in range(3):
        expect = sym_total(tau * q[A], 0, ctx) + sym_total(Lam, A + 1, ctx) + q[A]
        assert sym_equal(to_sympy(bs[A + 1]), expect)


def _fluid_expectation(ctx):
    """The five-field system written out in sympy, independently of the model file."""
    y = [coord_symbol(ctx.y(mu)) for mu in range(5)]
    rho, v, e = y[0], y[1:4], y[4]
    f = lambda name: sp.Function(name)(*y)
    t = [[f(f't{a + 1}{b + 1}') for b in range(3)] for a in range(3)]
    force = [f(f'f{a + 1}') for a in range(3)]
    heat = [f(f'h{a + 1}') for a in range(3)]
    r = f('r')
    D = lambda expr, i: sym_total(expr, i, ctx)
    v2 = sum(vb ** 2 for vb in v)
    total_e = rho * v2 / 2 + e
    mass = D(rho, 0) + sum(D(rho * v[B], B + 1) for B in range(3))
    mom = [D(rho * v[A], 0) + sum(D(rho * v[A] * v[B] / 2 + t[A][B], B + 1) for B in range(3)) - force[A]
           for A in range(3)]
    energy = D(total_e, 0) + sum(
        D(total_e * v[B] + sum(t[B][C] * v[C] for C in range(3)) - heat[B], B + 1) for B in range(3))
    energy -= sum(force[B] * v[B] for B in range(3)) + r
    return [mass, *mom, energy]


def test_five_field_fluid_reproduces_the_balance_equations():
    model = load_model('fluid5.model')
    bs = balance_system(model.cr)
    for mine, oracle in zip(bs.residuals, _fluid_expectation(model.ctx)):
        assert sym_equal(to_sympy(mine), oracle)


def golden_lines(bs, ctx):
    lines = []
    for mu, res in enumerate(bs.residuals):
        terms = sorted(to_text(Expr({mono: c}), ctx) for mono, c in res.terms.items())
        lines += [f"{ctx.field_names[mu]}\t{t}" for t in terms]
    return lines


def test_five_field_fluid_matches_golden_file():
    model = load_model('fluid5.model')
    lines = golden_lines(balance_system(model.cr), model.ctx)
    assert (GOLDEN / 'fluid5_balance.txt').read_text().splitlines() == lines


# ---------------------------------------------------------------- Euler-Lagrange


def test_wave_equation():
    ctx = wave_context()
    E = euler_lagrange(wave_lagrangian(ctx), ctx)
    assert E[0] == Z(0, 1, 1) - Z(0, 0, 0)
    assert balance_system(build_cr('lagrangian', {'L': wave_lagrangian(ctx)}, ctx))[0] == Z(0, 0, 0) - Z(0, 1, 1)


def test_euler_lagrange_of_linear_potential():
    ctx = JetContext(2, 1, 1)
    assert euler_lagrange(Y(0), ctx)[0] == ONE


def test_euler_lagrange_with_symbolic_density():
    ctx = JetContext(2, 1, 1, density='symbolic')
    L = Z(0, 0) * Z(0, 1) + Y(0) * Z(0, 1)
    E = euler_lagrange(L, ctx)
    flat = JetContext(2, 1, 1)
    extra = sum_exprs(ctx.lam(i) * build_cr('lagrangian', {'L': L}, ctx).F(i, 0) for i in range(2))
    assert not extra.is_zero
    assert E[0] == euler_lagrange(L, flat)[0] - extra
    assert E[0] == -balance_system(build_cr('lagrangian', {'L': L}, ctx))[0]


@pytest.mark.parametrize("seed", range(10))
def test_euler_lagrange_is_minus_balance(seed):
    rng = random.Random(seed)
    ctx = JetContext(rng.randint(1, 3), rng.randint(1, 2), 1)
    L = random_lagrangian(rng, ctx)
    E = euler_lagrange(L, ctx)
    B = balance_system(build_cr('lagrangian', {'L': L}, ctx))
    assert all((e + b).is_zero for e, b in zip(E.residuals, B.residuals))


# ---------------------------------------------------------------- invariant-form decomposition


@pytest.mark.parametrize("seed", range(6))
def test_decomposition_reassembles_for_random_relations(seed):
    rng = random.Random(seed)
    ctx = JetContext(rng.randint(1, 2), rng.randint(1, 2), rng.randint(1, 2))
    cr = random_ccr(rng, ctx)
    dec = ibs_decomposition(cr)
    assert dec.reassemble() == dec.form
    bs = balance_system(cr, restricted=True)
    assert all((w + b).is_zero for w, b in zip(dec.omega1, bs.residuals))


def test_lifted_relation_block_is_the_flux():
    rng = random.Random(3)
    ctx = JetContext(2, 2, 1)
    cr = lift_cr(random_ccr(rng, ctx, density=False))
    dec = ibs_decomposition(cr)
    for (mu, I), c in dec.block.items():
        expect = -cr.F(I[0], mu) if len(I) == 1 else ZERO
        assert c == expect
    assert all(v.is_zero for v in dec.vertical_y)


@pytest.mark.parametrize("seed", range(4))
def test_lagrangian_relation_has_no_block(seed):
    rng = random.Random(seed)
    ctx = JetContext(2, 2, 1)
    cr = build_cr('lagrangian', {'L': random_lagrangian(rng, ctx)}, ctx)
    assert ibs_decomposition(cr).block_zero and is_semi_lagrangian(cr)


def test_decomposition_needs_density():
    with pytest.raises(ValueError):
        ibs_decomposition(zero_cr(JetContext(1, 1, 1)))


# ---------------------------------------------------------------- admissibility


def test_vertical_field_depending_on_base_only():
    ctx = wave_context()
    cr = build_cr('lagrangian', {'L': wave_lagrangian(ctx)}, ctx)
    res = admissible_check(vector_field(ctx, {}, {0: X(0) + 2 * X(1)}), cr)
    assert not res and res.residual == Z(0, 0) - 2 * Z(0, 1)
    assert admissible_check(vector_field(ctx, {}, {0: Expr.const(5)}), cr)


def test_translation_admissibility_residual():
    ctx = wave_context()
    cr = build_cr('lagrangian', {'L': wave_lagrangian(ctx)}, ctx)
    for j in range(2):
        res = admissible_check(vector_field(ctx, {j: ONE}), cr)
        expect = -sum_exprs(cr.F(i, 0) * Z(0, i, j) for i in range(2))
        assert res.residual == expect


def test_semi_lagrangian_block_kills_every_variation():
    rng = random.Random(5)
    ctx = JetContext(2, 1, 1)
    L = random_lagrangian(rng, ctx)
    cr = build_cr('semi-lagrangian', {'L': L, 'Q': [Y(0) * Z(0, 1)]}, ctx)
    dec = ibs_decomposition(cr)
    xi = symbolic_vector_field(ctx, 2)
    contracted = sum_exprs(c * characteristic(xi, ctx, mu, I) for (mu, I), c in dec.block.items())
    assert contracted.is_zero
    # the admissibility sum on its own still reports a residual
    assert admissible_check(xi, cr).residual


# ---------------------------------------------------------------- modified form and dual form


def test_modified_identity_for_lifted_cattaneo_and_symbolic_field():
    model = cattaneo_build()
    lifted = lift_cr(model.cr)
    assert variational_identity(lifted)
    mod = modified_decomposition(lifted)
    assert mod.holds and not mod.vertical
    bs = balance_system(lifted, restricted=True)
    assert all((w + b).is_zero for w, b in zip(mod.omega1, bs.residuals))


def test_modified_form_of_zero_relation():
    pc = modified_pc_form(zero_cr(JetContext(2, 1, 1), density=True))
    assert pc.n_form.is_zero and pc.source_form.is_zero


def test_non_lifted_relation_shows_extra_blocks():
    ctx = JetContext(1, 1, 1)
    cr = ConstitutiveRelation(ctx, [[Z(0, 0)]], [Y(0)], Y(0) * Y(0))
    mod = modified_decomposition(cr)
    assert mod.holds and mod.vertical
    assert mod.vertical[(0, ())] == 2 * Y(0)
    assert not variational_identity(cr)


def test_dual_form_for_constant_vertical_shift():
    model = cattaneo_build()
    lifted = lift_cr(model.cr)
    ctx = model.ctx
    xi = vector_field(ctx, {}, {0: ONE})
    dual = dual_form_expansion(lifted, xi)
    assert dual.agrees
    assert dual.value == balance_system(lifted, restricted=True)[0]
    assert dual_form_expansion(lifted, vector_field(ctx)).value.is_zero


@pytest.mark.parametrize("seed", range(4))
def test_dual_form_expansion_matches_exterior_calculus(seed):
    rng = random.Random(seed)
    ctx = JetContext(rng.randint(1, 2), rng.randint(1, 2), 1)
    cr = random_ccr(rng, ctx)
    xi = prolong(random_structure_field(rng, ctx, 1), 2, ctx)
    assert dual_form_expansion(cr, xi).agrees
