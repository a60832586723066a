import random
from fractions import Fraction

import numpy as np
import pytest

from jetforms.balance import balance_system
from jetforms.constitutive import ConstitutiveRelation
from jetforms.expr import ZERO, Expr, antiderivative, eval_numeric, field, fn, partial_derivative
from jetforms.jets import JetContext, vector_field
from jetforms.model import bundled_models, load_model
from jetforms.secondary import (SecondaryCandidate, cattaneo_build, drifted_production, eval_array,
                                ii_law_check, manifest_sign, original_law, ret_potential_residuals,
                                ret_secondary_from_potential, verify_secondary)
from jetforms.symmetry import gauge_law

from helpers import Y, Z, random_poly


def ret_context(n=2, m=2):
    return JetContext(n, m, 0, admitted=[])


def ret_cr(ctx, spatial, source=None):
    F = [[Y(mu) for mu in range(ctx.m)]] + spatial
    return ConstitutiveRelation(ctx, F, source or [ZERO] * ctx.m)


# ---------------------------------------------------------------- verification


def test_original_laws_verify_for_every_bundled_model():
    for name in bundled_models():
        model = load_model(name)
        bs = balance_system(model.cr)
        for mu in range(model.ctx.m):
            assert verify_secondary(bs, original_law(bs, mu))


def test_cattaneo_law_verifies_symbolically():
    model = cattaneo_build()
    assert model.verified.ok and model.verified.residual.is_zero
    assert all(a.name in ('tau', 'Lam', 'epseq', 'lamhat') for a in model.production.leaf_atoms()
               if a[0] == 'f')


def test_perturbed_candidate_fails():
    model = cattaneo_build()
    law = model.law
    bad = SecondaryCandidate([law.flux[0] + Y(1)] + law.flux[1:], law.source, law.multipliers)
    v = verify_secondary(balance_system(model.cr), bad)
    assert not v and not v.residual.is_zero
    assert v.residual == Z(1, 0)


def test_gauge_laws_verify_as_secondary_laws():
    model = cattaneo_build()
    ctx = model.ctx
    xi = vector_field(ctx, {}, {0: Expr.const(2), 2: Expr.const(-1)})
    law = gauge_law(model.cr, xi)
    cand = SecondaryCandidate(law.flux, law.source, [xi.field_part(mu) for mu in range(ctx.m)])
    assert verify_secondary(balance_system(model.cr), cand)


# ---------------------------------------------------------------- RET potentials


def test_symmetric_linear_flux_with_matching_potential():
    ctx = ret_context()
    # F^x = S y with S symmetric; h0 = |y|^2 / 2 makes every residual vanish
    spatial = [[2 * Y(0) + Y(1), Y(0) - Y(1)]]
    rep = ret_potential_residuals(ret_cr(ctx, spatial), (Y(0) ** 2 + Y(1) ** 2) * Fraction(1, 2))
    assert rep.ok and rep.verdict == 'regular'


def test_generic_flux_leaves_residuals():
    ctx = ret_context()
    spatial = [[Y(1), ZERO]]
    rep = ret_potential_residuals(ret_cr(ctx, spatial), (Y(0) ** 2 + Y(1) ** 2) * Fraction(1, 2))
    (label, r), = rep.residuals
    assert not r.is_zero


def test_single_field_has_no_residuals():
    ctx = ret_context(2, 1)
    rep = ret_potential_residuals(ret_cr(ctx, [[Y(0) ** 3]]), Y(0) ** 2)
    assert rep.residuals == []


def test_ret_needs_identity_time_flux():
    ctx = ret_context(2, 1)
    cr = ConstitutiveRelation(ctx, [[2 * Y(0)], [Y(0)]], [ZERO])
    with pytest.raises(ValueError):
        ret_potential_residuals(cr, Y(0) ** 2)
    jet_ctx = JetContext(2, 1, 1)
    with pytest.raises(ValueError):
        ret_potential_residuals(ConstitutiveRelation(jet_ctx, [[Y(0)], [Z(0, 1)]], [ZERO]), Y(0))


def test_single_field_law_from_potential():
    ctx = ret_context(2, 1)
    c = Expr.const(3)
    cr = ret_cr(ctx, [[c * Y(0)]], [-Y(0)])
    h0 = Y(0) ** 4
    cand = ret_secondary_from_potential(cr, h0)
    assert cand.multipliers == [4 * Y(0) ** 3]
    # d K / dy = lambda F' = 4 y^3 * 3
    assert cand.flux[1] == 3 * Y(0) ** 4
    assert cand.source == -4 * Y(0) ** 4


def test_single_field_with_function_flux_uses_antiderivative():
    ctx = ret_context(2, 1).with_functions({'phi': (field(0),)})
    phi = fn('phi', (field(0),))
    cr = ret_cr(ctx, [[phi]])
    cand = ret_secondary_from_potential(cr, Y(0) ** 2)
    assert cand.flux[1] == antiderivative(2 * Y(0) * partial_derivative(phi, field(0)), field(0))


def test_coordinate_potential_recovers_original_law():
    ctx = ret_context()
    spatial = [[Y(0) * Y(1), Y(1) * Y(1)]]
    cr = ret_cr(ctx, spatial, [ZERO, -Y(1)])
    for mu in range(2):
        # a linear h0 has a degenerate Hessian, so the law is checked through verification
        law = original_law(balance_system(cr), mu)
        assert verify_secondary(balance_system(cr), law)
        assert law.flux[0] == Y(mu)
    with pytest.raises(ValueError, match='degenerate'):
        ret_secondary_from_potential(ret_cr(ctx, [[Y(0), Y(1)]]), Y(0))


@pytest.mark.parametrize("seed", range(4))
def test_potential_laws_verify_for_symmetric_polynomial_fluxes(seed):
    rng = random.Random(seed)
    ctx = ret_context(2, 2)
    # F^x_mu = d phi / dy^mu gives symmetric Jacobians; h0 = |y|^2/2 then satisfies the system
    phi = random_poly(rng, ctx.field_coords(), 4, 3)
    spatial = [[partial_derivative(phi, field(mu)) for mu in range(2)]]
    cr = ret_cr(ctx, spatial, [random_poly(rng, ctx.field_coords(), 2, 2) for _ in range(2)])
    cand = ret_secondary_from_potential(cr, (Y(0) ** 2 + Y(1) ** 2) * Fraction(1, 2))
    assert verify_secondary(balance_system(cr), cand)


# ---------------------------------------------------------------- Cattaneo


def test_constant_lamhat_has_no_production():
    model = cattaneo_build(lamhat=Expr.const(5))
    assert model.production.is_zero and model.verified
    energy_law = original_law(balance_system(model.cr), 0)
    assert model.law.flux[1:] == [5 * f for f in energy_law.flux[1:]]


def test_fourier_like_instantiation():
    th = Y(0)
    model = cattaneo_build(tau=Expr.const(2), Lam=3 * th, lamhat=th ** -1)
    assert model.verified
    assert model.law.flux[1:] == [Y(A) * th ** -1 for A in range(1, 4)]
    q2 = sum((Y(A) ** 2 for A in range(1, 4)), ZERO)
    assert model.production == q2 * th ** -2 * Fraction(1, 3)
    verdict = ii_law_check(model, samples=2000)
    assert verdict.holds and verdict.minimum >= 0
    assert verdict.factor_sign == 1


def test_reversed_lamhat_fails_orientation():
    th = Y(0)
    model = cattaneo_build(tau=Expr.const(2), Lam=3 * th, lamhat=-th ** -1)
    verdict = ii_law_check(model, samples=2000)
    assert not verdict.holds and verdict.nonpositive


def test_production_vanishes_at_zero_heat_flux():
    th = Y(0)
    model = cattaneo_build(tau=Expr.const(2), Lam=3 * th, lamhat=th ** -1)
    verdict = ii_law_check(model, q_range=(0.0, 0.0), samples=100)
    assert verdict.minimum == 0.0 and verdict.maximum == 0.0


def test_symbolic_production_is_not_sampled():
    with pytest.raises(ValueError):
        ii_law_check(cattaneo_build())


def test_energy_form_matches_printed_expression():
    model = cattaneo_build()
    th = field(0)
    tau, Lam, epseq, lamhat = (fn(k, (th,)) for k in ('tau', 'Lam', 'epseq', 'lamhat'))
    d = lambda e: partial_derivative(e, th)
    ratio = d(lamhat) * d(Lam) ** -1
    bracket = d(tau) * d(Lam) ** -1 * Fraction(1, 2) - tau * d(lamhat) ** -1 * d(ratio) * Fraction(1, 2)
    q2 = sum((Y(A) ** 2 for A in range(1, 4)), ZERO)
    expect = epseq + bracket * q2
    rng = random.Random(0)
    for _ in range(20):
        asg = {a: rng.uniform(0.5, 2.0) for a in (model.energy - expect).leaf_atoms()}
        assert abs(eval_numeric(model.energy - expect, asg)) < 1e-9


def test_drift_terms_make_production_change_sign():
    th = Y(0)
    model = cattaneo_build(tau=Expr.const(2), Lam=3 * th, lamhat=th ** -1)
    k = Expr.const(1)
    prod = drifted_production(model, [k, ZERO, ZERO])
    theta = 2.0
    lp, Lp = -1.0 / theta ** 2, 3.0
    # completing the square: the minimum sits at q1 = -k / (2 lamhat')
    q_min = -1.0 / (2 * lp)
    vals = {field(0): np.array([theta, theta]), field(1): np.array([q_min, 10 * q_min]),
            field(2): np.zeros(2), field(3): np.zeros(2)}
    low, high = eval_array(prod, vals)
    assert low < 0 < high
    assert low == pytest.approx(-(1.0 ** 2) / (4 * abs(lp) * Lp))


def test_manifest_sign():
    assert manifest_sign(Y(0) ** -2 * Fraction(1, 3)) == 1
    assert manifest_sign(-Y(0) ** 2) == -1
    assert manifest_sign(Y(0)) is None
