"""Balance systems, the invariant-form contact decomposition, admissible variations,
the modified Poincare-Cartan form and the dual form."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .constitutive import ConstitutiveRelation, PCForm, build_cr, pc_form
from .expr import (JET, ZERO, Expr, Fn, field, jet, partial_derivative, sum_exprs)
from .forms import (W, Form, contact_decompose, contract, eta, exterior_d, k_dx, omega,
                    wedge)
from .jets import (ContextError, JetContext, VectorField, characteristic, prolong)


@dataclass
class BalanceSystem:
    ctx: JetContext
    residuals: list
    cr: Optional[ConstitutiveRelation] = None
    note: str = ''

    def __getitem__(self, mu: int) -> Expr:
        return self.residuals[mu]

    def __len__(self):
        return len(self.residuals)

    def combination(self, coeffs) -> Expr:
        return sum_exprs(Expr._coerce(c) * b for c, b in zip(coeffs, self.residuals))


def divergence_of(ctx: JetContext, flux_row, restricted: bool = False) -> Expr:
    """sum_i (d_i + lambda_i) K^i."""
    out = ZERO
    for i, K in enumerate(flux_row):
        K = Expr._coerce(K)
        if K.is_zero:
            continue
        d = ctx.total_derivative(K, i) if restricted else ctx.section_derivative(K, i)
        out = out + d + K * ctx.lam(i)
    return out


def balance_system(cr: ConstitutiveRelation, restricted: bool = False) -> BalanceSystem:
    """B_mu = d_i F^i_mu + lambda_i F^i_mu - Pi_mu.

    ``restricted`` uses the total derivative truncated to admitted coordinates
    (the one the exterior calculus sees); the default differentiates along
    sections and always produces the next jet coordinate.
    """
    ctx = cr.ctx
    res = [divergence_of(ctx, [cr.flux[i][mu] for i in range(ctx.n)], restricted) - cr.source[mu]
           for mu in range(ctx.m)]
    return BalanceSystem(ctx, res, cr)


def euler_lagrange(L: Expr, ctx: JetContext) -> BalanceSystem:
    """[d(L g)/dy - d_i(d(L g)/dz_i)] / g; equals -B of the Lagrangian relation."""
    if ctx.k != 1:
        raise ContextError("Euler-Lagrange residuals are computed for first-order Lagrangians")
    L = Expr._coerce(L)
    g = ctx.density
    Lg = L * g
    ginv = g ** -1
    res = []
    for mu in range(ctx.m):
        val = partial_derivative(Lg, field(mu))
        for m2, I in ctx.admitted_keys(1):
            if m2 == mu:
                val = val - ctx.section_derivative(partial_derivative(Lg, jet(mu, I)), I[0])
        res.append(val * ginv)
    bs = BalanceSystem(ctx, res, None, note='Euler-Lagrange form: E_mu = -B_mu')
    cr_bs = balance_system(build_cr('lagrangian', {'L': L}, ctx))
    for e, b in zip(res, cr_bs.residuals):
        if not (e + b).is_zero:
            raise AssertionError("Euler-Lagrange residual differs from the balance residual")
    return bs


# ---------------------------------------------------------------- one-contact coefficients


def eta_contact_coefficients(a: Form) -> dict:
    """(mu, I) -> f for a 1-contact (n+1)-form sum f omega^mu_I ^ eta."""
    ctx = a.ctx
    tail = tuple(k_dx(i) for i in range(ctx.n))
    ginv = ctx.density ** -1
    out = {}
    for w, c in a.terms.items():
        if len(w) != ctx.n + 1 or w[1:] != tail or w[0][0] != W:
            raise ValueError("form is not of the type (1-contact) ^ eta")
        out[(w[0][2], w[0][3])] = c * ginv
    return out


def _omega_eta(ctx, h, coeffs: dict) -> Form:
    vol = eta(ctx, h)
    out = Form(ctx, h)
    for (mu, I), c in coeffs.items():
        if not c.is_zero:
            out = out + wedge(omega(ctx, h, mu, I), vol).scale(c)
    return out


@dataclass
class IBSDecomposition:
    form: Form                 # d Theta^n + Pi_mu dy^mu ^ eta, lifted one order
    omega1: list               # -B_mu
    vertical_y: list           # d(p + zF)/dy^mu, the order-zero part of d_v(p + zF)
    block: dict                # (mu, I), |I| >= 1 -> coefficient of omega^mu_I ^ eta
    remainder: Form            # 2-contact part
    horizontal: Form

    @property
    def block_zero(self) -> bool:
        return all(c.is_zero for c in self.block.values())

    def reassemble(self) -> Form:
        ctx, h = self.form.ctx, self.form.h
        coeffs = {(mu, ()): self.omega1[mu] + self.vertical_y[mu] for mu in range(ctx.m)}
        coeffs.update(self.block)
        return self.horizontal + _omega_eta(ctx, h, coeffs) + self.remainder


def ibs_form(cr: ConstitutiveRelation) -> Form:
    """d Theta^n + Pi_mu dy^mu ^ eta (the source sign flip applied here only)."""
    pc = pc_form(cr)
    return exterior_d(pc.n_form) + pc.source_form


def predicted_block(cr: ConstitutiveRelation) -> dict:
    """Expected omega^{k+1} block: d(p+zF)/dz_I minus F^i on first-order entries."""
    ctx = cr.ctx
    Pt = cr.full_density()
    out = {}
    for mu, I in ctx.admitted_keys(ctx.k + 1):
        v = partial_derivative(Pt, jet(mu, I))
        if len(I) == 1:
            v = v - cr.flux[I[0]][mu]
        if len(I) <= ctx.k or not v.is_zero:
            out[(mu, I)] = v
    return out


def ibs_decomposition(ccr: ConstitutiveRelation) -> IBSDecomposition:
    if ccr.density is None:
        raise ValueError("the decomposition needs a covering relation (density p)")
    ctx = ccr.ctx
    form = ibs_form(ccr)
    parts = contact_decompose(form)
    while len(parts) < 3:
        parts.append(Form(ctx, form.h + 1))
    horizontal, one, rest = parts[0], parts[1], Form(ctx, form.h + 1)
    for extra in parts[2:]:
        rest = rest + extra
    if not horizontal.is_zero:
        raise AssertionError("horizontal part of the invariant form must vanish")
    coeffs = eta_contact_coefficients(one)
    Pt = ccr.full_density()
    vy = [partial_derivative(Pt, field(mu)) for mu in range(ctx.m)]
    bs = balance_system(ccr, restricted=True)
    omega1 = [-b for b in bs.residuals]
    block = {}
    for (mu, I), c in coeffs.items():
        if I:
            block[(mu, I)] = c
        else:
            expect = omega1[mu] + vy[mu]
            if not (c - expect).is_zero:
                raise AssertionError("omega coefficient of the invariant form disagrees with -B")
    expect = predicted_block(ccr)
    for key in set(block) | set(expect):
        if not (block.get(key, ZERO) - expect.get(key, ZERO)).is_zero:
            raise AssertionError(f"omega^{{k+1}} block disagrees at {key}")
    for key in expect:
        block.setdefault(key, ZERO)
    dec = IBSDecomposition(form.lift(form.h + 1), omega1, vy, block, rest, horizontal)
    if not (dec.reassemble() - dec.form).is_zero:
        raise AssertionError("reassembly of the invariant form failed")
    return dec


def is_semi_lagrangian(ccr: ConstitutiveRelation) -> bool:
    return ibs_decomposition(ccr).block_zero


# ---------------------------------------------------------------- admissibility


@dataclass
class CheckResult:
    ok: bool
    residual: Expr = ZERO
    detail: str = ''

    def __bool__(self):
        return self.ok


def has_jet_components(xi: VectorField) -> bool:
    return any(c.kind == JET for c, _ in xi.items())


def prolonged(xi: VectorField, order: int, ctx: JetContext) -> VectorField:
    return xi if has_jet_components(xi) else prolong(xi, order, ctx)


def admissible_check(xi: VectorField, cr: ConstitutiveRelation) -> CheckResult:
    """sum over admitted (mu, i) of omega^mu_i(xi) F^i_mu."""
    ctx = cr.ctx
    xi = prolonged(xi, ctx.k + 1, ctx)
    res = sum_exprs(characteristic(xi, ctx, mu, (i,)) * cr.flux[i][mu] for mu, i in cr.first_jets())
    return CheckResult(res.is_zero, res)


# ---------------------------------------------------------------- modified form and dual form


def modified_pc_form(ccr: ConstitutiveRelation) -> PCForm:
    """p eta + F dy ^ eta_i together with -(Pi omega + F omega_i) ^ eta, on order k + 1."""
    if ccr.density is None:
        raise ValueError("the modified form needs a covering relation (density p)")
    ctx = ccr.ctx
    h = ctx.k + 1
    base = pc_form(ccr, h)
    coeffs = {(mu, ()): -ccr.source[mu] for mu in range(ctx.m)}
    for mu, i in ccr.first_jets():
        coeffs[(mu, (i,))] = -ccr.flux[i][mu]
    return PCForm(base.n_form, _omega_eta(ctx, h, coeffs), modified=True, label=ccr.kind)


@dataclass
class ModifiedIdentity:
    omega1: list
    vertical: dict          # (mu, I) -> coefficient from d_v(p + zF), including I = ()
    remainder: Form
    holds: bool


def modified_decomposition(ccr: ConstitutiveRelation) -> ModifiedIdentity:
    """Decompose d Theta-hat^n - Theta-hat^{n+1} into -B omega ^ eta, d_v(p+zF) ^ eta and 2-contact."""
    ctx = ccr.ctx
    mod = modified_pc_form(ccr)
    D = exterior_d(mod.n_form) - mod.source_form
    parts = contact_decompose(D)
    while len(parts) < 3:
        parts.append(Form(ctx, D.h + 1))
    if not parts[0].is_zero:
        raise AssertionError("horizontal part must vanish")
    coeffs = eta_contact_coefficients(parts[1])
    omega1 = [-b for b in balance_system(ccr, restricted=True).residuals]
    Pt = ccr.full_density()
    vertical = {}
    for (mu, I), c in coeffs.items():
        v = c - omega1[mu] if not I else c
        if not v.is_zero:
            vertical[(mu, I)] = v
    holds = True
    for mu in range(ctx.m):
        if not (vertical.get((mu, ()), ZERO) - partial_derivative(Pt, field(mu))).is_zero:
            holds = False
    for mu, I in ctx.admitted_keys(ctx.k + 1):
        if not (vertical.get((mu, I), ZERO) - partial_derivative(Pt, jet(mu, I))).is_zero:
            holds = False
    rest = Form(ctx, D.h + 1)
    for extra in parts[2:]:
        rest = rest + extra
    return ModifiedIdentity(omega1, vertical, rest, holds)


def symbolic_vector_field(ctx: JetContext, order: int, prefix: str = 'X') -> VectorField:
    """Vector field whose components are opaque functions of every coordinate up to ``order``."""
    coords = tuple(ctx.base_coords() + ctx.field_coords() + ctx.jet_coords(order))
    comp = {}
    for i in range(ctx.n):
        comp[ctx.x(i)] = Expr.atom(Fn(f"{prefix}_{ctx.base_names[i]}", coords))
    for mu in range(ctx.m):
        comp[ctx.y(mu)] = Expr.atom(Fn(f"{prefix}_{ctx.field_names[mu]}", coords))
    for c in ctx.jet_coords(order):
        tag = "".join(ctx.base_names[i] for i in c.multi)
        comp[c] = Expr.atom(Fn(f"{prefix}_{ctx.field_names[c.index]}_{tag}", coords))
    return VectorField(comp, ctx)


def variational_identity(ccr: ConstitutiveRelation, xi: Optional[VectorField] = None) -> CheckResult:
    """i_xi (d Theta-hat^n - Theta-hat^{n+1}) + omega(xi) B eta is contact (lifted relations)."""
    ctx = ccr.ctx
    mod = modified_pc_form(ccr)
    D = exterior_d(mod.n_form) - mod.source_form
    if xi is None:
        xi = symbolic_vector_field(ctx, D.h)
    bs = balance_system(ccr, restricted=True)
    val = contract(xi, D)
    chk = Form(ctx, D.h)
    for mu in range(ctx.m):
        chk = chk + eta(ctx, D.h).scale(characteristic(xi, ctx, mu) * bs.residuals[mu])
    total = val + chk
    bad = Form(ctx, total.h, {w: c for w, c in total.terms.items() if not any(k[0] == W for k in w)})
    res = ZERO
    if not bad.is_zero:
        res = sum_exprs(bad.terms.values())
    return CheckResult(bad.is_zero, res)


@dataclass
class DualForm:
    value: Expr         # eta-coefficient from the exterior calculus
    expansion: Expr     # omega(xi) B + xi^i (d_i + lambda_i) P + P d_i xi^i + F d_i omega(xi)
    terms: dict

    @property
    def agrees(self) -> bool:
        return (self.value - self.expansion).is_zero


def dual_form_expansion(ccr: ConstitutiveRelation, xi: VectorField) -> DualForm:
    """eta-coefficient of d(i_xi Theta^n) - i_xi Theta^{n+1}."""
    if ccr.density is None:
        raise ValueError("the dual form needs a covering relation (density p)")
    ctx = ccr.ctx
    xi = prolonged(xi, ctx.k + 1, ctx)
    pc = pc_form(ccr)
    a = contract(xi, pc.n_form)
    b = contract(xi, pc.source_form)
    total = exterior_d(a) - b
    hor = contact_decompose(total)[0]
    word = tuple(k_dx(i) for i in range(ctx.n))
    value = hor.coefficient(word) * ctx.density ** -1
    bs = balance_system(ccr, restricted=True)
    Pt = ccr.full_density()
    om = [characteristic(xi, ctx, mu) for mu in range(ctx.m)]
    t1 = sum_exprs(om[mu] * bs.residuals[mu] for mu in range(ctx.m))
    t2 = sum_exprs(xi.base_part(i) * (ctx.total_derivative(Pt, i) + Pt * ctx.lam(i)) for i in range(ctx.n))
    t3 = Pt * sum_exprs(ctx.total_derivative(xi.base_part(i), i) for i in range(ctx.n))
    t4 = sum_exprs(ccr.flux[i][mu] * ctx.total_derivative(om[mu], i) for mu, i in ccr.first_jets())
    expansion = t1 + t2 + t3 + t4
    return DualForm(value, expansion, {'omega(xi) B': t1, 'xi (d + lambda) P': t2, 'P div xi': t3,
                                       'F d omega(xi)': t4})
