"""Symmetries of constitutive relations, Noether balance laws, energy-momentum and gauge laws."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

from .balance import (BalanceSystem, balance_system, divergence_of, prolonged,
                      _omega_eta)
from .constitutive import ConstitutiveRelation, lift_cr, pc_form
from .expr import (JET, ONE, ZERO, Expr, base, compare, compose, field, jet, partial_derivative, substitute,
                   sum_exprs)
from .forms import (DX, Form, contact_decompose, contract, d_function, dy, eta, eta_i, exterior_d,
                    k_dx, wedge)
from .jets import (JetContext, StructureError, VectorField, characteristic, check_projectable,
                   check_structure, divergence, vector_field)


class RefusedError(ValueError):
    """A precondition of a law constructor failed; ``residuals`` lists what is nonzero."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals or [])


# ---------------------------------------------------------------- balance laws


@dataclass
class BalanceLaw:
    ctx: JetContext
    flux: list                 # K^i
    source: Expr               # Q
    certificate: list          # c_mu
    name: str = ''
    residual: Expr = ZERO
    notes: list = dc_field(default_factory=list)

    @property
    def verified(self) -> bool:
        return self.residual.is_zero

    def divergence(self) -> Expr:
        return divergence_of(self.ctx, self.flux)


def certificate_residual(ctx: JetContext, flux, source, coeffs, bs: BalanceSystem) -> Expr:
    """(d_i + lambda_i) K^i - Q - sum c_mu B_mu."""
    return divergence_of(ctx, flux) - Expr._coerce(source) - bs.combination(coeffs)


def make_law(ctx, flux, source, coeffs, bs, name='', notes=None) -> BalanceLaw:
    flux = [Expr._coerce(k) for k in flux]
    coeffs = [Expr._coerce(c) for c in coeffs]
    source = Expr._coerce(source)
    res = certificate_residual(ctx, flux, source, coeffs, bs)
    return BalanceLaw(ctx, flux, source, coeffs, name, res, list(notes or []))


# ---------------------------------------------------------------- transformation of relations


def _check_inverse(ctx, forward: dict, inverse: dict, seed: int):
    for c, f in forward.items():
        back = compose(f, inverse)
        v = compare(back, Expr.atom(c), seed=seed)
        if not v.equal:
            raise ValueError(f"supplied inverse fails the composition check for {c!r}")


def transform_cr(ccr: ConstitutiveRelation, x_map: Sequence, y_map: Sequence,
                 x_inv: Sequence, y_inv: Sequence, seed: int = 0) -> ConstitutiveRelation:
    """Push a relation forward along x' = X(x), y' = Y(x, y) (orders 0 and 1).

    The new Poincare-Cartan form is the pullback of the old one along the
    inverse map and its first jet prolongation.
    """
    ctx = ccr.ctx
    n, m = ctx.n, ctx.m
    if ctx.k > 1:
        raise ValueError("transform_cr supports orders k <= 1")
    xs = ctx.base_coords()
    ys = ctx.field_coords()
    X = [Expr._coerce(e) for e in x_map]
    Y = [Expr._coerce(e) for e in y_map]
    Xi = [Expr._coerce(e) for e in x_inv]
    Yi = [Expr._coerce(e) for e in y_inv]
    for e in X + Xi:
        if not e.free_coords() <= set(xs):
            raise ValueError("base map must depend on base coordinates only")
    inv = {**dict(zip(xs, Xi)), **dict(zip(ys, Yi))}
    fwd = {**dict(zip(xs, X)), **dict(zip(ys, Y))}
    _check_inverse(ctx, fwd, inv, seed)
    _check_inverse(ctx, inv, fwd, seed)
    # old coordinates in terms of new ones
    sub = dict(inv)
    jac = [[compose(partial_derivative(X[l], xs[j]), dict(zip(xs, Xi))) for j in range(n)] for l in range(n)]
    for mu, I in ctx.admitted_keys(1):
        j = I[0]
        val = sum_exprs(ctx.section_derivative(Yi[mu], l) * jac[l][j] for l in range(n))
        sub[jet(mu, I)] = val
    pc = pc_form(ccr, 0)
    images = {}
    for i in range(n):
        images[(DX, i)] = d_function(ctx, 0, Xi[i])
    for mu in range(m):
        images[('dy', mu)] = d_function(ctx, 0, Yi[mu])

    def pull(a: Form) -> Form:
        out = Form(ctx, 0)
        for w, c in a.terms.items():
            piece = Form.scalar(ctx, 0, substitute(c, sub))
            for key in w:
                img = images[(DX, key[1])] if key[0] == DX else images[('dy', key[2])]
                piece = wedge(piece, img)
            out = out + piece
        return out

    th = pull(pc.n_form)
    src = pull(pc.source_form)
    g = ctx.density

    def read(form: Form, basis: Form) -> Expr:
        (w, s), = basis.terms.items()
        return form.coefficient(w) * (s ** -1)

    full = tuple(k_dx(i) for i in range(n))
    p_new = None
    if ccr.density is not None:
        p_new = th.coefficient(full) * g ** -1
    F = [[read(th, wedge(dy(ctx, 0, mu), eta_i(ctx, 0, i))) for mu in range(m)] for i in range(n)]
    Pi = [read(src, wedge(dy(ctx, 0, mu), eta(ctx, 0))) for mu in range(m)]
    out = ConstitutiveRelation(ctx, F, Pi, p_new, 'generic', {'transformed_from': ccr.kind}, check=False)
    for label, e in out.components():
        ctx.check_admitted(e, what=label)
    return out


# ---------------------------------------------------------------- symmetry residuals


@dataclass
class SymmetryReport:
    residual_I: Optional[Expr]
    residual_II: dict          # (i, mu) -> Expr
    residual_III: dict         # mu -> Expr
    redundancy: dict = dc_field(default_factory=dict)
    label: str = ''

    @property
    def nonzero(self) -> list:
        out = []
        if self.residual_I is not None and not self.residual_I.is_zero:
            out.append(('I', self.residual_I))
        out += [(f"II[{i},{mu}]", e) for (i, mu), e in sorted(self.residual_II.items()) if not e.is_zero]
        out += [(f"III[{mu}]", e) for mu, e in sorted(self.residual_III.items()) if not e.is_zero]
        return out

    @property
    def flux_symmetric(self) -> bool:
        return all(e.is_zero for e in self.residual_II.values())

    @property
    def source_symmetric(self) -> bool:
        return all(e.is_zero for e in self.residual_III.values())

    @property
    def verdict(self) -> str:
        if not self.nonzero:
            return 'symmetry'
        if self.flux_symmetric or self.source_symmetric:
            return 'conditional'
        return 'not a symmetry'


def _prepare_field(xi: VectorField, ctx: JetContext, order: int) -> VectorField:
    check_projectable(xi, ctx)
    for mu in range(ctx.m):
        if any(c.kind == JET for c in xi.field_part(mu).free_coords()):
            raise StructureError("xi^mu must not depend on jet variables")
    return prolonged(xi, order, ctx)


def symmetry_residuals(ccr: ConstitutiveRelation, xi: VectorField,
                       flux_in_source: bool = True) -> SymmetryReport:
    """Residuals I, II^i_mu, III_mu of the infinitesimal symmetry system.

    ``flux_in_source`` keeps the F^i_mu d(xi^mu_i)/dy^nu term in III (the
    printed form); set it False for the plain Lie derivative of Theta.
    """
    ctx = ccr.ctx
    n, m = ctx.n, ctx.m
    xi = _prepare_field(xi, ctx, max(ctx.k, 1))
    div = divergence(xi, ctx)
    X = [xi.base_part(i) for i in range(n)]
    Y = [xi.field_part(mu) for mu in range(m)]
    F = ccr.flux
    firsts = ccr.first_jets()
    res_I = None
    if ccr.density is not None:
        res_I = xi(ccr.density) + ccr.density * div
        for i in range(n):
            for mu in range(m):
                if not F[i][mu].is_zero:
                    res_I = res_I + F[i][mu] * partial_derivative(Y[mu], base(i))
    II = {}
    for i in range(n):
        for nu in range(m):
            v = xi(F[i][nu]) + F[i][nu] * div
            for mu in range(m):
                v = v + F[i][mu] * partial_derivative(Y[mu], field(nu))
            for j in range(n):
                v = v - F[j][nu] * partial_derivative(X[i], base(j))
            II[(i, nu)] = v
    III = {}
    for nu in range(m):
        v = xi(ccr.source[nu]) + ccr.source[nu] * div
        for mu in range(m):
            v = v + ccr.source[mu] * partial_derivative(Y[mu], field(nu))
        if flux_in_source:
            for mu, i in firsts:
                v = v + F[i][mu] * partial_derivative(xi.jet_part(mu, (i,)), field(nu))
        III[nu] = v
    red = {}
    for b, I in ctx.admitted_keys(1):
        a = I[0]
        v = ZERO
        for s in range(m):
            v = v + F[a][s] * partial_derivative(Y[s], field(b))
        for j in range(n):
            v = v - F[j][b] * partial_derivative(X[a], base(j))
        for s, j in firsts:
            v = v - F[j][s] * partial_derivative(xi.jet_part(s, (j,)), jet(b, (a,)))
        red[(a, b)] = v
    return SymmetryReport(res_I, II, III, red)


def prop11_residual(lifted: ConstitutiveRelation, report: SymmetryReport) -> Expr:
    """I + sum z^nu_k II^k_nu, which vanishes for lifted relations."""
    out = report.residual_I
    for nu, k in lifted.first_jets():
        out = out + Expr.atom(jet(nu, (k,))) * report.residual_II[(k, nu)]
    return out


# ---------------------------------------------------------------- connections


class Connection:
    """Gamma^mu_i(x, y); horizontal lifts d_i + Gamma^mu_i d_{y^mu}."""

    def __init__(self, ctx: JetContext, gamma=None):
        self.ctx = ctx
        n, m = ctx.n, ctx.m
        self.gamma = [[Expr._coerce(gamma[i][mu]) if gamma is not None else ZERO for mu in range(m)]
                      for i in range(n)]
        for row in self.gamma:
            for g in row:
                if any(c.kind == JET for c in g.free_coords()):
                    raise ValueError("connection coefficients must depend on (x, y) only")

    @classmethod
    def zero(cls, ctx):
        return cls(ctx)

    def lift(self, i: int) -> VectorField:
        return vector_field(self.ctx, {i: ONE}, {mu: self.gamma[i][mu] for mu in range(self.ctx.m)})

    def check(self):
        for i in range(self.ctx.n):
            try:
                check_structure(self.lift(i), self.ctx)
            except StructureError as exc:
                raise ValueError(f"connection incompatible with the admitted set: {exc}") from None


def homogeneity_check(cr: ConstitutiveRelation, conn: Connection, directions=None) -> dict:
    conn.check()
    dirs = range(cr.ctx.n) if directions is None else directions
    out = {}
    for i in dirs:
        rep = symmetry_residuals(cr, conn.lift(i))
        rep.label = cr.ctx.base_names[i]
        out[i] = rep
    return out


# ---------------------------------------------------------------- momentum maps and Noether


@dataclass
class MomentumMap:
    form: Form           # J = -i_xi Theta^n
    normal: Form         # -[(p + zF) xi^i + F^i omega(xi)] eta_i
    remainder: Form
    remainder_d_contact: bool

    def eta_i_coefficients(self) -> list:
        ctx = self.form.ctx
        out = []
        for i in range(ctx.n):
            basis = eta_i(ctx, self.form.h, i)
            (w, s), = basis.terms.items()
            out.append(self.normal.coefficient(w) * s ** -1)
        return out


def momentum_map(ccr: ConstitutiveRelation, xi: VectorField) -> MomentumMap:
    ctx = ccr.ctx
    check_projectable(xi, ctx)
    h = ctx.k
    xi_k = prolonged(xi, h, ctx)
    cr = ccr if ccr.density is not None else lift_cr(ccr)
    pc = pc_form(cr, h)
    J = -contract(xi_k, pc.n_form)
    Pt = cr.full_density()
    normal = Form(ctx, h)
    for i in range(ctx.n):
        c = Pt * xi.base_part(i) + sum_exprs(cr.flux[i][mu] * characteristic(xi, ctx, mu) for mu in range(ctx.m))
        normal = normal - eta_i(ctx, h, i).scale(c)
    rem = J - normal
    parts = contact_decompose(exterior_d(rem))
    return MomentumMap(J, normal, rem, parts[0].is_zero)


def noether_core(cr: ConstitutiveRelation, xi: VectorField, name: str = '') -> BalanceLaw:
    """K^i = (p+zF) xi^i + F^i omega(xi) with the matching source; certificate omega(xi)."""
    ctx = cr.ctx
    ccr = cr if cr.density is not None else lift_cr(cr)
    Pt = ccr.full_density()
    om = [characteristic(xi, ctx, mu) for mu in range(ctx.m)]
    X = [xi.base_part(i) for i in range(ctx.n)]
    K = [Pt * X[i] + sum_exprs(cr.flux[i][mu] * om[mu] for mu in range(ctx.m)) for i in range(ctx.n)]
    Q = sum_exprs(cr.source[mu] * om[mu] for mu in range(ctx.m))
    defect = sum_exprs(cr.flux[i][mu] * ctx.section_derivative(om[mu], i)
                       for i in range(ctx.n) for mu in range(ctx.m) if not cr.flux[i][mu].is_zero)
    Q = Q + defect
    if not Pt.is_zero:
        Q = Q + sum_exprs(X[i] * (ctx.section_derivative(Pt, i) + Pt * ctx.lam(i)) for i in range(ctx.n))
        Q = Q + Pt * sum_exprs(partial_derivative(X[i], base(i)) for i in range(ctx.n))
    notes = []
    if defect.is_zero:
        notes.append('admissible: flux defect term vanishes')
    if Q.is_zero:
        notes.append('conservation law')
    bs = balance_system(cr)
    return make_law(ctx, K, Q, om, bs, name, notes)


def noether_law(cr: ConstitutiveRelation, xi: VectorField, name: str = '') -> BalanceLaw:
    check_projectable(xi, cr.ctx)
    rep = symmetry_residuals(lift_cr(cr), xi)
    if not rep.flux_symmetric:
        raise RefusedError("xi is not a symmetry of the flux part", rep.nonzero)
    law = noether_core(cr, xi, name)
    if not law.verified:
        raise AssertionError("Noether certificate identity failed")
    return law


@dataclass
class EMTensor:
    T: list                 # T[j][i] = F^j_mu (Gamma^mu_i - z^mu_i)
    connection: Connection
    laws: dict              # direction -> BalanceLaw


def energy_momentum(cr: ConstitutiveRelation, conn: Optional[Connection] = None,
                    directions=None) -> EMTensor:
    ctx = cr.ctx
    conn = conn or Connection.zero(ctx)
    dirs = list(range(ctx.n)) if directions is None else list(directions)
    reports = homogeneity_check(cr, conn, dirs)
    bad = [(ctx.base_names[i], r.nonzero) for i, r in reports.items() if r.nonzero]
    if bad:
        raise RefusedError("relation is not homogeneous in the requested directions", bad)
    T = []
    for j in range(ctx.n):
        row = []
        for i in range(ctx.n):
            row.append(sum_exprs(cr.flux[j][mu] * (conn.gamma[i][mu] - _z_or_zero(ctx, mu, i))
                                 for mu in range(ctx.m)))
        T.append(row)
    laws = {}
    for i in dirs:
        law = noether_core(cr, conn.lift(i), name=f"energy-momentum[{ctx.base_names[i]}]")
        if not law.verified:
            raise AssertionError("energy-momentum identity failed")
        laws[i] = law
    return EMTensor(T, conn, laws)


def _z_or_zero(ctx, mu, i) -> Expr:
    return Expr.atom(jet(mu, (i,))) if ctx.admitted(mu, (i,)) else ZERO


def fdiv(cr: ConstitutiveRelation, xi: VectorField) -> Expr:
    ctx = cr.ctx
    return sum_exprs(cr.flux[i][mu] * ctx.section_derivative(xi.field_part(mu), i)
                     for i in range(ctx.n) for mu in range(ctx.m) if not cr.flux[i][mu].is_zero)


def gauge_law(cr: ConstitutiveRelation, xi: VectorField, name: str = '') -> BalanceLaw:
    ctx = cr.ctx
    if any(not xi.base_part(i).is_zero for i in range(ctx.n)):
        raise ValueError("gauge laws need a vertical vector field")
    r = fdiv(cr, xi)
    if not r.is_zero:
        raise RefusedError("FDiv(xi) does not vanish", [('FDiv', r)])
    Y = [xi.field_part(mu) for mu in range(ctx.m)]
    K = [sum_exprs(Y[mu] * cr.flux[i][mu] for mu in range(ctx.m)) for i in range(ctx.n)]
    Q = sum_exprs(Y[mu] * cr.source[mu] for mu in range(ctx.m))
    law = make_law(ctx, K, Q, Y, balance_system(cr), name)
    if not law.verified:
        raise AssertionError("gauge certificate identity failed")
    return law


@dataclass
class SourceCharge:
    form: Form
    d_contact: bool
    law: Optional[BalanceLaw] = None


def source_form(cr: ConstitutiveRelation) -> Form:
    """(Pi_mu omega^mu + F^i_mu omega^mu_i) ^ eta on order k + 1 (any k)."""
    ctx = cr.ctx
    coeffs = {(mu, ()): cr.source[mu] for mu in range(ctx.m)}
    for mu, i in cr.first_jets():
        coeffs[(mu, (i,))] = cr.flux[i][mu]
    return _omega_eta(ctx, ctx.k + 1, coeffs)


def source_charge(ccr: ConstitutiveRelation, xi: VectorField) -> SourceCharge:
    ctx = ccr.ctx
    rep = symmetry_residuals(ccr, xi)
    if not rep.source_symmetric:
        raise RefusedError("xi is not a symmetry of the source part", rep.nonzero)
    xi_p = prolonged(xi, ctx.k + 1, ctx)
    q = contract(xi_p, source_form(ccr))
    closed = contact_decompose(exterior_d(q))[0].is_zero
    law = None
    word = tuple(k_dx(i) for i in range(ctx.n))
    hor = contact_decompose(q)[0] if not q.is_zero else q
    if q.is_zero or hor.coefficient(word).is_zero:
        law = noether_core(ccr, xi, name='conservation law')
    return SourceCharge(q, closed, law)
