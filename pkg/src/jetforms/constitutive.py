"""Constitutive relations, their Poincare-Cartan forms and variationality tests."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Mapping, Optional

from .expr import (JET, ONE, ZERO, Expr, compare, field, jet, partial_derivative, sum_exprs)
from .forms import (Form, W, dy, eta, eta_i, exterior_d, k_dx, omega, wedge)
from .jets import ContextError, JetContext

KINDS = ('generic', 'lagrangian', 'semi-lagrangian', 'L+D', 'spatial-lagrangian',
         'vector-potential', 'lifted')


class ConstitutiveRelation:
    """Flux F^i_mu, source Pi_mu and optional density p on a jet context.

    ``flux[i][mu]`` follows the convention upper index = base direction,
    lower index = field.
    """

    def __init__(self, ctx: JetContext, flux, source, density: Optional[Expr] = None,
                 kind: str = 'generic', data: Optional[dict] = None, check: bool = True):
        if kind not in KINDS:
            raise ValueError(f"unknown constitutive kind {kind!r}")
        n, m = ctx.n, ctx.m
        self.ctx = ctx
        self.flux = [[Expr._coerce(flux[i][mu]) if flux is not None else ZERO
                      for mu in range(m)] for i in range(n)]
        self.source = [Expr._coerce(source[mu]) if source is not None else ZERO for mu in range(m)]
        self.density = None if density is None else Expr._coerce(density)
        self.kind = kind
        self.data = dict(data or {})
        if check:
            for i in range(n):
                for mu in range(m):
                    ctx.check_admitted(self.flux[i][mu], what=f"F^{i + 1}_{mu + 1}")
            for mu in range(m):
                ctx.check_admitted(self.source[mu], what=f"Pi_{mu + 1}")
            if self.density is not None:
                ctx.check_admitted(self.density, what="p")

    @property
    def is_covering(self) -> bool:
        return self.density is not None

    def F(self, i: int, mu: int) -> Expr:
        return self.flux[i][mu]

    def Pi(self, mu: int) -> Expr:
        return self.source[mu]

    def first_jets(self) -> list:
        """Admitted first-order pairs (mu, i)."""
        return [(mu, I[0]) for mu, I in self.ctx.admitted_keys(1)]

    def full_density(self) -> Expr:
        """p + sum over admitted (mu, j) of z^mu_j F^j_mu (p = 0 for a bare relation)."""
        p = self.density if self.density is not None else ZERO
        return p + sum_exprs(Expr.atom(jet(mu, (j,))) * self.flux[j][mu] for mu, j in self.first_jets())

    def components(self):
        """Iterate (label, expr) over all stored components."""
        ctx = self.ctx
        if self.density is not None:
            yield 'p', self.density
        for i in range(ctx.n):
            for mu in range(ctx.m):
                yield f"F[{ctx.base_names[i]},{ctx.field_names[mu]}]", self.flux[i][mu]
        for mu in range(ctx.m):
            yield f"Pi[{ctx.field_names[mu]}]", self.source[mu]

    def map(self, fn) -> "ConstitutiveRelation":
        n, m = self.ctx.n, self.ctx.m
        return ConstitutiveRelation(
            self.ctx, [[fn(self.flux[i][mu]) for mu in range(m)] for i in range(n)],
            [fn(s) for s in self.source], None if self.density is None else fn(self.density),
            self.kind, self.data, check=False)

    def without_density(self) -> "ConstitutiveRelation":
        return ConstitutiveRelation(self.ctx, self.flux, self.source, None, 'generic', self.data, check=False)


def zero_cr(ctx: JetContext, density: bool = False) -> ConstitutiveRelation:
    return ConstitutiveRelation(ctx, None, None, ZERO if density else None)


def build_cr(kind: str, inputs: Mapping, ctx: JetContext) -> ConstitutiveRelation:
    """Standard constructors.

    lagrangian: L.  semi-lagrangian: L, Q (list).  L+D: L, D.
    spatial-lagrangian: L, F0 (list of time-direction fluxes; time is base index
    ``time`` default 0).  vector-potential: h (list of n expressions), Pi.
    generic: F (n x m nested lists), Pi, optional p.
    """
    n, m = ctx.n, ctx.m
    if kind == 'generic':
        return ConstitutiveRelation(ctx, inputs.get('F'), inputs.get('Pi'), inputs.get('p'), 'generic')
    if kind in ('lagrangian', 'semi-lagrangian', 'L+D'):
        if ctx.k != 1:
            raise ContextError(f"{kind} relations are defined for order k = 1 only")
        L = Expr._coerce(inputs['L'])
        ctx.check_admitted(L, what="L")
        F = [[ZERO] * m for _ in range(n)]
        for mu, I in ctx.admitted_keys(1):
            F[I[0]][mu] = partial_derivative(L, jet(mu, I))
        p = L - sum_exprs(Expr.atom(jet(mu, I)) * F[I[0]][mu] for mu, I in ctx.admitted_keys(1))
        if kind == 'lagrangian':
            Pi = [partial_derivative(L, field(mu)) for mu in range(m)]
            return ConstitutiveRelation(ctx, F, Pi, p, 'lagrangian', {'L': L})
        if kind == 'semi-lagrangian':
            Q = [Expr._coerce(q) for q in inputs['Q']]
            return ConstitutiveRelation(ctx, F, Q, p, 'semi-lagrangian', {'L': L, 'Q': Q})
        D = Expr._coerce(inputs['D'])
        t = inputs.get('time', 0)
        Pi = []
        for mu in range(m):
            if not ctx.admitted(mu, (t,)):
                raise ContextError("L+D relations need the time derivatives in the jet space")
            Pi.append(partial_derivative(D, jet(mu, (t,))) - partial_derivative(L, field(mu)))
        return ConstitutiveRelation(ctx, F, Pi, None, 'L+D', {'L': L, 'D': D})
    if kind == 'spatial-lagrangian':
        L = Expr._coerce(inputs['L'])
        t = inputs.get('time', 0)
        F0 = inputs['F0']
        F = [[ZERO] * m for _ in range(n)]
        for mu in range(m):
            F[t][mu] = Expr._coerce(F0[mu])
        for mu, I in ctx.admitted_keys(1):
            if I[0] != t:
                F[I[0]][mu] = partial_derivative(L, jet(mu, I))
        Pi = [partial_derivative(L, field(mu)) for mu in range(m)]
        return ConstitutiveRelation(ctx, F, Pi, None, 'spatial-lagrangian', {'L': L})
    if kind == 'vector-potential':
        h = [Expr._coerce(v) for v in inputs['h']]
        for v in h:
            if any(c.kind == JET for c in v.free_coords()):
                raise ContextError("vector potential must depend on (x, y) only")
        F = [[partial_derivative(h[i], field(mu)) for mu in range(m)] for i in range(n)]
        return ConstitutiveRelation(ctx, F, inputs.get('Pi'), None, 'vector-potential', {'h': h})
    if kind == 'lifted':
        return lift_cr(build_cr('generic', inputs, ctx))
    raise ValueError(f"unknown constitutive kind {kind!r}")


def lift_cr(cr: ConstitutiveRelation) -> ConstitutiveRelation:
    """Lifted covering relation: p = -sum over admitted (mu, j) of z^mu_j F^j_mu."""
    p = -sum_exprs(Expr.atom(jet(mu, (j,))) * cr.flux[j][mu] for mu, j in cr.first_jets())
    data = dict(cr.data)
    data['lifted_from'] = cr.kind
    return ConstitutiveRelation(cr.ctx, cr.flux, cr.source, p, 'lifted', data, check=False)


# ---------------------------------------------------------------- Poincare-Cartan forms


@dataclass
class PCForm:
    n_form: Form
    source_form: Form
    mod_eta: bool = False
    modified: bool = False
    label: str = ''


def pc_home_order(cr: ConstitutiveRelation) -> int:
    return cr.ctx.k


def pc_form(cr: ConstitutiveRelation, h: Optional[int] = None) -> PCForm:
    """Theta^n = p eta + F^i_mu dy^mu ^ eta_i and Theta^{n+1} = Pi_mu dy^mu ^ eta."""
    ctx = cr.ctx
    h = pc_home_order(cr) if h is None else h
    vol = eta(ctx, h)
    theta = Form(ctx, h)
    if cr.density is not None:
        theta = vol.scale(cr.density)
    for i in range(ctx.n):
        ei = eta_i(ctx, h, i)
        for mu in range(ctx.m):
            f = cr.flux[i][mu]
            if not f.is_zero:
                theta = theta + wedge(dy(ctx, h, mu), ei).scale(f)
    src = Form(ctx, h)
    for mu in range(ctx.m):
        if not cr.source[mu].is_zero:
            src = src + wedge(dy(ctx, h, mu), vol).scale(cr.source[mu])
    return PCForm(theta, src, mod_eta=cr.density is None, label=cr.kind)


def s_eta_pullback(cr: ConstitutiveRelation) -> Form:
    """Vertical-endomorphism construction of the lifted form at k = 1.

    For first order, S_eta maps dz^mu_i to omega^mu ^ eta_i and dy^mu to omega^mu ^ eta,
    so S*(F dz_i + Pi dy) = F omega ^ eta_i + Pi omega ^ eta.
    """
    ctx = cr.ctx
    if ctx.k != 1:
        raise ContextError("S_eta construction implemented for k = 1")
    h = 1
    out = Form(ctx, h)
    for mu, i in cr.first_jets():
        out = out + wedge(omega(ctx, h, mu), eta_i(ctx, h, i)).scale(cr.flux[i][mu])
    for mu in range(ctx.m):
        out = out + wedge(omega(ctx, h, mu), eta(ctx, h)).scale(cr.source[mu])
    return out


def k_form(cr: ConstitutiveRelation) -> Form:
    """K_C = (F^i_mu omega^mu_i + Pi_mu omega^mu) ^ eta on the order-2 layer."""
    ctx = cr.ctx
    if ctx.k != 1:
        raise ContextError("K_C is defined for first-order relations")
    h = 2
    vol = eta(ctx, h)
    acc = Form(ctx, h)
    for mu, i in cr.first_jets():
        acc = acc + omega(ctx, h, mu, (i,)).scale(cr.flux[i][mu])
    for mu in range(ctx.m):
        acc = acc + omega(ctx, h, mu).scale(cr.source[mu])
    return wedge(acc, vol)


@dataclass
class HelmholtzResult:
    closed: bool
    residuals: list = dc_field(default_factory=list)   # (label, Expr)
    dK: Optional[Form] = None

    def __bool__(self):
        return self.closed


def helmholtz_test(cr: ConstitutiveRelation) -> HelmholtzResult:
    """Closedness of K_C via the three antisymmetrized derivative families."""
    ctx = cr.ctx
    K = k_form(cr)
    dK = exterior_d(K)
    names = ctx.field_names
    bn = ctx.base_names
    res = []
    m = ctx.m
    firsts = cr.first_jets()
    for nu in range(m):
        for mu in range(nu + 1, m):
            r = partial_derivative(cr.source[mu], field(nu)) - partial_derivative(cr.source[nu], field(mu))
            if not r.is_zero:
                res.append((f"dPi_{names[mu]}/dy^{names[nu]} - dPi_{names[nu]}/dy^{names[mu]}", r))
    for nu in range(m):
        for mu, i in firsts:
            r = partial_derivative(cr.flux[i][mu], field(nu)) - partial_derivative(cr.source[nu], jet(mu, (i,)))
            if not r.is_zero:
                res.append((f"dF^{bn[i]}_{names[mu]}/dy^{names[nu]} - dPi_{names[nu]}/dz^{names[mu]}_{bn[i]}", r))
    for a in range(len(firsts)):
        for b in range(a + 1, len(firsts)):
            nu, j = firsts[a]
            mu, i = firsts[b]
            r = partial_derivative(cr.flux[j][nu], jet(mu, (i,))) - partial_derivative(cr.flux[i][mu], jet(nu, (j,)))
            if not r.is_zero:
                res.append((f"dF^{bn[j]}_{names[nu]}/dz^{names[mu]}_{bn[i]} - "
                            f"dF^{bn[i]}_{names[mu]}/dz^{names[nu]}_{bn[j]}", r))
    closed = not res
    if closed != dK.is_zero:
        raise AssertionError("Helmholtz families disagree with dK_C")
    return HelmholtzResult(closed, res, dK)


def interior_euler(k_c: Form, cr: Optional[ConstitutiveRelation] = None) -> Form:
    """First-order interior Euler operator on a 1-contact (n+1)-form.

    (A_mu omega^mu + A^i_mu omega^mu_i) ^ eta  ->  omega^mu ^ [A_mu - (d_i + lambda_i) A^i_mu] eta.
    """
    ctx = k_c.ctx
    n = ctx.n
    tail = tuple(k_dx(i) for i in range(n))
    g_inv = ctx.density ** -1
    A: dict = {}
    Ai: dict = {}
    for w, c in k_c.terms.items():
        if w[1:] != tail or w[0][0] != W:
            raise ValueError("interior Euler operator implemented for 1-contact first-order (n+1)-forms")
        _, r, mu, I = w[0]
        if r == 0:
            A[mu] = c * g_inv
        elif r == 1:
            Ai[(mu, I[0])] = c * g_inv
        else:
            raise ValueError("interior Euler operator implemented for first-order contact forms only")
    h = k_c.h
    out = Form(ctx, h)
    vol = eta(ctx, h)
    for mu in range(ctx.m):
        val = A.get(mu, ZERO)
        for i in range(n):
            a = Ai.get((mu, i))
            if a is not None:
                val = val - ctx.section_derivative(a, i) - a * ctx.lam(i)
        if not val.is_zero:
            out = out + wedge(omega(ctx, h, mu), vol).scale(val)
    return out


# ---------------------------------------------------------------- Lepage and Legendre


@dataclass
class LepageResult:
    lepage: bool
    lagrangian: Optional[Expr] = None
    failed: str = ''
    residuals: list = dc_field(default_factory=list)

    def __bool__(self):
        return self.lepage


def lepage_test(ccr: ConstitutiveRelation) -> LepageResult:
    if ccr.density is None:
        raise ValueError("Lepage test needs a covering relation (density p)")
    ctx = ccr.ctx
    for label, e in ccr.components():
        if label.startswith('Pi'):
            continue
        for c in e.free_coords():
            if c.kind == JET and len(c.multi) > 1:
                return LepageResult(False, None, "(a) density and fluxes must be first order",
                                    [(label, e)])
    Pt = ccr.full_density()
    res = []
    for mu, i in ccr.first_jets():
        r = partial_derivative(Pt, jet(mu, (i,))) - ccr.flux[i][mu]
        if not r.is_zero:
            res.append((f"d(p+zF)/dz^{ctx.field_names[mu]}_{ctx.base_names[i]} - F^{ctx.base_names[i]}_{ctx.field_names[mu]}", r))
    if res:
        return LepageResult(False, None, "(b) flux components are not z-derivatives of p + zF", res)
    return LepageResult(True, Pt)


def determinant(matrix: list) -> Expr:
    """Determinant by Laplace expansion along the first row (memoized on column sets)."""
    size = len(matrix)
    if size == 0:
        return ONE
    memo: dict = {}

    def minor(row: int, cols: tuple) -> Expr:
        if row == size:
            return ONE
        key = (row, cols)
        if key in memo:
            return memo[key]
        total = ZERO
        for pos, c in enumerate(cols):
            a = matrix[row][c]
            if a.is_zero:
                continue
            sub = minor(row + 1, cols[:pos] + cols[pos + 1:])
            term = a * sub
            total = total + (term if pos % 2 == 0 else -term)
        memo[key] = total
        return total

    return minor(0, tuple(range(size)))


def regularity_verdict(det: Expr, seed: int = 0, samples: int = 16) -> str:
    v = compare(det, ZERO, seed=seed, samples=samples)
    if v.certainty == 'exact':
        return 'degenerate' if v.equal else 'regular'
    return 'indeterminate (sampled)' + (': vanishes at samples' if v.equal else ': nonzero at samples')


@dataclass
class LegendreResult:
    density: Expr
    momenta: dict          # (i, mu) -> Expr
    hessian: list
    variables: list
    determinant: Expr
    verdict: str


def legendre_map(L: Expr, ctx: JetContext, seed: int = 0) -> LegendreResult:
    if ctx.k != 1:
        raise ContextError("the Legendre map is defined for first-order Lagrangians")
    ctx.check_admitted(L, what="L")
    vars_ = [jet(mu, I) for mu, I in ctx.admitted_keys(1)]
    momenta = {(c.multi[0], c.index): partial_derivative(L, c) for c in vars_}
    p = L - sum_exprs(Expr.atom(c) * momenta[(c.multi[0], c.index)] for c in vars_)
    H = [[partial_derivative(momenta[(a.multi[0], a.index)], b) for b in vars_] for a in vars_]
    det = determinant(H)
    return LegendreResult(p, momenta, H, vars_, det, regularity_verdict(det, seed))
