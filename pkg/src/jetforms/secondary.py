"""Secondary balance laws: certificate verification, the RET multiplier construction
and the Cattaneo heat-conduction example with its entropy-production sign check."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .balance import BalanceSystem, balance_system, divergence_of
from .constitutive import ConstitutiveRelation, determinant, regularity_verdict
from .expr import JET, ONE, ZERO, Expr, antiderivative, diff, field, fn, partial_derivative, sum_exprs
from .jets import JetContext


@dataclass
class SecondaryCandidate:
    flux: list          # K^i
    source: Expr        # Q
    multipliers: list   # lambda^mu
    name: str = ''


@dataclass
class VerifyResult:
    ok: bool
    residual: Expr

    def __bool__(self):
        return self.ok


def verify_secondary(bs: BalanceSystem, cand: SecondaryCandidate) -> VerifyResult:
    """(d_i + lambda_i) K^i - Q - lambda^mu B_mu == 0."""
    res = divergence_of(bs.ctx, cand.flux) - Expr._coerce(cand.source) - bs.combination(cand.multipliers)
    return VerifyResult(res.is_zero, res)


def original_law(bs: BalanceSystem, mu: int) -> SecondaryCandidate:
    cr = bs.cr
    mult = [ONE if nu == mu else ZERO for nu in range(bs.ctx.m)]
    return SecondaryCandidate([cr.flux[i][mu] for i in range(bs.ctx.n)], cr.source[mu], mult,
                              name=f"law[{bs.ctx.field_names[mu]}]")


# ---------------------------------------------------------------- RET


def _check_ret(cr: ConstitutiveRelation, time: int):
    ctx = cr.ctx
    for label, e in cr.components():
        if any(c.kind == JET for c in e.free_coords()):
            raise ValueError(f"RET relations depend on (x, y) only; {label} does not")
    for mu in range(ctx.m):
        if not (cr.flux[time][mu] - Expr.atom(field(mu))).is_zero:
            raise ValueError("RET construction expects the time fluxes F^0_mu = y^mu")


@dataclass
class PotentialReport:
    residuals: list        # (label, Expr)
    hessian: list
    determinant: Expr
    verdict: str

    @property
    def ok(self) -> bool:
        return all(e.is_zero for _, e in self.residuals)


def ret_potential_residuals(cr: ConstitutiveRelation, h0, time: int = 0, seed: int = 0) -> PotentialReport:
    """F^A_{mu,sigma} h0_{,mu nu} - F^A_{mu,nu} h0_{,mu sigma} for sigma < nu."""
    _check_ret(cr, time)
    ctx = cr.ctx
    h0 = Expr._coerce(h0)
    ys = ctx.field_coords()
    H = [[diff(h0, a, b) for b in ys] for a in ys]
    res = []
    for A in range(ctx.n):
        if A == time:
            continue
        for s in range(ctx.m):
            for nu in range(s + 1, ctx.m):
                r = ZERO
                for mu in range(ctx.m):
                    F = cr.flux[A][mu]
                    r = r + partial_derivative(F, ys[s]) * H[mu][nu] - partial_derivative(F, ys[nu]) * H[mu][s]
                res.append((f"A={ctx.base_names[A]} ({ctx.field_names[s]},{ctx.field_names[nu]})", r))
    det = determinant(H)
    return PotentialReport(res, H, det, regularity_verdict(det, seed))


def _polynomial_in(e: Expr, coords) -> bool:
    cs = set(coords)
    for m, _ in e.terms.items():
        for a, p in m:
            if a in cs:
                if p < 0:
                    return False
            elif any(c in cs for c in _leaf_coords(a)):
                return False
    return True


def _leaf_coords(a):
    from .expr import atom_free_coords
    return atom_free_coords(a)


def homotopy_potential(grads: Sequence[Expr], coords) -> Expr:
    """K with dK/dy^nu = grads[nu] for polynomial closed one-forms: int_0^1 y^nu G_nu(s y) ds."""
    out = ZERO
    cs = list(coords)
    for nu, G in enumerate(grads):
        for m, c in G.terms.items():
            deg = sum(p for a, p in m if a in cs)
            out = out + Expr({m: c}) * Expr.atom(cs[nu]) * Fraction(1, deg + 1)
    return out


def ret_secondary_from_potential(cr: ConstitutiveRelation, h0, time: int = 0,
                                 flux: Optional[Sequence] = None) -> SecondaryCandidate:
    rep = ret_potential_residuals(cr, h0, time)
    if not rep.ok:
        raise ValueError("potential residuals do not vanish")
    if rep.verdict == 'degenerate':
        raise ValueError("Hessian of the potential is degenerate")
    ctx = cr.ctx
    h0 = Expr._coerce(h0)
    ys = ctx.field_coords()
    lam = [partial_derivative(h0, y) for y in ys]
    K = [ZERO] * ctx.n
    K[time] = h0
    for A in range(ctx.n):
        if A == time:
            continue
        if flux is not None:
            K[A] = Expr._coerce(flux[A])
            continue
        grads = [sum_exprs(lam[mu] * partial_derivative(cr.flux[A][mu], y) for mu in range(ctx.m)) for y in ys]
        if all(_polynomial_in(g, ys) for g in grads):
            K[A] = homotopy_potential(grads, ys)
        elif ctx.m == 1:
            K[A] = antiderivative(grads[0], ys[0])
        else:
            raise ValueError("flux potential needs polynomial data or m = 1; supply the candidate flux")
    Q = sum_exprs(lam[mu] * cr.source[mu] for mu in range(ctx.m))
    cand = SecondaryCandidate(K, Q, lam, name='potential law')
    v = verify_secondary(balance_system(cr), cand)
    if not v.ok:
        raise ValueError(f"candidate fails verification; residual {v.residual}")
    return cand


# ---------------------------------------------------------------- Cattaneo


CATTANEO_FUNCTIONS = ('tau', 'Lam', 'epseq', 'lamhat')


@dataclass
class CattaneoModel:
    ctx: JetContext
    cr: ConstitutiveRelation
    funcs: dict              # name -> Expr in theta
    energy: Expr
    law: SecondaryCandidate
    production: Expr
    factor: Expr             # lamhat' / Lam', the II-law factor with the sign flipped
    verified: VerifyResult
    note: str = "Lam^{-1}_{,theta} is read as 1 / Lam_{,theta}"


def cattaneo_context(base_names=('t', 'x1', 'x2', 'x3'), temperature='theta',
                     flux_names=('q1', 'q2', 'q3')) -> JetContext:
    n = len(base_names)
    if len(flux_names) != n - 1:
        raise ValueError("one heat-flux component per spatial direction")
    ctx = JetContext(n, n, 1, base_names=list(base_names), field_names=[temperature, *flux_names])
    th = (field(0),)
    return ctx.with_functions({name: th for name in CATTANEO_FUNCTIONS})


def cattaneo_build(tau=None, Lam=None, epseq=None, lamhat=None,
                   ctx: Optional[JetContext] = None) -> CattaneoModel:
    """Cattaneo system, the energy form compatible with a signed production and the
    entropy-like secondary law.  Missing functions stay symbolic atoms of theta."""
    ctx = ctx or cattaneo_context()
    th = field(0)
    given = {'tau': tau, 'Lam': Lam, 'epseq': epseq, 'lamhat': lamhat}
    funcs = {}
    for name, val in given.items():
        funcs[name] = fn(name, (th,)) if val is None else Expr._coerce(val)
        if not funcs[name].free_coords() <= {th}:
            raise ValueError(f"{name} must depend on the temperature only")
    T, L, E, lh = (funcs[k] for k in CATTANEO_FUNCTIONS)
    d = lambda e: partial_derivative(e, th)
    nA = ctx.n - 1
    q = [Expr.atom(field(A + 1)) for A in range(nA)]
    q2 = sum_exprs(qa * qa for qa in q)
    ratio = d(lh) * d(L) ** -1
    half = Fraction(1, 2)
    # (tau / 2 lamhat') (lamhat' / Lam')' expanded; its lamhat''/lamhat' part is dropped
    # when lamhat is constant, where any energy works
    bracket = d(T) * d(L) ** -1 * half + T * d(d(L)) * d(L) ** -2 * half
    if not d(lh).is_zero:
        bracket = bracket - T * d(d(lh)) * d(lh) ** -1 * d(L) ** -1 * half
    eps = E + bracket * q2
    n, m = ctx.n, ctx.m
    F = [[ZERO] * m for _ in range(n)]
    F[0][0] = eps
    for A in range(nA):
        F[0][A + 1] = T * q[A]
        F[A + 1][0] = q[A]
        F[A + 1][A + 1] = L
    Pi = [ZERO] + [-qa for qa in q]
    cr = ConstitutiveRelation(ctx, F, Pi, None, 'generic', {'model': 'cattaneo'})
    K0 = lh * eps - antiderivative(d(lh) * E, th) + Fraction(1, 2) * T * ratio * q2
    K = [K0] + [lh * qa for qa in q]
    Q = -ratio * q2
    mult = [lh] + [ratio * qa for qa in q]
    law = SecondaryCandidate(K, Q, mult, name='secondary (entropy) law')
    ver = verify_secondary(balance_system(cr), law)
    return CattaneoModel(ctx, cr, funcs, eps, law, Q, ratio, ver)


def eval_array(e: Expr, values: Mapping) -> np.ndarray:
    """Vectorised evaluation; ``values`` maps atoms to arrays (or floats)."""
    total = None
    for mono, c in e.terms.items():
        v = np.asarray(float(c))
        for a, p in mono:
            v = v * _atom_array(a, values) ** p
        total = v if total is None else total + v
    if total is None:
        return np.zeros(())
    return total


def _atom_array(a, values):
    if a in values:
        return np.asarray(values[a], dtype=float)
    if a[0] == 'e':
        return np.exp(eval_array(a[1], values))
    if a[0] == 'v':
        return 1.0 / eval_array(a[1], values)
    raise KeyError(a)


@dataclass
class IILawVerdict:
    nonnegative: bool
    nonpositive: bool
    minimum: float
    maximum: float
    samples: int
    factor: Expr
    factor_sign: Optional[int]

    @property
    def holds(self) -> bool:
        return self.nonnegative


def manifest_sign(e: Expr) -> Optional[int]:
    """+1 / -1 when e is a single monomial with even powers, else None."""
    if not e.is_monomial or e.is_zero:
        return None
    (mono, c), = e.terms.items()
    if all(p % 2 == 0 for _, p in mono):
        return 1 if c > 0 else -1
    return None


def sample_production(production: Expr, ctx: JetContext, theta_range=(1.0, 10.0),
                      q_range=(0.0, 10.0), samples: int = 10_000, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    nA = ctx.n - 1
    theta = rng.uniform(theta_range[0], theta_range[1], samples)
    direction = rng.normal(size=(samples, nA))
    norms = np.linalg.norm(direction, axis=1)
    norms[norms == 0] = 1.0
    direction /= norms[:, None]
    radius = rng.uniform(q_range[0], q_range[1], samples)
    qs = direction * radius[:, None]
    values = {field(0): theta}
    for A in range(nA):
        values[field(A + 1)] = qs[:, A]
    if production.free_coords() - set(values):
        raise ValueError("production term contains atoms that cannot be evaluated")
    out = eval_array(production, values)
    return np.broadcast_to(out, (samples,))


def ii_law_check(model: CattaneoModel, theta_range=(1.0, 10.0), q_range=(0.0, 10.0),
                 samples: int = 10_000, seed: int = 0) -> IILawVerdict:
    leaves = [a for a in model.production.leaf_atoms() if a[0] == 'f']
    if leaves:
        raise ValueError("production term is not numerically evaluable (symbolic functions remain)")
    vals = sample_production(model.production, model.ctx, theta_range, q_range, samples, seed)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    return IILawVerdict(bool(np.all(vals >= -tol)), bool(np.all(vals <= tol)),
                        float(np.min(vals)), float(np.max(vals)), samples,
                        -model.factor, manifest_sign(-model.factor))


def drifted_production(model: CattaneoModel, drift: Sequence) -> Expr:
    """Production -(lamhat' |q|^2 + Khat'_A q^A) / Lam' with extra drift terms Khat'_A(theta)."""
    th = field(0)
    q = [Expr.atom(field(A + 1)) for A in range(model.ctx.n - 1)]
    lp = partial_derivative(model.funcs['lamhat'], th)
    Lp = partial_derivative(model.funcs['Lam'], th)
    inner = lp * sum_exprs(qa * qa for qa in q) + sum_exprs(Expr._coerce(k) * qa for k, qa in zip(drift, q))
    return -(Lp ** -1) * inner
