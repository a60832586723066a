"""Shared generators and the sympy oracle used across the test modules."""
from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations_with_replacement

import sympy as sp

from jetforms.expr import FIELD, JET, Coord, Expr, base, field, jet, sum_exprs
from jetforms.forms import Form, dx, dz, omega, wedge
from jetforms.jets import JetContext, VectorField, vector_field


# ---------------------------------------------------------------- sympy oracle


def coord_symbol(c: Coord) -> sp.Symbol:
    return sp.Symbol(f"c{c.kind}_{c.index}_" + "".join(str(i) for i in c.multi))


def to_sympy(e: Expr):
    total = sp.Integer(0)
    for mono, c in e.terms.items():
        term = sp.Rational(Fraction(c).numerator, Fraction(c).denominator)
        for a, p in mono:
            term *= atom_sympy(a) ** p
        total += term
    return total


def atom_sympy(a):
    tag = a[0]
    if tag == 'c':
        return coord_symbol(a)
    if tag == 'f':
        if a[4]:
            raise NotImplementedError("composed atoms are not mapped to sympy")
        args = [coord_symbol(c) for c in a[2]]
        f = sp.Function(a[1])(*args)
        for d in a[3]:
            f = sp.diff(f, coord_symbol(d))
        return f
    if tag == 'e':
        return sp.exp(to_sympy(a[1]))
    if tag == 'v':
        return 1 / to_sympy(a[1])
    if tag == 'i':
        return sp.Symbol('Int_' + str(abs(hash(a))))
    raise TypeError(a)


def sym_equal(a, b) -> bool:
    return sp.expand(a - b) == 0


def sym_total(e_sym, i: int, ctx: JetContext, restricted: bool = False):
    """d_i computed in sympy over the coordinate symbols present in e."""
    out = sp.diff(e_sym, coord_symbol(base(i)))
    for s in e_sym.free_symbols:
        name = s.name
        if not name.startswith('c'):
            continue
        kind, idx, multi = name[1:].split('_')
        kind, idx = int(kind), int(idx)
        if kind not in (FIELD, JET):
            continue
        I = tuple(int(ch) for ch in multi)
        nxt = jet(idx, I + (i,))
        if restricted and not ctx.admitted(idx, nxt.multi):
            continue
        out += sp.diff(e_sym, s) * coord_symbol(nxt)
    return out


# ---------------------------------------------------------------- random generators


def random_context(rng: random.Random, n_max=3, m_max=3, k_max=2, k_min=1, partial=False) -> JetContext:
    n = rng.randint(1, n_max)
    m = rng.randint(1, m_max)
    k = rng.randint(k_min, k_max)
    admitted = None
    if partial:
        # per-field direction subsets give closed admitted sets
        admitted = []
        for mu in range(m):
            dirs = [i for i in range(n) if rng.random() < 0.6]
            for r in range(1, k + 1):
                for I in combinations_with_replacement(dirs, r):
                    admitted.append((mu, I))
    return JetContext(n, m, k, admitted)


def coords_of(ctx: JetContext, max_order=None) -> list:
    return ctx.base_coords() + ctx.field_coords() + ctx.jet_coords(max_order)


def random_poly(rng: random.Random, atoms, terms=3, degree=2, coeff=3) -> Expr:
    out = Expr.const(0)
    atoms = list(atoms)
    for _ in range(terms):
        c = rng.randint(-coeff, coeff) or 1
        t = Expr.const(c)
        for _ in range(rng.randint(0, degree)):
            t = t * Expr.atom(rng.choice(atoms))
        out = out + t
    return out


def random_basis_covector(rng: random.Random, ctx: JetContext, h: int) -> Form:
    choices = [('dx', i) for i in range(ctx.n)]
    choices += [('w', mu, ()) for mu in range(ctx.m)]
    for mu, I in ctx.admitted_keys(h):
        choices.append(('w', mu, I) if len(I) < h else ('dz', mu, I))
    if h == 0:
        choices = [('dx', i) for i in range(ctx.n)] + [('dz', mu, ()) for mu in range(ctx.m)]
    pick = rng.choice(choices)
    if pick[0] == 'dx':
        return dx(ctx, h, pick[1])
    if pick[0] == 'w':
        return omega(ctx, h, pick[1], pick[2])
    return dz(ctx, h, pick[1], pick[2])


def random_form(rng: random.Random, ctx: JetContext, h: int, degree: int, terms=3) -> Form:
    atoms = coords_of(ctx, h)
    out = Form(ctx, h)
    for _ in range(terms):
        piece = Form.scalar(ctx, h, random_poly(rng, atoms, 2, 2))
        for _ in range(degree):
            piece = wedge(piece, random_basis_covector(rng, ctx, h))
        out = out + piece
    return out


def random_structure_field(rng: random.Random, ctx: JetContext, degree=2) -> VectorField:
    """Projectable polynomial field on a full jet context: xi^i(x), xi^mu(x, y)."""
    xs = ctx.base_coords()
    xys = xs + ctx.field_coords()
    base_c = {i: random_poly(rng, xs, 2, degree) for i in range(ctx.n)}
    field_c = {mu: random_poly(rng, xys, 2, degree) for mu in range(ctx.m)}
    return vector_field(ctx, base_c, field_c)


def random_lagrangian(rng: random.Random, ctx: JetContext, terms=4) -> Expr:
    atoms = ctx.field_coords() + ctx.jet_coords(1)
    return random_poly(rng, atoms, terms, 3)


def wave_context() -> JetContext:
    return JetContext(2, 1, 1, base_names=['t', 'x'], field_names=['u'])


def wave_lagrangian(ctx) -> Expr:
    zt, zx = Expr.atom(jet(0, (0,))), Expr.atom(jet(0, (1,)))
    return (zt * zt - zx * zx) * Fraction(1, 2)


def Z(mu, *I) -> Expr:
    return Expr.atom(jet(mu, I))


def Y(mu) -> Expr:
    return Expr.atom(field(mu))


def X(i) -> Expr:
    return Expr.atom(base(i))


def total(exprs) -> Expr:
    return sum_exprs(exprs)


def atom_of(e: Expr):
    """The atom of a single-atom monomial expression."""
    (mono, _), = e.terms.items()
    return mono[0][0]
