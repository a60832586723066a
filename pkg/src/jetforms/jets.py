"""Partial jet bundles: admitted derivative sets, total derivatives, vector fields,
prolongation and the lifts to the form bundles."""
from __future__ import annotations

from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Optional

from .expr import (BASE, DENSITY, FIELD, JET, MOMENTUM, ONE, Q_FIELD, Q_JET,
                   SOURCE_MOMENTUM, ZERO, Coord, Expr, Fn, base, derive, equals,
                   exp, field, jet, partial_derivative, sum_exprs)
from .printing import Names


class ContextError(ValueError):
    pass


class StructureError(ValueError):
    """A vector field is not projectable or does not preserve the partial structure."""


def add_index(multi: tuple, i: int) -> tuple:
    return tuple(sorted(multi + (i,)))


def remove_index(multi: tuple, i: int) -> tuple:
    lst = list(multi)
    lst.remove(i)
    return tuple(lst)


class JetContext:
    """Base dimension n, fibre dimension m, order k, admitted set P and density g(x).

    ``admitted`` is an iterable of (mu, I) with 1 <= |I| <= k (None means the
    full jet bundle).  ``density`` is 'euclidean' (g = 1), 'symbolic' (an
    opaque atom g(x)), 'exp' (g = exp(phi(x)) with opaque phi) or an Expr in the
    base coordinates.
    """

    def _zname(self, mu, I):
        return f"z[{self.field_names[mu]},({','.join(self.base_names[i] for i in I)})]"

    def __init__(self, n: int, m: int, order: int, admitted=None, density='euclidean',
                 base_names=None, field_names=None, functions: Optional[Mapping] = None):
        if n < 1 or m < 1 or order < 0:
            raise ContextError("need n >= 1, m >= 1 and order >= 0")
        self.n, self.m, self.k = n, m, order
        if admitted is None:
            admitted = [(mu, I) for mu in range(m) for r in range(1, order + 1)
                        for I in combinations_with_replacement(range(n), r)]
        self.base_names = list(base_names) if base_names else [f"x{i + 1}" for i in range(n)]
        self.field_names = list(field_names) if field_names else [f"y{mu + 1}" for mu in range(m)]
        if len(self.base_names) != n or len(self.field_names) != m:
            raise ContextError("name lists do not match dimensions")
        P = set()
        for mu, I in admitted:
            I = tuple(sorted(I))
            if not 0 <= mu < m or not 1 <= len(I) <= order or any(not 0 <= i < n for i in I):
                raise ContextError(f"admitted derivative {(mu, I)} out of range")
            P.add((mu, I))
        for mu, I in sorted(P):
            if len(I) >= 2:
                for i in set(I):
                    pred = remove_index(I, i)
                    if (mu, pred) not in P:
                        raise ContextError(
                            f"admitted set not closed: {self._zname(mu, I)} needs {self._zname(mu, pred)}")
        self.P = frozenset(P)
        self.names = Names(base_names, field_names)
        self.functions: dict = dict(functions or {})
        self.density_kind = density if isinstance(density, str) else 'expr'
        self.density = self._make_density(density)
        self._lam = [self._lambda(i) for i in range(n)]
        self._adm_cache: dict = {}

    def _make_density(self, density) -> Expr:
        xs = tuple(base(i) for i in range(self.n))
        if isinstance(density, Expr):
            if not density.free_coords() <= set(xs):
                raise ContextError("density must depend on base coordinates only")
            return density
        if density == 'euclidean':
            return ONE
        if density == 'symbolic':
            return Expr.atom(Fn('g', xs))
        if density == 'exp':
            return exp(Expr.atom(Fn('phi', xs)))
        raise ContextError(f"unknown density {density!r}")

    def _lambda(self, i: int) -> Expr:
        g = self.density
        if g == ONE:
            return ZERO
        return partial_derivative(g, base(i)) * g ** -1

    def lam(self, i: int) -> Expr:
        """lambda_{G,i} = g_{,i} / g."""
        return self._lam[i]

    @property
    def euclidean(self) -> bool:
        return self.density == ONE

    def with_functions(self, functions: Mapping) -> "JetContext":
        c = object.__new__(JetContext)
        c.__dict__.update(self.__dict__)
        c.functions = {**self.functions, **functions}
        return c

    # coordinates
    def x(self, i: int) -> Coord:
        return base(i)

    def y(self, mu: int) -> Coord:
        return field(mu)

    def z(self, mu: int, multi: Iterable[int]) -> Coord:
        return jet(mu, multi)

    def base_coords(self) -> list:
        return [base(i) for i in range(self.n)]

    def field_coords(self) -> list:
        return [field(mu) for mu in range(self.m)]

    def jet_coords(self, max_order: Optional[int] = None) -> list:
        """Admitted jet coordinates up to ``max_order`` (default k), sorted."""
        top = self.k if max_order is None else max_order
        return [jet(mu, I) for mu, I in self.admitted_keys(top)]

    def admitted_keys(self, max_order: int, min_order: int = 1) -> list:
        out = []
        for r in range(min_order, max_order + 1):
            for mu in range(self.m):
                for I in combinations_with_replacement(range(self.n), r):
                    if self.admitted(mu, I):
                        out.append((mu, I))
        return out

    def coords(self) -> list:
        return self.base_coords() + self.field_coords() + self.jet_coords()

    def admitted(self, mu: int, multi: tuple) -> bool:
        """Whether z^mu_I exists: in P up to order k, shadow layers above k."""
        if not multi:
            return True
        key = (mu, multi)
        r = self._adm_cache.get(key)
        if r is None:
            if len(multi) <= self.k:
                r = key in self.P
            else:
                r = all(self.admitted(mu, remove_index(multi, i)) for i in set(multi))
            self._adm_cache[key] = r
        return r

    def directions(self, mu: int) -> set:
        """Base directions i with (mu, (i,)) admitted."""
        return {i for i in range(self.n) if self.admitted(mu, (i,))}

    def is_admitted_coord(self, c: Coord, max_order: Optional[int] = None) -> bool:
        top = self.k if max_order is None else max_order
        if c.kind == BASE:
            return c.index < self.n
        if c.kind == FIELD:
            return c.index < self.m
        if c.kind == JET:
            return c.index < self.m and len(c.multi) <= top and self.admitted(c.index, c.multi)
        return False

    def check_admitted(self, e: Expr, max_order: Optional[int] = None, what="expression"):
        for c in e.free_coords():
            if c.kind in (BASE, FIELD, JET) and not self.is_admitted_coord(c, max_order):
                from .printing import coord_text
                raise ContextError(f"{what} depends on non-admitted variable {coord_text(c, self.names)}")

    # total derivatives
    def total_component(self, i: int, restricted: bool = True):
        """Component function of d_i for :func:`derive`."""
        if not 0 <= i < self.n:
            raise ContextError(f"base index {i + 1} out of range")
        return _TotalComponent(self, i, restricted)

    def total_derivative(self, e: Expr, i: int) -> Expr:
        """Truncated total derivative d_i (only admitted coordinates are produced)."""
        return derive(e, self.total_component(i, True))

    def section_derivative(self, e: Expr, i: int) -> Expr:
        """Derivative of e along a section: d_i with every jet coordinate produced."""
        return derive(e, self.total_component(i, False))

    def total_derivative_multi(self, e: Expr, multi: Iterable[int]) -> Expr:
        for i in multi:
            e = self.total_derivative(e, i)
        return e

    def commutes_total(self, e: Expr, i: int, j: int) -> bool:
        a = self.total_derivative(self.total_derivative(e, j), i)
        b = self.total_derivative(self.total_derivative(e, i), j)
        return equals(a, b)

    def describe(self) -> str:
        P = sorted(self.P)
        if P == sorted((mu, I) for mu, I in self.admitted_keys(self.k)) and len(P) == _full_count(self):
            jets = "full"
        else:
            jets = ", ".join(f"{self.field_names[mu]}_{''.join(self.base_names[i] for i in I)}"
                             for mu, I in P) or "none"
        return (f"n={self.n} m={self.m} k={self.k} base=({', '.join(self.base_names)}) "
                f"fields=({', '.join(self.field_names)}) jets={jets} density={self.density_kind}")


def _full_count(ctx) -> int:
    from math import comb
    return ctx.m * sum(comb(ctx.n + r - 1, r) for r in range(1, ctx.k + 1))


class _TotalComponent:
    __slots__ = ('ctx', 'i', 'restricted')

    def __init__(self, ctx, i, restricted):
        self.ctx, self.i, self.restricted = ctx, i, restricted

    def __call__(self, c: Coord):
        kind = c[1]
        if kind == BASE:
            return ONE if c[2] == self.i else None
        if kind == FIELD or kind == JET:
            mu, I = (c[2], ()) if kind == FIELD else (c[2], c[3])
            J = add_index(I, self.i)
            if self.restricted and not self.ctx.admitted(mu, J):
                return None
            return Expr.atom(jet(mu, J))
        return None


# ---------------------------------------------------------------- vector fields


class VectorField:
    """Derivation sum_c comp[c] d/dc with components keyed by coordinate."""

    def __init__(self, components: Mapping[Coord, Expr], ctx: Optional[JetContext] = None):
        self.comp = {c: Expr._coerce(v) for c, v in components.items() if not Expr._coerce(v).is_zero}
        self.ctx = ctx

    def __getitem__(self, c: Coord) -> Expr:
        return self.comp.get(c, ZERO)

    def __call__(self, e: Expr) -> Expr:
        return derive(e, self._component)

    def _component(self, c):
        return self.comp.get(c)

    def base_part(self, i: int) -> Expr:
        return self[base(i)]

    def field_part(self, mu: int) -> Expr:
        return self[field(mu)]

    def jet_part(self, mu: int, multi) -> Expr:
        return self[jet(mu, multi)]

    def restrict(self, pred) -> "VectorField":
        return VectorField({c: v for c, v in self.comp.items() if pred(c)}, self.ctx)

    def projection(self) -> "VectorField":
        """The part on base and fibre coordinates."""
        return self.restrict(lambda c: c.kind in (BASE, FIELD))

    def __add__(self, other: "VectorField"):
        keys = set(self.comp) | set(other.comp)
        return VectorField({c: self[c] + other[c] for c in keys}, self.ctx or other.ctx)

    def __sub__(self, other: "VectorField"):
        keys = set(self.comp) | set(other.comp)
        return VectorField({c: self[c] - other[c] for c in keys}, self.ctx or other.ctx)

    def scale(self, f: Expr) -> "VectorField":
        return VectorField({c: f * v for c, v in self.comp.items()}, self.ctx)

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        keys = set(self.comp) | set(other.comp)
        return all(equals(self[c], other[c]) for c in keys)

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.comp

    def items(self):
        return sorted(self.comp.items())

    def __repr__(self):
        from .printing import coord_text, to_text
        names = self.ctx.names if self.ctx else None
        from .printing import GENERIC
        nm = names or GENERIC
        body = " + ".join(f"({to_text(v, nm)})*d/d{coord_text(c, nm)}" for c, v in self.items())
        return f"VectorField({body or '0'})"


def vector_field(ctx: JetContext, base_coeffs: Optional[Mapping] = None,
                 field_coeffs: Optional[Mapping] = None) -> VectorField:
    """Field on Y from {i: xi^i} and {mu: xi^mu} (0-based indices)."""
    comp = {}
    for i, v in (base_coeffs or {}).items():
        comp[base(i)] = v
    for mu, v in (field_coeffs or {}).items():
        comp[field(mu)] = v
    return VectorField(comp, ctx)


def lie_bracket(a: VectorField, b: VectorField) -> VectorField:
    if a.ctx is not None and b.ctx is not None and a.ctx is not b.ctx and (
            a.ctx.n, a.ctx.m) != (b.ctx.n, b.ctx.m):
        raise ContextError("vector fields live on different spaces")
    keys = set()
    for v in list(a.comp.values()) + list(b.comp.values()):
        keys |= v.free_coords()
    keys |= set(a.comp) | set(b.comp)
    out = {}
    for c in keys:
        val = a(b[c]) - b(a[c])
        if not val.is_zero:
            out[c] = val
    return VectorField(out, a.ctx or b.ctx)


# ---------------------------------------------------------------- structure checks


def check_projectable(xi: VectorField, ctx: JetContext):
    for i in range(ctx.n):
        bad = [c for c in xi.base_part(i).free_coords() if c.kind != BASE]
        if bad:
            raise StructureError(f"xi^{ctx.base_names[i]} depends on fibre variables; field is not projectable")
    for mu in range(ctx.m):
        bad = [c for c in xi.field_part(mu).free_coords() if c.kind not in (BASE, FIELD)]
        if bad:
            raise StructureError(f"xi^{ctx.field_names[mu]} depends on jet variables")


def structure_violations(xi: VectorField, ctx: JetContext) -> list:
    """Dependencies that break the partial structure (empty list when preserved)."""
    out = []
    seen = set()
    for mu in range(ctx.m):
        D = ctx.directions(mu)
        if not D or len(D) == ctx.n:
            continue
        for i in D:
            for k in range(ctx.n):
                if k in D:
                    continue
                for a, b in ((k, i), (i, k)):
                    if (a, b) in seen:
                        continue
                    seen.add((a, b))
                    if not partial_derivative(xi.base_part(a), base(b)).is_zero:
                        out.append(f"xi^{ctx.base_names[a]} depends on {ctx.base_names[b]}")
    return out


def check_structure(xi: VectorField, ctx: JetContext):
    check_projectable(xi, ctx)
    bad = structure_violations(xi, ctx)
    if bad:
        raise StructureError("field does not preserve the partial structure: " + "; ".join(bad))


# ---------------------------------------------------------------- prolongation


def characteristic(xi: VectorField, ctx: JetContext, mu: int, multi: tuple = (),
                   restricted: bool = True) -> Expr:
    """omega^mu_I(xi) = xi^mu_I - sum_{admitted} xi^i z^mu_{I+i}."""
    val = xi.field_part(mu) if not multi else xi.jet_part(mu, multi)
    for i in range(ctx.n):
        J = add_index(multi, i)
        if restricted and not ctx.admitted(mu, J):
            continue
        xi_i = xi.base_part(i)
        if not xi_i.is_zero:
            val = val - xi_i * Expr.atom(jet(mu, J))
    return val


def prolong(xi: VectorField, order: int, ctx: JetContext, check: bool = True) -> VectorField:
    """Flow prolongation to all admitted z^mu_I with |I| <= order."""
    if check:
        check_structure(xi, ctx)
    comp = dict(xi.projection().comp)
    for mu in range(ctx.m):
        q = characteristic(xi, ctx, mu)
        by_order = {(): q}
        for r in range(1, order + 1):
            for I in combinations_with_replacement(range(ctx.n), r):
                if not ctx.admitted(mu, I):
                    continue
                # d_I q computed incrementally from an admitted predecessor
                i = I[-1]
                prev = by_order[remove_index(I, i)]
                by_order[I] = ctx.total_derivative(prev, i)
        for I, dq in by_order.items():
            if not I:
                continue
            val = dq
            for i in range(ctx.n):
                J = add_index(I, i)
                if ctx.admitted(mu, J):
                    xi_i = xi.base_part(i)
                    if not xi_i.is_zero:
                        val = val + xi_i * Expr.atom(jet(mu, J))
            comp[jet(mu, I)] = val
    return VectorField(comp, ctx)


# ---------------------------------------------------------------- form-bundle lifts


def p_coord() -> Coord:
    return Coord(DENSITY, 0)


def p_momentum(i: int, mu: int) -> Coord:
    return Coord(MOMENTUM, mu, (i,))


def p_source(mu: int) -> Coord:
    return Coord(SOURCE_MOMENTUM, mu)


def q_field(mu: int) -> Coord:
    return Coord(Q_FIELD, mu)


def q_jet(i: int, mu: int) -> Coord:
    return Coord(Q_JET, mu, (i,))


def divergence(xi: VectorField, ctx: JetContext) -> Expr:
    """div_G(xi) = d xi^i / d x^i + xi^i lambda_{G,i}."""
    return sum_exprs(partial_derivative(xi.base_part(i), base(i)) + xi.base_part(i) * ctx.lam(i)
                     for i in range(ctx.n))


def lift_semibasic(xi: VectorField, alpha: Mapping[int, Expr], ctx: JetContext) -> VectorField:
    """Lift of a projectable field to the bundle with coordinates (x, y, p, p^i_mu).

    The lift is fixed by L_{xi*} Theta = d alpha with Theta = p eta + p^i_mu dy^mu ^ eta_i
    and alpha = alpha^j(x, y) eta_j.
    """
    check_projectable(xi, ctx)
    n, m = ctx.n, ctx.m
    div = divergence(xi, ctx)
    X = [xi.base_part(i) for i in range(n)]
    Y = [xi.field_part(mu) for mu in range(m)]
    A = [Expr._coerce(alpha.get(j, ZERO)) for j in range(n)]
    P = Expr.atom(p_coord())
    PM = [[Expr.atom(p_momentum(i, mu)) for mu in range(m)] for i in range(n)]
    comp = dict(xi.projection().comp)
    # p-component: -p div - p^i_mu d_{x^i} xi^mu + (d_{x^j} + lambda_j) alpha^j
    vp = -P * div
    for i in range(n):
        for mu in range(m):
            vp = vp - PM[i][mu] * partial_derivative(Y[mu], base(i))
    for j in range(n):
        vp = vp + partial_derivative(A[j], base(j)) + A[j] * ctx.lam(j)
    comp[p_coord()] = vp
    for i in range(n):
        for mu in range(m):
            v = -PM[i][mu] * div
            for j in range(n):
                v = v + PM[j][mu] * partial_derivative(X[i], base(j))
            for nu in range(m):
                v = v - PM[i][nu] * partial_derivative(Y[nu], field(mu))
            v = v + partial_derivative(A[i], field(mu))
            comp[p_momentum(i, mu)] = v
    return VectorField(comp, ctx)


def lift_n_plus_1(xi: VectorField, ctx: JetContext) -> VectorField:
    """Lift leaving p_sigma dy^sigma ^ eta invariant."""
    check_projectable(xi, ctx)
    div = divergence(xi, ctx)
    comp = dict(xi.projection().comp)
    for s in range(ctx.m):
        v = -Expr.atom(p_source(s)) * div
        for nu in range(ctx.m):
            v = v - Expr.atom(p_source(nu)) * partial_derivative(xi.field_part(nu), field(s))
        comp[p_source(s)] = v
    return VectorField(comp, ctx)


def lift_forms_on_J1(xi: VectorField, ctx: JetContext) -> VectorField:
    """Lift of a first-order prolonged field leaving (q_mu omega^mu + q^i_mu omega^mu_i) ^ eta invariant."""
    for mu in range(ctx.m):
        if any(c.kind == JET for c in xi.field_part(mu).free_coords()):
            raise StructureError(f"xi^{ctx.field_names[mu]} depends on jet variables")
    check_projectable(xi, ctx)
    if not any(c.kind == JET for c in xi.comp):
        xi = prolong(xi, 1, ctx, check=False)
    div = divergence(xi, ctx)
    comp = dict(xi.comp)
    firsts = [(mu, I[0]) for mu, I in ctx.admitted_keys(1)]
    for nu in range(ctx.m):
        v = -Expr.atom(q_field(nu)) * div
        for mu in range(ctx.m):
            v = v - Expr.atom(q_field(mu)) * partial_derivative(xi.field_part(mu), field(nu))
        for mu, i in firsts:
            v = v - Expr.atom(q_jet(i, mu)) * partial_derivative(xi.jet_part(mu, (i,)), field(nu))
        comp[q_field(nu)] = v
    for nu, j in firsts:
        v = -Expr.atom(q_jet(j, nu)) * div
        for mu, i in firsts:
            v = v - Expr.atom(q_jet(i, mu)) * partial_derivative(xi.jet_part(mu, (i,)), jet(nu, (j,)))
        comp[q_jet(j, nu)] = v
    return VectorField(comp, ctx)
