"""Exterior forms on partial jet spaces in the contact basis.

A form lives on a *space* given by a jet context and a home order h.  Its
basis covectors are dx^i, the contact forms omega^mu_I for admitted |I| < h,
the top-layer differentials dz^mu_I with |I| = h (dy^mu when h = 0) and the
differentials of the form-bundle fibre coordinates.  dy and lower dz never
appear in stored terms.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Optional

from .expr import (BASE, FIELD, JET, ONE, ZERO, Coord, Expr, base, jet,
                   partial_derivative)
from .jets import JetContext, VectorField, add_index

# covector keys; the leading integer fixes the wedge order (contact first, dx last)
W, TOP, EXTRA, DX = 0, 1, 2, 3


def k_dx(i: int) -> tuple:
    return (DX, i)


def k_omega(mu: int, multi: tuple = ()) -> tuple:
    return (W, len(multi), mu, tuple(multi))


def k_top(mu: int, multi: tuple) -> tuple:
    return (TOP, len(multi), mu, tuple(multi))


def k_extra(c: Coord) -> tuple:
    return (EXTRA, c)


class SpaceError(ValueError):
    pass


class Form:
    """Sum of coefficient * wedge word; words are strictly sorted tuples of keys."""

    __slots__ = ('ctx', 'h', 'terms')

    def __init__(self, ctx: JetContext, h: int, terms: Optional[dict] = None):
        self.ctx, self.h = ctx, h
        self.terms = {w: c for w, c in (terms or {}).items() if not c.is_zero}

    # construction helpers
    @staticmethod
    def scalar(ctx, h, f) -> "Form":
        f = Expr._coerce(f)
        return Form(ctx, h, {(): f} if not f.is_zero else {})

    def degree(self) -> Optional[int]:
        degs = {len(w) for w in self.terms}
        if not degs:
            return None
        if len(degs) > 1:
            return -1
        return degs.pop()

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, word: tuple) -> Expr:
        return self.terms.get(tuple(word), ZERO)

    def _same(self, other: "Form"):
        if other.ctx is not self.ctx:
            raise SpaceError("forms live on different jet contexts")
        if other.h == self.h:
            return self, other
        h = max(self.h, other.h)
        return self.lift(h), other.lift(h)

    def __add__(self, other: "Form"):
        a, b = self._same(other)
        d = dict(a.terms)
        for w, c in b.terms.items():
            d[w] = d.get(w, ZERO) + c
        return Form(a.ctx, a.h, d)

    def __neg__(self):
        return Form(self.ctx, self.h, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "Form"):
        return self + (-other)

    def scale(self, f) -> "Form":
        f = Expr._coerce(f)
        return Form(self.ctx, self.h, {w: f * c for w, c in self.terms.items()})

    def __mul__(self, f):
        if isinstance(f, Form):
            return NotImplemented
        return self.scale(f)

    __rmul__ = __mul__

    def __xor__(self, other: "Form"):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return (self - other).is_zero

    __hash__ = None

    def map_coefficients(self, fn) -> "Form":
        return Form(self.ctx, self.h, {w: fn(c) for w, c in self.terms.items()})

    def lift(self, h: int) -> "Form":
        """Pull back to home order h >= self.h (top-layer dz become omega + z dx)."""
        if h == self.h:
            return self
        if h < self.h:
            raise SpaceError("cannot lower the home order of a form")
        out = Form(self.ctx, h)
        for w, c in self.terms.items():
            piece = Form.scalar(self.ctx, h, c)
            for key in w:
                piece = wedge(piece, _lift_covector(self.ctx, self.h, h, key))
            out = out + piece
        return out

    def __repr__(self):
        return f"Form({form_text(self)})"

    def __str__(self):
        return form_text(self)


def _lift_covector(ctx, h_old, h_new, key) -> Form:
    if key[0] == TOP:
        _, r, mu, I = key
        return dz(ctx, h_new, mu, I)
    return Form(ctx, h_new, {(key,): ONE})


def _merge_words(w1: tuple, w2: tuple):
    """Sign and sorted concatenation, or (0, None) for a repeated covector."""
    if not w1:
        return 1, w2
    if not w2:
        return 1, w1
    s1 = set(w1)
    if any(k in s1 for k in w2):
        return 0, None
    seq = list(w1 + w2)
    # count inversions: each element of w2 passes the elements of w1 bigger than it
    inv = 0
    for k in w2:
        for j in w1:
            if j > k:
                inv += 1
    seq.sort()
    return (-1 if inv % 2 else 1), tuple(seq)


def wedge(a: Form, b: Form) -> Form:
    a, b = a._same(b)
    d: dict = {}
    for w1, c1 in a.terms.items():
        for w2, c2 in b.terms.items():
            s, w = _merge_words(w1, w2)
            if not s:
                continue
            v = c1 * c2
            d[w] = d.get(w, ZERO) + (v if s > 0 else -v)
    return Form(a.ctx, a.h, d)


def wedge_all(forms: Iterable[Form]) -> Form:
    forms = list(forms)
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


# ---------------------------------------------------------------- basis builders


def dx(ctx, h, i) -> Form:
    return Form(ctx, h, {(k_dx(i),): ONE})


def omega(ctx, h, mu, multi=()) -> Form:
    multi = tuple(sorted(multi))
    if len(multi) >= h:
        raise SpaceError(f"contact form of order {len(multi)} needs home order > {len(multi)}")
    if not ctx.admitted(mu, multi):
        raise SpaceError("contact form of a non-admitted coordinate")
    return Form(ctx, h, {(k_omega(mu, multi),): ONE})


def dz(ctx, h, mu, multi=()) -> Form:
    """Differential of z^mu_I (dy^mu for I = ()) expressed in the basis of order h."""
    multi = tuple(sorted(multi))
    r = len(multi)
    if r > h:
        raise SpaceError(f"dz of order {r} on a space of home order {h}")
    if not ctx.admitted(mu, multi):
        raise SpaceError("differential of a non-admitted coordinate")
    if r == h:
        return Form(ctx, h, {(k_top(mu, multi),): ONE})
    terms = {(k_omega(mu, multi),): ONE}
    for j in range(ctx.n):
        J = add_index(multi, j)
        if ctx.admitted(mu, J):
            terms[(k_dx(j),)] = Expr.atom(jet(mu, J))
    return Form(ctx, h, terms)


def dy(ctx, h, mu) -> Form:
    return dz(ctx, h, mu, ())


def d_extra(ctx, h, c: Coord) -> Form:
    return Form(ctx, h, {(k_extra(c),): ONE})


def eta(ctx, h) -> Form:
    """Volume form g dx^1 ^ ... ^ dx^n."""
    return Form(ctx, h, {tuple(k_dx(i) for i in range(ctx.n)): ctx.density})


def base_field(ctx, i) -> VectorField:
    return VectorField({base(i): ONE}, ctx)


def eta_i(ctx, h, i) -> Form:
    return contract(base_field(ctx, i), eta(ctx, h))


def eta_ik(ctx, h, i, k) -> Form:
    """i_{d_k} i_{d_i} eta."""
    return contract(base_field(ctx, k), eta_i(ctx, h, i))


# ---------------------------------------------------------------- d


def _home_total(ctx, h, i):
    """Component function of the total derivative truncated at the top layer h."""
    one = ONE

    def comp(c):
        kind = c[1]
        if kind == BASE:
            return one if c[2] == i else None
        if kind in (FIELD, JET):
            mu, I = (c[2], ()) if kind == FIELD else (c[2], c[3])
            if len(I) >= h:
                return None
            J = add_index(I, i)
            if not ctx.admitted(mu, J):
                return None
            return Expr.atom(jet(mu, J))
        return None

    return comp


def check_order(ctx, h, f: Expr):
    for c in f.free_coords():
        if c.kind == JET and (len(c.multi) > h or not ctx.admitted(c.index, c.multi)):
            raise SpaceError(f"coefficient depends on a coordinate outside the space of order {h}")


def d_function(ctx, h, f: Expr) -> Form:
    """Exterior derivative of a function on the space of home order h."""
    from .expr import derive
    f = Expr._coerce(f)
    check_order(ctx, h, f)
    terms: dict = {}
    for i in range(ctx.n):
        v = derive(f, _home_total(ctx, h, i))
        if not v.is_zero:
            terms[(k_dx(i),)] = v
    for c in sorted(f.free_coords()):
        kind = c[1]
        if kind == BASE:
            continue
        v = partial_derivative(f, c)
        if v.is_zero:
            continue
        if kind in (FIELD, JET):
            mu, I = (c[2], ()) if kind == FIELD else (c[2], c[3])
            key = k_top(mu, I) if len(I) == h else k_omega(mu, I)
        else:
            key = k_extra(c)
        terms[(key,)] = terms.get((key,), ZERO) + v
    return Form(ctx, h, terms)


def _d_covector(ctx, h, key) -> Form:
    if key[0] != W:
        return Form(ctx, h)
    _, r, mu, I = key
    out = Form(ctx, h)
    for j in range(ctx.n):
        J = add_index(I, j)
        if ctx.admitted(mu, J):
            b = Form(ctx, h, {((k_top(mu, J) if len(J) == h else k_omega(mu, J)),): ONE})
            out = out - wedge(b, dx(ctx, h, j))
    return out


def exterior_d(a: Form) -> Form:
    ctx, h = a.ctx, a.h
    out = Form(ctx, h)
    cache: dict = {}
    for w, c in a.terms.items():
        word_form = Form(ctx, h, {w: ONE})
        out = out + wedge(d_function(ctx, h, c), word_form)
        for pos, key in enumerate(w):
            if key[0] != W:
                continue
            dk = cache.get(key)
            if dk is None:
                dk = cache[key] = _d_covector(ctx, h, key)
            left = Form(ctx, h, {w[:pos]: ONE})
            right = Form(ctx, h, {w[pos + 1:]: ONE})
            piece = wedge(wedge(left, dk), right)
            out = out + (piece.scale(c) if pos % 2 == 0 else piece.scale(-c))
    return out


# ---------------------------------------------------------------- contraction and Lie derivative


def covector_value(xi: VectorField, ctx, h, key) -> Expr:
    t = key[0]
    if t == DX:
        return xi[base(key[1])]
    if t == W:
        _, r, mu, I = key
        val = xi[jet(mu, I)]
        for j in range(ctx.n):
            J = add_index(I, j)
            if ctx.admitted(mu, J):
                xj = xi[base(j)]
                if not xj.is_zero:
                    val = val - xj * Expr.atom(jet(mu, J))
        return val
    if t == TOP:
        return xi[jet(key[2], key[3])]
    return xi[key[1]]


def contract(xi: VectorField, a: Form) -> Form:
    ctx, h = a.ctx, a.h
    d: dict = {}
    vals: dict = {}
    for w, c in a.terms.items():
        for pos, key in enumerate(w):
            v = vals.get(key)
            if v is None:
                v = vals[key] = covector_value(xi, ctx, h, key)
            if v.is_zero:
                continue
            nw = w[:pos] + w[pos + 1:]
            term = c * v
            d[nw] = d.get(nw, ZERO) + (term if pos % 2 == 0 else -term)
    return Form(ctx, h, d)


def lie_derivative(xi: VectorField, a: Form) -> Form:
    return contract(xi, exterior_d(a)) + exterior_d(contract(xi, a))


# ---------------------------------------------------------------- contact structure


def contact_degree(word: tuple) -> int:
    return sum(1 for k in word if k[0] == W)


def is_horizontal(a: Form) -> bool:
    return all(all(k[0] == DX for k in w) for w in a.terms)


def is_contact(a: Form) -> bool:
    """Every term contains a contact covector (belongs to the contact ideal)."""
    return all(any(k[0] == W for k in w) for w in a.terms)


class NotLiftable(ValueError):
    pass


def contact_decompose(a: Form) -> list:
    """[a_0, a_1, ...] with a_i exactly i-contact, computed one order up."""
    if any(k[0] == EXTRA for w in a.terms for k in w):
        raise NotLiftable("form involves form-bundle fibre differentials")
    lifted = a.lift(a.h + 1)
    groups: dict = {}
    for w, c in lifted.terms.items():
        if any(k[0] == TOP for k in w):
            raise NotLiftable("top-layer differential survives the lift")
        groups.setdefault(contact_degree(w), {})[w] = c
    if not groups:
        return [Form(a.ctx, a.h + 1)]
    top = max(groups)
    return [Form(a.ctx, a.h + 1, groups.get(i, {})) for i in range(top + 1)]


def split_dh_dv(ctx, h, f: Expr):
    """(list of d_i f, vertical part d_v f as a 1-form on order h + 1)."""
    df = d_function(ctx, h + 1, f)
    comps = [df.coefficient((k_dx(i),)) for i in range(ctx.n)]
    dv = Form(ctx, h + 1, {w: c for w, c in df.terms.items() if w[0][0] != DX})
    return comps, dv


def horizontal_d(ctx, h, f: Expr) -> Form:
    comps, _ = split_dh_dv(ctx, h, f)
    return Form(ctx, h + 1, {(k_dx(i),): c for i, c in enumerate(comps)})


def con_differential(alpha: Form, beta: Form):
    """(-d alpha + beta, d beta)."""
    dA, dB = alpha.degree(), beta.degree()
    if dA not in (None, -1) and dB not in (None, -1) and dA + 1 != dB:
        raise SpaceError("con-differential needs a k-form and a (k+1)-form")
    da = exterior_d(alpha)
    return (-da) + beta, exterior_d(beta)


def substitute_form(a: Form, bindings: Mapping) -> Form:
    from .expr import substitute
    return a.map_coefficients(lambda c: substitute(c, bindings))


def eta_coefficient(a: Form) -> Expr:
    """Coefficient f of a top-degree horizontal form f eta (density divided out)."""
    word = tuple(k_dx(i) for i in range(a.ctx.n))
    return a.coefficient(word) * a.ctx.density ** -1


# ---------------------------------------------------------------- printing


def key_text(key, ctx) -> str:
    from .printing import coord_text
    names = ctx.names
    t = key[0]
    if t == DX:
        return f"dx[{names.base(key[1])}]" if ctx.names.base_names is None else f"d{ctx.base_names[key[1]]}"
    if t == W:
        _, r, mu, I = key
        sub = "".join(names.base(i) for i in I)
        return f"w[{names.field(mu)}" + (f",{sub}]" if I else "]")
    if t == TOP:
        _, r, mu, I = key
        if not I:
            return f"d{coord_text(Coord(FIELD, mu), names)}"
        return f"d{coord_text(jet(mu, I), names)}"
    return f"d{coord_text(key[1], names)}"


def form_text(a: Form) -> str:
    from .printing import to_text
    if a.is_zero:
        return "0"
    parts = []
    for w in sorted(a.terms):
        c = a.terms[w]
        word = " ^ ".join(key_text(k, a.ctx) for k in w)
        coef = to_text(c, a.ctx)
        if not w:
            parts.append(coef)
        elif c == ONE:
            parts.append(word)
        else:
            parts.append(f"({coef}) {word}")
    return " + ".join(parts)


def key_latex(key, ctx) -> str:
    from .printing import coord_latex, latex_name
    names = ctx.names
    t = key[0]
    if t == DX:
        return "d" + (latex_name(ctx.base_names[key[1]]) if names.base_names else f"x^{{{key[1] + 1}}}")
    if t == W:
        _, r, mu, I = key
        sup = latex_name(ctx.field_names[mu]) if names.field_names else str(mu + 1)
        sub = "".join(latex_name(ctx.base_names[i]) if names.base_names else str(i + 1) for i in I)
        return r"\omega^{" + sup + "}" + ("_{" + sub + "}" if I else "")
    if t == TOP:
        return "d" + coord_latex(jet(key[2], key[3]), names)
    return "d" + coord_latex(key[1], names)


def form_latex(a: Form) -> str:
    from .printing import to_latex
    if a.is_zero:
        return "0"
    parts = []
    for w in sorted(a.terms):
        c = a.terms[w]
        word = r" \wedge ".join(key_latex(k, a.ctx) for k in w)
        coef = to_latex(c, a.ctx)
        if not w:
            parts.append(coef)
        elif c == ONE:
            parts.append(word)
        else:
            parts.append(r"\left(" + coef + r"\right) " + word)
    return " + ".join(parts)
