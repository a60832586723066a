"""Deterministic text and LaTeX printers for expressions."""
from __future__ import annotations

from fractions import Fraction

from .expr import (BASE, DENSITY, FIELD, JET, MOMENTUM, Q_FIELD, Q_JET,
                   SOURCE_MOMENTUM, Expr)


class Names:
    """Display names for base coordinates and fields (defaults are generic)."""

    def __init__(self, base_names=None, field_names=None):
        self.base_names = list(base_names) if base_names else None
        self.field_names = list(field_names) if field_names else None

    def base(self, i: int) -> str:
        return self.base_names[i] if self.base_names else str(i + 1)

    def field(self, mu: int) -> str:
        return self.field_names[mu] if self.field_names else str(mu + 1)


GENERIC = Names()


def _names(ctx):
    if ctx is None:
        return GENERIC
    if isinstance(ctx, Names):
        return ctx
    return ctx.names


def coord_text(c, names: Names) -> str:
    kind, idx, multi = c[1], c[2], c[3]
    if kind == BASE:
        return names.base_names[idx] if names.base_names else f"x[{idx + 1}]"
    if kind == FIELD:
        return names.field_names[idx] if names.field_names else f"y[{idx + 1}]"
    if kind == JET:
        inner = ",".join(names.base(i) for i in multi)
        return f"z[{names.field(idx)},({inner})]"
    if kind == DENSITY:
        return "_p"
    if kind == MOMENTUM:
        return f"_p[{names.base(multi[0])},{names.field(idx)}]"
    if kind == SOURCE_MOMENTUM:
        return f"_ps[{names.field(idx)}]"
    if kind == Q_FIELD:
        return f"_q[{names.field(idx)}]"
    if kind == Q_JET:
        return f"_q[{names.base(multi[0])},{names.field(idx)}]"
    raise ValueError(c)


def atom_text(a, names: Names) -> str:
    t = a[0]
    if t == 'c':
        return coord_text(a, names)
    if t == 'f':
        _, name, args, derivs, at = a
        s = name
        if derivs:
            s = f"diff({name}, {', '.join(coord_text(d, names) for d in derivs)})"
        if at:
            s = f"at({s}, {', '.join(to_text(e, names) for e in at)})"
        return s
    if t == 'e':
        return f"exp({to_text(a[1], names)})"
    if t == 'i':
        return f"Int({to_text(a[1], names)}, {coord_text(a[2], names)})"
    if t == 'v':
        return f"({to_text(a[1], names)})"
    raise ValueError(a)


def _factor(a, p, names) -> str:
    s = atom_text(a, names)
    if a[0] == 'v':
        # the atom is the reciprocal itself
        return f"{s}^({-p})"
    if p == 1:
        return s
    return f"{s}^{p}" if p > 0 else f"{s}^({p})"


def to_text(e: Expr, ctx=None) -> str:
    names = _names(ctx)
    if e.is_zero:
        return "0"
    parts = []
    for m, c in e.key():
        factors = [_factor(a, p, names) for a, p in m]
        neg = c < 0
        mag = -c if neg else c
        if not factors:
            body = _num(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _num(mag) + "*" + "*".join(factors)
        parts.append((neg, body))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for neg, body in parts[1:]:
        out += (" - " if neg else " + ") + body
    return out


def _num(c) -> str:
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    return str(c)


# ---------------------------------------------------------------- LaTeX

GREEK = {
    'alpha', 'beta', 'gamma', 'delta', 'epsilon', 'varepsilon', 'zeta', 'eta', 'theta',
    'vartheta', 'iota', 'kappa', 'lambda', 'mu', 'nu', 'xi', 'pi', 'rho', 'sigma', 'tau',
    'upsilon', 'phi', 'varphi', 'chi', 'psi', 'omega', 'Gamma', 'Delta', 'Theta',
    'Lambda', 'Xi', 'Pi', 'Sigma', 'Phi', 'Psi', 'Omega',
}
ALIASES = {'eps': 'varepsilon', 'lam': 'lambda', 'lamhat': 'hat{\\lambda}'}


def latex_name(name: str) -> str:
    head, _, tail = name.partition('_')
    stem = head.rstrip('0123456789')
    digits = head[len(stem):]
    if stem in GREEK:
        stem = '\\' + stem
    elif stem in ALIASES:
        stem = '\\' + ALIASES[stem]
    elif len(stem) > 1:
        stem = '\\mathrm{' + stem + '}'
    out = stem
    if digits:
        out += '^{' + digits + '}'
    if tail:
        out += '_{\\mathrm{' + tail + '}}' if len(tail) > 1 else '_{' + tail + '}'
    return out


def coord_latex(c, names: Names) -> str:
    kind, idx, multi = c[1], c[2], c[3]
    if kind == BASE:
        return latex_name(names.base_names[idx]) if names.base_names else f"x^{{{idx + 1}}}"
    if kind == FIELD:
        return latex_name(names.field_names[idx]) if names.field_names else f"y^{{{idx + 1}}}"
    if kind == JET:
        sub = "".join(latex_name(names.base(i)) if names.base_names else str(i + 1) for i in multi)
        if names.field_names:
            return "{" + latex_name(names.field_names[idx]) + "}_{," + sub + "}"
        return f"z^{{{idx + 1}}}_{{{sub}}}"
    if kind == DENSITY:
        return "p"
    if kind == MOMENTUM:
        return f"p^{{{names.base(multi[0])}}}_{{{names.field(idx)}}}"
    if kind == SOURCE_MOMENTUM:
        return f"p_{{{names.field(idx)}}}"
    if kind == Q_FIELD:
        return f"q_{{{names.field(idx)}}}"
    return f"q^{{{names.base(multi[0])}}}_{{{names.field(idx)}}}"


def atom_latex(a, names: Names) -> str:
    t = a[0]
    if t == 'c':
        return coord_latex(a, names)
    if t == 'f':
        _, name, args, derivs, at = a
        s = latex_name(name)
        if derivs:
            s = "{" + s + "}_{," + " ".join(coord_latex(d, names) for d in derivs) + "}"
        if at:
            s += r"\left(" + ", ".join(to_latex(e, names) for e in at) + r"\right)"
        return s
    if t == 'e':
        return r"e^{" + to_latex(a[1], names) + "}"
    if t == 'i':
        return r"\int^{" + coord_latex(a[2], names) + "}" + _paren_latex(a[1], names) + r"\,d" + coord_latex(a[2], names)
    if t == 'v':
        return _paren_latex(a[1], names)
    raise ValueError(a)


def _paren_latex(e, names):
    s = to_latex(e, names)
    return r"\left(" + s + r"\right)" if len(e.terms) > 1 else s


def to_latex(e: Expr, ctx=None) -> str:
    names = _names(ctx)
    if e.is_zero:
        return "0"
    parts = []
    for m, c in e.key():
        num, den = [], []
        for a, p in m:
            if a[0] == 'v':
                p = -p
            s = atom_latex(a, names)
            target = num if p > 0 else den
            q = abs(p)
            target.append(s if q == 1 else "{" + s + "}^{" + str(q) + "}")
        neg = c < 0
        mag = Fraction(-c if neg else c)
        top = " ".join(num)
        if mag.numerator != 1 or not top:
            top = (str(mag.numerator) + " " + top).strip()
        bottom = " ".join(den)
        if mag.denominator != 1:
            bottom = (str(mag.denominator) + " " + bottom).strip()
        body = r"\frac{" + top + "}{" + bottom + "}" if bottom else top
        parts.append((neg, body))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for neg, body in parts[1:]:
        out += (" - " if neg else " + ") + body
    return out
