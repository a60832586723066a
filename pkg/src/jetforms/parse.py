"""Expression grammar.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' exponent)?
    exponent:= ['-'] INT | '(' ['-'] INT ')'
    primary := NUMBER | '(' expr ')' | coordinate | call | name

Coordinates are ``x[i]``, ``y[mu]``, ``z[mu,(i1,...,ir)]`` with 1-based
integers or declared names, or bare declared base/field names.  Calls are
``diff(e, v, ...)``, ``Int(e, v)``, ``exp(e)``, ``at(f, e1, ..., en)`` and
declared functions ``f`` / ``f(x,y,z)`` / ``f(e1, ..., en)``.  Form-bundle
fibre coordinates are written ``_p``, ``_p[i,mu]``, ``_ps[mu]``, ``_q[mu]``
and ``_q[i,mu]``.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .expr import (DENSITY, JET, MOMENTUM, Q_FIELD, Q_JET, SOURCE_MOMENTUM, Coord,
                   Expr, Fn, antiderivative, base, diff, exp,
                   field, jet, make_fn_atom)


class ParseError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.message, self.pos, self.text = message, pos, text
        super().__init__(f"{message} at column {pos + 1}")


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z0-9_]*)|(.))")

GROUPS = ('x', 'y', 'z')
RESERVED = {'diff', 'Int', 'exp', 'at'}


def tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            break
        if mt.group(0).strip() == "":
            break
        num, ident, op = mt.groups()
        start = mt.start(1) if num else mt.start(2) if ident else mt.start(3)
        if num:
            toks.append(('num', num, start))
        elif ident:
            toks.append(('id', ident, start))
        else:
            toks.append(('op', op, start))
        pos = mt.end()
    toks.append(('end', '', len(text)))
    return toks


class Parser:
    def __init__(self, text: str, ctx):
        self.text, self.ctx = text, ctx
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], self.text)

    def expect(self, op):
        t = self.next()
        if t[1] != op or t[0] not in ('op',):
            raise ParseError(f"expected '{op}'", t[2], self.text)
        return t

    def accept(self, op):
        t = self.peek()
        if t[0] == 'op' and t[1] == op:
            self.i += 1
            return True
        return False

    # grammar
    def parse(self) -> Expr:
        if self.peek()[0] == 'end':
            self.error("empty expression")
        e = self.expr()
        if self.peek()[0] != 'end':
            self.error(f"unexpected '{self.peek()[1]}'")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.accept('+'):
                e = e + self.term()
            elif self.accept('-'):
                e = e - self.term()
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            if self.accept('*'):
                e = e * self.unary()
            elif self.peek()[1] == '/' and self.peek()[0] == 'op':
                tok = self.next()
                d = self.unary()
                if d.is_zero:
                    raise ParseError("division by zero", tok[2], self.text)
                e = e / d
            else:
                return e

    def unary(self) -> Expr:
        if self.accept('-'):
            return -self.unary()
        if self.accept('+'):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        b = self.primary()
        if self.accept('^'):
            tok = self.peek()
            paren = self.accept('(')
            neg = self.accept('-')
            t = self.next()
            if t[0] != 'num' or '.' in t[1]:
                raise ParseError("exponent must be an integer", t[2], self.text)
            n = int(t[1])
            if paren:
                self.expect(')')
            n = -n if neg else n
            if n < 0 and b.is_zero:
                raise ParseError("division by zero", tok[2], self.text)
            return b ** n
        return b

    def primary(self) -> Expr:
        t = self.peek()
        if t[0] == 'num':
            self.next()
            return Expr.const(Fraction(t[1]))
        if t[0] == 'op' and t[1] == '(':
            self.next()
            e = self.expr()
            self.expect(')')
            return e
        if t[0] == 'id':
            return self.identifier()
        self.error("expected an expression" if t[0] != 'end' else "unexpected end of expression")

    # identifiers
    def identifier(self) -> Expr:
        tok = self.next()
        name = tok[1]
        nxt = self.peek()
        if name in ('x', 'y', 'z') and nxt[1] == '[':
            return Expr.atom(self.coord_after(name, tok))
        if name in ('_p', '_ps', '_q'):
            return Expr.atom(self.extra_coord(name, tok))
        if name == 'diff':
            return self.call_diff(tok)
        if name == 'Int':
            return self.call_int(tok)
        if name == 'exp':
            self.expect('(')
            e = self.expr()
            self.expect(')')
            return exp(e)
        if name == 'at':
            return self.call_at(tok)
        if name in self.functions():
            return self.function(name, tok)
        c = self.named_coord(name)
        if c is not None:
            return Expr.atom(c)
        raise ParseError(f"undeclared name '{name}'", tok[2], self.text)

    def functions(self) -> dict:
        return getattr(self.ctx, 'functions', {}) or {}

    def named_coord(self, name):
        ctx = self.ctx
        if name in ctx.base_names:
            return base(ctx.base_names.index(name))
        if name in ctx.field_names:
            return field(ctx.field_names.index(name))
        return None

    def index(self, names, what):
        t = self.next()
        if t[0] == 'num':
            v = int(t[1]) - 1
            if not 0 <= v < len(names):
                raise ParseError(f"{what} index {t[1]} out of range", t[2], self.text)
            return v
        if t[0] == 'id' and t[1] in names:
            return names.index(t[1])
        raise ParseError(f"bad {what} index", t[2], self.text)

    def coord_after(self, name, tok) -> Coord:
        ctx = self.ctx
        self.expect('[')
        if name == 'x':
            i = self.index(ctx.base_names, 'base')
            self.expect(']')
            return base(i)
        mu = self.index(ctx.field_names, 'field')
        if name == 'y':
            self.expect(']')
            return field(mu)
        self.expect(',')
        multi = []
        if self.accept('('):
            multi.append(self.index(ctx.base_names, 'base'))
            while self.accept(','):
                multi.append(self.index(ctx.base_names, 'base'))
            self.expect(')')
        else:
            multi.append(self.index(ctx.base_names, 'base'))
        self.expect(']')
        c = jet(mu, multi)
        admitted = getattr(ctx, 'admitted', None)
        if admitted is not None and c.kind == JET and not admitted(mu, c.multi):
            raise ParseError("jet coordinate not admitted by the context", tok[2], self.text)
        return c

    def extra_coord(self, name, tok) -> Coord:
        ctx = self.ctx
        if name == '_p' and self.peek()[1] != '[':
            return Coord(DENSITY, 0)
        self.expect('[')
        if name == '_ps':
            mu = self.index(ctx.field_names, 'field')
            self.expect(']')
            return Coord(SOURCE_MOMENTUM, mu)
        save = self.i
        first = self.next()
        if self.peek()[1] == ',':
            self.i = save
            i = self.index(ctx.base_names, 'base')
            self.expect(',')
            mu = self.index(ctx.field_names, 'field')
            self.expect(']')
            return Coord(MOMENTUM if name == '_p' else Q_JET, mu, (i,))
        self.i = save
        if name == '_p':
            raise ParseError("_p takes [i,mu]", first[2], self.text)
        mu = self.index(ctx.field_names, 'field')
        self.expect(']')
        return Coord(Q_FIELD, mu)

    def coord_ref(self) -> Coord:
        tok = self.next()
        if tok[0] != 'id':
            raise ParseError("expected a coordinate", tok[2], self.text)
        if tok[1] in ('x', 'y', 'z') and self.peek()[1] == '[':
            return self.coord_after(tok[1], tok)
        if tok[1] in ('_p', '_ps', '_q'):
            return self.extra_coord(tok[1], tok)
        c = self.named_coord(tok[1])
        if c is None:
            raise ParseError(f"'{tok[1]}' is not a coordinate", tok[2], self.text)
        return c

    def call_diff(self, tok) -> Expr:
        self.expect('(')
        e = self.expr()
        vs = []
        while self.accept(','):
            vs.append(self.coord_ref())
        self.expect(')')
        if not vs:
            raise ParseError("diff needs at least one variable", tok[2], self.text)
        return diff(e, *vs)

    def call_int(self, tok) -> Expr:
        self.expect('(')
        e = self.expr()
        self.expect(',')
        v = self.coord_ref()
        self.expect(')')
        return antiderivative(e, v)

    def call_at(self, tok) -> Expr:
        self.expect('(')
        f = self.expr()
        vals = []
        while self.accept(','):
            vals.append(self.expr())
        self.expect(')')
        return self._compose(f, vals, tok)

    def _compose(self, f: Expr, vals, tok) -> Expr:
        ((mono, coef),) = f.terms.items() if f.is_monomial else ((None, None),)
        if coef != 1 or len(mono) != 1 or mono[0][1] != 1 or mono[0][0][0] != 'f':
            raise ParseError("at() needs a single function atom", tok[2], self.text)
        a = mono[0][0]
        if a.at:
            raise ParseError("at() of an already composed atom", tok[2], self.text)
        if len(vals) != len(a.args):
            raise ParseError(f"{a.name} takes {len(a.args)} arguments, got {len(vals)}",
                             tok[2], self.text)
        return make_fn_atom(a.name, a.args, a.derivs, tuple(vals))

    def function(self, name, tok) -> Expr:
        args = tuple(self.functions()[name])
        atom = Expr.atom(Fn(name, args))
        if not (self.peek()[0] == 'op' and self.peek()[1] == '('):
            return atom
        self.next()
        if self.accept(')'):
            if args:
                raise ParseError(f"{name} takes {len(args)} arguments", tok[2], self.text)
            return atom
        items, raws = [], []
        while True:
            nt = self.peek()
            single = nt[0] == 'id' and self.peek(1)[1] in (',', ')')
            raws.append(nt[1] if single else None)
            if single and nt[1] in GROUPS and self.named_coord(nt[1]) is None:
                self.next()
                items.append(None)
            else:
                items.append(self.expr())
            if self.accept(')'):
                break
            self.expect(',')
        if all(r in GROUPS for r in raws):
            return atom
        if any(it is None for it in items):
            raise ParseError("cannot mix argument groups and expressions", tok[2], self.text)
        if [Expr.atom(a) for a in args] == items:
            return atom
        if len(items) != len(args):
            raise ParseError(f"{name} takes {len(args)} arguments, got {len(items)}",
                             tok[2], self.text)
        return make_fn_atom(name, args, (), tuple(items))


def parse_expr(text: str, ctx) -> Expr:
    """Parse ``text`` in the context's naming scheme and declared functions."""
    return Parser(text, ctx).parse()


def parse_coord(text: str, ctx) -> Coord:
    p = Parser(text, ctx)
    c = p.coord_ref()
    if p.peek()[0] != 'end':
        p.error("trailing input after coordinate")
    return c


def expand_argument_groups(decl: str, ctx) -> tuple:
    """Argument list of a function declaration such as ``x,y,z`` or ``theta, t``.

    Group tokens: x (all base coordinates), y (all fields), z (all admitted jet
    coordinates up to order k), z1 (first-order jets only).
    """
    out = []
    for raw in [s.strip() for s in decl.split(',') if s.strip()]:
        if raw in ctx.base_names or raw in ctx.field_names:
            out.append(Parser(raw, ctx).named_coord(raw))
        elif raw == 'x':
            out.extend(ctx.base_coords())
        elif raw == 'y':
            out.extend(ctx.field_coords())
        elif raw == 'z':
            out.extend(ctx.jet_coords())
        elif raw == 'z1':
            out.extend(ctx.jet_coords(1))
        else:
            out.append(parse_coord(raw, ctx))
    seen, uniq = set(), []
    for c in out:
        if c not in seen:
            seen.add(c)
            uniq.append(c)
    return tuple(uniq)
