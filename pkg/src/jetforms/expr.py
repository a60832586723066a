"""Scalar expression kernel.

An :class:`Expr` is a Laurent polynomial with rational coefficients whose
variables are *atoms*: jet coordinates, opaque function atoms (with a sorted
multiset of applied partial derivatives), exponentials, antiderivatives and
reciprocals of non-monomial expressions.  The representation is canonical:
two expressions that agree as polynomials in their atoms have identical
term dictionaries, so structural equality is mathematical equality whenever
no reciprocal atom is involved.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Optional

Number = int | Fraction


def _norm(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


# ---------------------------------------------------------------- atoms

BASE, FIELD, JET, DENSITY, MOMENTUM, SOURCE_MOMENTUM, Q_FIELD, Q_JET = range(8)
EXTRA_KINDS = (DENSITY, MOMENTUM, SOURCE_MOMENTUM, Q_FIELD, Q_JET)


class Atom(tuple):
    """Base class; every atom is a tuple whose first entry is a tag string."""

    __slots__ = ()

    @property
    def tag(self) -> str:
        return self[0]


class Coord(Atom):
    """Coordinate ('c', kind, index, multi).

    kind BASE: x^index.  FIELD: y^index.  JET: z^index_multi with a sorted
    multi-index.  The form-bundle fibre coordinates use DENSITY (p),
    MOMENTUM (p^i_mu as index=mu, multi=(i,)), SOURCE_MOMENTUM (p_sigma),
    Q_FIELD (q_mu) and Q_JET (q^i_mu).  All indices are 0-based.
    """

    __slots__ = ()

    def __new__(cls, kind: int, index: int = 0, multi: tuple = ()):
        return tuple.__new__(cls, ('c', kind, index, tuple(multi)))

    def __getnewargs__(self):
        return (self[1], self[2], self[3])

    @property
    def kind(self) -> int:
        return self[1]

    @property
    def index(self) -> int:
        return self[2]

    @property
    def multi(self) -> tuple:
        return self[3]

    @property
    def order(self) -> int:
        return len(self[3]) if self[1] == JET else 0

    def __repr__(self):
        return f"Coord({self[1]}, {self[2]}, {self[3]})"


def base(i: int) -> Coord:
    return Coord(BASE, i)


def field(mu: int) -> Coord:
    return Coord(FIELD, mu)


def jet(mu: int, multi: Iterable[int] = ()) -> Coord:
    """z^mu_I; the empty multi-index gives the fibre coordinate y^mu."""
    multi = tuple(sorted(multi))
    if not multi:
        return Coord(FIELD, mu)
    return Coord(JET, mu, multi)


def jet_key(c: Coord) -> tuple[int, tuple]:
    """(mu, I) for a fibre or jet coordinate."""
    if c[1] == FIELD:
        return c[2], ()
    if c[1] == JET:
        return c[2], c[3]
    raise ValueError(f"not a fibre or jet coordinate: {c!r}")


class Fn(Atom):
    """Function atom ('f', name, args, derivs, at).

    ``args`` are the declared argument coordinates, ``derivs`` the sorted
    multiset of coordinates already differentiated by, and ``at`` either ()
    (evaluated at the identity) or a tuple of expressions substituted for the
    arguments.
    """

    __slots__ = ()

    def __new__(cls, name: str, args: tuple = (), derivs: tuple = (), at: tuple = ()):
        return tuple.__new__(cls, ('f', name, tuple(args), tuple(sorted(derivs)), tuple(at)))

    def __getnewargs__(self):
        return (self[1], self[2], self[3], self[4])

    @property
    def name(self) -> str:
        return self[1]

    @property
    def args(self) -> tuple:
        return self[2]

    @property
    def derivs(self) -> tuple:
        return self[3]

    @property
    def at(self) -> tuple:
        return self[4]

    def parent(self) -> "Fn":
        return Fn(self[1], self[2], (), self[4])

    def __repr__(self):
        return f"Fn({self[1]!r}, derivs={self[3]!r}, composed={bool(self[4])})"


class ExpAtom(Atom):
    __slots__ = ()

    def __new__(cls, arg: "Expr"):
        return tuple.__new__(cls, ('e', arg))

    def __getnewargs__(self):
        return (self[1],)

    @property
    def arg(self) -> "Expr":
        return self[1]


class IntAtom(Atom):
    """Antiderivative of ``integrand`` with respect to ``var`` (opaque)."""

    __slots__ = ()

    def __new__(cls, integrand: "Expr", var: Coord):
        return tuple.__new__(cls, ('i', integrand, var))

    def __getnewargs__(self):
        return (self[1], self[2])

    @property
    def integrand(self) -> "Expr":
        return self[1]

    @property
    def var(self) -> Coord:
        return self[2]


class InvAtom(Atom):
    """Reciprocal of a non-monomial expression normalized to leading coefficient 1."""

    __slots__ = ()

    def __new__(cls, den: "Expr"):
        return tuple.__new__(cls, ('v', den))

    def __getnewargs__(self):
        return (self[1],)

    @property
    def den(self) -> "Expr":
        return self[1]


# ---------------------------------------------------------------- Expr


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, e in m2:
        d[a] = d.get(a, 0) + e
    return _mono_from_dict(d)


def _mono_from_dict(d: dict) -> tuple:
    exps = [(a, e) for a, e in d.items() if e and a[0] == 'e']
    if len(exps) > 1 or (exps and exps[0][1] != 1):
        total = ZERO
        for a, e in exps:
            total = total + a[1] * e
            del d[a]
        if not total.is_zero:
            d[ExpAtom(total)] = 1
    return tuple(sorted((a, e) for a, e in d.items() if e))


def _mono_pow(m: tuple, n: int) -> tuple:
    return _mono_from_dict({a: e * n for a, e in m})


class Expr:
    """Immutable canonical Laurent polynomial over Q."""

    __slots__ = ('_t', '_h', '_key', '_free')

    def __init__(self, terms: Optional[dict] = None):
        self._t = terms if terms is not None else {}
        self._h = None
        self._key = None
        self._free = None

    # construction
    @staticmethod
    def const(c) -> "Expr":
        c = _norm(Fraction(c)) if not isinstance(c, int) else c
        return Expr({(): c}) if c else Expr()

    @staticmethod
    def atom(a: Atom, power: int = 1) -> "Expr":
        return Expr({_mono_from_dict({a: power}): 1})

    @property
    def terms(self) -> dict:
        return self._t

    # predicates
    @property
    def is_zero(self) -> bool:
        return not self._t

    @property
    def is_constant(self) -> bool:
        return not self._t or (len(self._t) == 1 and () in self._t)

    def constant_value(self):
        if not self._t:
            return 0
        if self.is_constant:
            return self._t[()]
        raise ValueError("expression is not constant")

    @property
    def is_monomial(self) -> bool:
        return len(self._t) == 1

    # ordering / hashing
    def key(self) -> tuple:
        if self._key is None:
            self._key = tuple(sorted(self._t.items()))
        return self._key

    def __hash__(self):
        if self._h is None:
            self._h = hash(self.key())
        return self._h

    def __eq__(self, other):
        if isinstance(other, Expr):
            return self._t == other._t
        if isinstance(other, (int, Fraction)):
            return self._t == Expr.const(other)._t
        return NotImplemented

    def __lt__(self, other: "Expr"):
        return self.key() < other.key()

    def __le__(self, other: "Expr"):
        return self.key() <= other.key()

    def __gt__(self, other: "Expr"):
        return self.key() > other.key()

    def __bool__(self):
        return bool(self._t)

    # arithmetic
    @staticmethod
    def _coerce(o) -> "Expr":
        if isinstance(o, Expr):
            return o
        if isinstance(o, (int, Fraction)):
            return Expr.const(o)
        if isinstance(o, Atom):
            return Expr.atom(o)
        raise TypeError(f"cannot coerce {type(o).__name__} to Expr")

    def __add__(self, other):
        try:
            other = Expr._coerce(other)
        except TypeError:
            return NotImplemented
        if not other._t:
            return self
        if not self._t:
            return other
        d = dict(self._t)
        for m, c in other._t.items():
            v = d.get(m, 0) + c
            if v:
                d[m] = _norm(v)
            else:
                d.pop(m, None)
        return Expr(d)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self._t.items()})

    def __sub__(self, other):
        try:
            other = Expr._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Expr._coerce(other) - self

    def __mul__(self, other):
        try:
            other = Expr._coerce(other)
        except TypeError:
            return NotImplemented
        if not self._t or not other._t:
            return ZERO
        if len(other._t) == 1 and () in other._t:
            c0 = other._t[()]
            if c0 == 1:
                return self
            return Expr({m: _norm(c * c0) for m, c in self._t.items()})
        if len(self._t) == 1 and () in self._t:
            return other * self
        d: dict = {}
        for m1, c1 in self._t.items():
            for m2, c2 in other._t.items():
                m = _mono_mul(m1, m2)
                v = d.get(m, 0) + c1 * c2
                if v:
                    d[m] = _norm(v)
                else:
                    d.pop(m, None)
        return Expr(d)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n == 0:
            return ONE
        if len(self._t) == 1:
            (m, c), = self._t.items()
            cc = Fraction(c) ** n
            mono = _mono_pow(m, n)
            out = Expr({mono: _norm(cc)})
            for a, p in mono:
                if a[0] == 'v' and p < 0:
                    rest = tuple(x for x in mono if x[0] != a)
                    out = Expr({rest: _norm(cc)}) * a[1] ** (-p)
                    break
            return out
        if n < 0:
            return inv(self) ** (-n)
        result, b = ONE, self
        while n:
            if n & 1:
                result = result * b
            n >>= 1
            if n:
                b = b * b
        return result

    def __truediv__(self, other):
        try:
            other = Expr._coerce(other)
        except TypeError:
            return NotImplemented
        return self * (other ** -1)

    def __rtruediv__(self, other):
        return Expr._coerce(other) / self

    # structure
    def free_coords(self) -> frozenset:
        """Coordinates the expression depends on (through any atom)."""
        if self._free is None:
            s = set()
            for m in self._t:
                for a, _ in m:
                    s |= atom_free_coords(a)
            self._free = frozenset(s)
        return self._free

    def atoms(self) -> set:
        """Top-level atoms occurring in monomials."""
        return {a for m in self._t for a, _ in m}

    def leaf_atoms(self) -> set:
        """Atoms needing a value for numeric evaluation (recursing into exp/reciprocals)."""
        out: set = set()
        for m in self._t:
            for a, _ in m:
                _collect_leaves(a, out)
        return out

    def has_inverse(self) -> bool:
        return any(_has_inv(a) for m in self._t for a, _ in m)

    def is_polynomial(self) -> bool:
        """True when every atom is a coordinate with nonnegative power."""
        return all(a[0] == 'c' and e > 0 for m in self._t for a, e in m)

    def __repr__(self):
        from .printing import to_text
        return f"Expr({to_text(self)})"

    def __str__(self):
        from .printing import to_text
        return to_text(self)

    def __reduce__(self):
        return (Expr, (dict(self._t),))


ZERO = Expr()
ONE = Expr({(): 1})


def const(c) -> Expr:
    return Expr.const(c)


def var(c: Atom) -> Expr:
    return Expr.atom(c)


def fn(name: str, args: Iterable[Coord] = (), derivs: Iterable[Coord] = ()) -> Expr:
    args = tuple(args)
    for d in derivs:
        if d not in args:
            raise ValueError(f"derivative by {d!r} which is not an argument of {name}")
    return Expr.atom(Fn(name, args, tuple(derivs)))


def exp(arg: Expr) -> Expr:
    arg = Expr._coerce(arg)
    if arg.is_zero:
        return ONE
    return Expr.atom(ExpAtom(arg))


def antiderivative(integrand: Expr, v: Coord) -> Expr:
    integrand = Expr._coerce(integrand)
    if integrand.is_zero:
        return ZERO
    return Expr.atom(IntAtom(integrand, v))


def inv(e: Expr) -> Expr:
    e = Expr._coerce(e)
    if e.is_zero:
        raise ZeroDivisionError("division by the zero expression")
    if e.is_monomial:
        return e ** -1
    lead_m, lead_c = min(e._t.items())
    scaled = e
    if lead_c != 1:
        scaled = Expr({m: _norm(Fraction(c) / lead_c) for m, c in e._t.items()})
    return Expr({((InvAtom(scaled), 1),): _norm(Fraction(1) / lead_c)})


@lru_cache(maxsize=None)
def atom_free_coords(a: Atom) -> frozenset:
    t = a[0]
    if t == 'c':
        return frozenset((a,))
    if t == 'f':
        if a[4]:
            s: set = set()
            for e in a[4]:
                s |= e.free_coords()
            return frozenset(s)
        return frozenset(a[2])
    if t == 'e' or t == 'v':
        return a[1].free_coords()
    if t == 'i':
        return a[1].free_coords() | {a[2]}
    raise TypeError(a)


def _collect_leaves(a: Atom, out: set):
    t = a[0]
    if t in ('c', 'f', 'i'):
        out.add(a)
    else:
        out |= a[1].leaf_atoms()


def _has_inv(a: Atom) -> bool:
    t = a[0]
    if t == 'v':
        return True
    if t == 'e':
        return a[1].has_inverse()
    if t == 'f' and a[4]:
        return any(e.has_inverse() for e in a[4])
    if t == 'i':
        return a[1].has_inverse()
    return False


# ---------------------------------------------------------------- derivations

Component = Callable[[Coord], Optional[Expr]]


def derive(e: Expr, comp: Component, _cache: Optional[dict] = None) -> Expr:
    """Apply the derivation V = sum_c comp(c) d/dc to ``e``.

    ``comp`` returns the component of the derivation on a coordinate (or None
    for zero).  Function atoms pick up derivative multisets, exponentials and
    reciprocals follow the chain rule and antiderivatives satisfy
    V(Int(f, v)) = comp(v) f + Int(V' f, v) where V' omits the v-component.
    """
    cache = {} if _cache is None else _cache
    out: dict = {}
    for m, c in e._t.items():
        for k, (a, p) in enumerate(m):
            da = cache.get(a)
            if da is None:
                da = _derive_atom(a, comp, cache)
                cache[a] = da
            if da.is_zero:
                continue
            rest = list(m)
            if p == 1:
                del rest[k]
            else:
                rest[k] = (a, p - 1)
            prod = Expr({tuple(rest): _norm(c * p)}) * da
            for mm, cc in prod._t.items():
                v = out.get(mm, 0) + cc
                if v:
                    out[mm] = _norm(v)
                else:
                    out.pop(mm, None)
    return Expr(out)


def _derive_atom(a: Atom, comp: Component, cache: dict) -> Expr:
    t = a[0]
    if t == 'c':
        r = comp(a)
        return ZERO if r is None else r
    if t == 'f':
        _, name, args, derivs, at = a
        total = ZERO
        if not at:
            for arg in args:
                r = comp(arg)
                if r is not None and not r.is_zero:
                    total = total + r * Expr.atom(Fn(name, args, derivs + (arg,)))
        else:
            for arg, sub in zip(args, at):
                r = derive(sub, comp, cache)
                if not r.is_zero:
                    total = total + r * Expr.atom(Fn(name, args, derivs + (arg,), at))
        return total
    if t == 'e':
        darg = derive(a[1], comp, cache)
        return ZERO if darg.is_zero else Expr.atom(a) * darg
    if t == 'v':
        dden = derive(a[1], comp, cache)
        return ZERO if dden.is_zero else -(Expr.atom(a, 2) * dden)
    if t == 'i':
        integrand, v = a[1], a[2]
        r = comp(v)
        out = ZERO if r is None else r * integrand

        def comp_without(c, _v=v):
            return None if c == _v else comp(c)

        inner = derive(integrand, comp_without)
        if not inner.is_zero:
            out = out + antiderivative(inner, v)
        return out
    raise TypeError(a)


def partial_derivative(e: Expr, v: Coord) -> Expr:
    """d e / d v holding all other coordinates fixed."""
    one = ONE

    def comp(c):
        return one if c == v else None

    if v not in e.free_coords():
        return ZERO
    return derive(e, comp)


def diff(e: Expr, *vs: Coord) -> Expr:
    for v in vs:
        e = partial_derivative(e, v)
    return e


# ---------------------------------------------------------------- substitution


class SubstitutionError(ValueError):
    pass


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneous substitution.

    Keys may be coordinates (bound to expressions), function names or bare
    function atoms (bound to a concrete expression in the atom's declared
    argument coordinates; derivative atoms are rewritten by differentiating
    that expression), or derivative atoms themselves.
    """
    if not bindings:
        return e
    coord_b: dict = {}
    fn_b: dict = {}
    atom_b: dict = {}
    for k, val in bindings.items():
        val = Expr._coerce(val)
        if isinstance(k, str):
            fn_b[k] = val
        elif isinstance(k, Expr):
            if not k.is_monomial or len(next(iter(k._t))) != 1:
                raise SubstitutionError("binding key must be a single atom")
            (m, c), = k._t.items()
            (a, p), = m
            if c != 1 or p != 1:
                raise SubstitutionError("binding key must be a single atom")
            _add_atom_binding(a, val, coord_b, fn_b, atom_b)
        else:
            _add_atom_binding(k, val, coord_b, fn_b, atom_b)
    for a, val in atom_b.items():
        parent_val = fn_b.get(a[1])
        if parent_val is not None:
            implied = diff(parent_val, *a[3])
            if not equals(implied, val):
                raise SubstitutionError(
                    f"derivative atom of {a[1]} bound inconsistently with its parent")
    return _Subst(coord_b, fn_b, atom_b).expr(e)


def _add_atom_binding(a, val, coord_b, fn_b, atom_b):
    if isinstance(a, Coord):
        coord_b[a] = val
    elif isinstance(a, Fn):
        if not a[3] and not a[4]:
            fn_b[a[1]] = val
        else:
            atom_b[a] = val
    else:
        raise SubstitutionError(f"unsupported binding key {a!r}")


class _Subst:
    def __init__(self, coord_b, fn_b, atom_b):
        self.coord_b, self.fn_b, self.atom_b = coord_b, fn_b, atom_b
        self.cache: dict = {}

    def expr(self, e: Expr) -> Expr:
        total: dict = {}
        for m, c in e._t.items():
            prod = Expr.const(c)
            for a, p in m:
                prod = prod * (self.atom(a) ** p)
            for mm, cc in prod._t.items():
                v = total.get(mm, 0) + cc
                if v:
                    total[mm] = _norm(v)
                else:
                    total.pop(mm, None)
        return Expr(total)

    def atom(self, a: Atom) -> Expr:
        r = self.cache.get(a)
        if r is None:
            r = self._atom(a)
            self.cache[a] = r
        return r

    def _atom(self, a: Atom) -> Expr:
        t = a[0]
        if t == 'c':
            if a in self.coord_b:
                return self.coord_b[a]
            return Expr.atom(a)
        if t == 'f':
            if a in self.atom_b:
                return self.atom_b[a]
            _, name, args, derivs, at = a
            srcs = at if at else tuple(Expr.atom(x) for x in args)
            new_at = tuple(self.expr(s) for s in srcs)
            if name in self.fn_b:
                val = diff(self.fn_b[name], *derivs)
                return compose(val, dict(zip(args, new_at)))
            return make_fn_atom(name, args, derivs, new_at)
        if t == 'e':
            return exp(self.expr(a[1]))
        if t == 'v':
            return inv(self.expr(a[1]))
        if t == 'i':
            v = a[2]
            nv = self.coord_b.get(v)
            if nv is not None and nv != Expr.atom(v):
                raise SubstitutionError("cannot substitute for the variable of an antiderivative")
            return antiderivative(self.expr(a[1]), v)
        raise TypeError(a)


def make_fn_atom(name: str, args: tuple, derivs: tuple, at: tuple) -> Expr:
    """Function atom evaluated at ``at``; collapses to identity form when possible."""
    if all(s == Expr.atom(x) for s, x in zip(at, args)):
        at = ()
    return Expr.atom(Fn(name, args, derivs, at))


def compose(e: Expr, coord_values: Mapping[Coord, Expr]) -> Expr:
    """Simultaneously replace coordinates only (no function bindings)."""
    return _Subst(dict(coord_values), {}, {}).expr(e)


# ---------------------------------------------------------------- numerics


class UnassignedAtom(KeyError):
    pass


def eval_numeric(e: Expr, assignment: Mapping) -> float:
    """IEEE double evaluation.  ``assignment`` maps leaf atoms to floats."""
    total = 0.0
    for m, c in e._t.items():
        v = float(c)
        for a, p in m:
            x = _eval_atom(a, assignment)
            if p < 0 and x == 0.0:
                raise ZeroDivisionError(f"division by zero at atom {a!r}")
            v *= x ** p
        total += v
    return total


def _eval_atom(a: Atom, assignment: Mapping) -> float:
    t = a[0]
    if t == 'e':
        return math.exp(eval_numeric(a[1], assignment))
    if t == 'v':
        d = eval_numeric(a[1], assignment)
        if d == 0.0:
            raise ZeroDivisionError("reciprocal of a vanishing expression")
        return 1.0 / d
    try:
        return float(assignment[a])
    except KeyError:
        raise UnassignedAtom(a) from None


def random_assignment(atoms: Iterable, rng: random.Random, low=0.3, high=1.7) -> dict:
    return {a: rng.uniform(low, high) for a in sorted(atoms)}


# ---------------------------------------------------------------- equality

DEFAULT_SEED = 0
EQUALITY_SAMPLES = 32


class Verdict:
    """Outcome of an equality test: ``equal`` plus certainty 'exact' or 'probable'."""

    __slots__ = ('equal', 'certainty', 'difference')

    def __init__(self, equal: bool, certainty: str, difference: Expr):
        self.equal = equal
        self.certainty = certainty
        self.difference = difference

    def __bool__(self):
        return self.equal

    def __repr__(self):
        return f"Verdict(equal={self.equal}, certainty={self.certainty!r})"


def compare(a, b, seed: int = DEFAULT_SEED, samples: int = EQUALITY_SAMPLES) -> Verdict:
    diff_e = Expr._coerce(a) - Expr._coerce(b)
    if diff_e.is_zero:
        return Verdict(True, 'exact', diff_e)
    if not diff_e.has_inverse():
        return Verdict(False, 'exact', diff_e)
    return Verdict(is_zero_numeric(diff_e, seed, samples), 'probable', diff_e)


def is_zero_numeric(e: Expr, seed: int = DEFAULT_SEED, samples: int = EQUALITY_SAMPLES,
                    rel_tol: float = 1e-9) -> bool:
    rng = random.Random(seed)
    leaves = e.leaf_atoms()
    for _ in range(samples):
        asg = random_assignment(leaves, rng)
        scale = _abs_scale(e, asg)
        if abs(eval_numeric(e, asg)) > rel_tol * max(1.0, scale):
            return False
    return True


def _abs_scale(e: Expr, asg) -> float:
    s = 0.0
    for m, c in e._t.items():
        s += abs(eval_numeric(Expr({m: c}), asg))
    return s


def equals(a, b, seed: int = DEFAULT_SEED) -> bool:
    return compare(a, b, seed).equal


def canonicalize(e: Expr) -> Expr:
    """Rebuild ``e`` from its terms; a no-op on values already canonical."""
    total = ZERO
    for m, c in e._t.items():
        prod = Expr.const(c)
        for a, p in m:
            prod = prod * Expr.atom(a, p)
        total = total + prod
    return total


# ---------------------------------------------------------------- helpers


def coefficient(e: Expr, a: Atom, power: int = 1) -> Expr:
    """Coefficient of a^power in e viewed as a Laurent polynomial in a."""
    out: dict = {}
    for m, c in e._t.items():
        p = dict(m).get(a, 0)
        if p == power:
            rest = tuple(x for x in m if x[0] != a)
            out[rest] = c
    return Expr(out)


def degree_split(e: Expr, atoms: Iterable[Atom]) -> dict:
    """Group terms by the exponent vector of ``atoms``: {exponents: coefficient}."""
    atoms = tuple(atoms)
    out: dict = {}
    for m, c in e._t.items():
        md = dict(m)
        key = tuple(md.get(a, 0) for a in atoms)
        rest = tuple(x for x in m if x[0] not in atoms)
        out.setdefault(key, {})[rest] = c
    return {k: Expr(v) for k, v in out.items()}


def sum_exprs(items: Iterable) -> Expr:
    total: dict = {}
    for it in items:
        for m, c in Expr._coerce(it)._t.items():
            v = total.get(m, 0) + c
            if v:
                total[m] = _norm(v)
            else:
                total.pop(m, None)
    return Expr(total)
