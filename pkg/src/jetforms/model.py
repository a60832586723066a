"""Reader for the sectioned model-file format (see docs/model-format.md)."""
from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

from .constitutive import ConstitutiveRelation, build_cr
from .expr import Expr
from .jets import ContextError, JetContext, VectorField
from .parse import ParseError, expand_argument_groups, parse_coord, parse_expr

SECTIONS = ('context', 'functions', 'cr', 'fields', 'connection', 'secondary', 'cattaneo', 'analyses')


class ModelError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, path: str = '<model>'):
        self.message, self.line, self.column, self.path = message, line, column, path
        super().__init__(f"{path}:{line}:{column}: {message}")


@dataclass
class Entry:
    key: str
    value: str
    line: int
    column: int     # 1-based column where the value starts


@dataclass
class Model:
    path: str
    ctx: JetContext
    cr: ConstitutiveRelation
    fields: dict = dc_field(default_factory=dict)            # name -> VectorField
    connection: Optional[list] = None                        # Gamma[i][mu]
    secondary: dict = dc_field(default_factory=dict)
    cattaneo: Optional[dict] = None
    analyses: list = dc_field(default_factory=list)
    options: dict = dc_field(default_factory=dict)           # analysis -> list of names
    title: str = ''
    cattaneo_model: object = None


def read_sections(text: str, path: str = '<model>') -> tuple:
    """Split into {section: [Entry]}; continuation lines start with whitespace."""
    sections: dict = {}
    title = ''
    current = None
    last: Optional[Entry] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].rstrip()
        if not line.strip():
            if raw.lstrip().startswith('#') and not title and current is None:
                title = raw.lstrip()[1:].strip()
            continue
        if line[0].isspace() and last is not None and not line.lstrip().startswith('['):
            last.value += ' ' + line.strip()
            continue
        stripped = line.strip()
        if stripped.startswith('['):
            mt = re.fullmatch(r"\[\s*([A-Za-z-]+)\s*\]", stripped)
            if not mt:
                raise ModelError("malformed section header", lineno, 1, path)
            name = mt.group(1)
            if name not in SECTIONS:
                raise ModelError(f"unknown section [{name}]", lineno, 2, path)
            if name in sections:
                raise ModelError(f"duplicate section [{name}]", lineno, 2, path)
            current = name
            sections[name] = []
            last = None
            continue
        if current is None:
            raise ModelError("entry outside of a section", lineno, 1, path)
        if '=' not in line:
            raise ModelError("expected 'key = value'", lineno, len(line) - len(line.lstrip()) + 1, path)
        key, _, value = line.partition('=')
        col = len(key) + 2 + (len(value) - len(value.lstrip()))
        last = Entry(key.strip(), value.strip(), lineno, col)
        sections[current].append(last)
    return sections, title


def _split_list(value: str) -> list:
    return [s.strip() for s in value.split(',') if s.strip()]


class _Loader:
    def __init__(self, text: str, path: str):
        self.path = path
        self.cattaneo_model = None
        self.sections, self.title = read_sections(text, path)

    def err(self, msg, entry: Optional[Entry] = None, offset: int = 0):
        if entry is None:
            return ModelError(msg, 0, 0, self.path)
        return ModelError(msg, entry.line, entry.column + offset, self.path)

    def entries(self, name) -> list:
        return self.sections.get(name, [])

    def get(self, section, key) -> Optional[Entry]:
        for e in self.entries(section):
            if e.key == key:
                return e
        return None

    def expr(self, entry: Entry, ctx, text: Optional[str] = None, offset: int = 0) -> Expr:
        try:
            return parse_expr(entry.value if text is None else text, ctx)
        except ParseError as exc:
            raise self.err(exc.message, entry, offset + exc.pos) from None

    # context
    def context(self) -> JetContext:
        if 'context' not in self.sections:
            raise self.err("missing [context] section")
        need = {}
        for key in ('base', 'fields', 'order'):
            e = self.get('context', key)
            if e is None:
                raise self.err(f"[context] needs '{key}'")
            need[key] = e
        bases = _split_list(need['base'].value)
        fields = _split_list(need['fields'].value)
        for e, names in ((need['base'], bases), (need['fields'], fields)):
            for nm in names:
                if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", nm) or nm in ('diff', 'Int', 'exp', 'at'):
                    raise self.err(f"invalid or reserved name '{nm}'", e)
        if len(set(bases + fields)) != len(bases) + len(fields):
            raise self.err("base and field names must be distinct", need['fields'])
        try:
            order = int(need['order'].value)
        except ValueError:
            raise self.err("order must be an integer", need['order']) from None
        probe = JetContext(len(bases), len(fields), order, admitted=[], base_names=bases, field_names=fields)
        adm_entry = self.get('context', 'admitted')
        admitted = None
        if adm_entry is not None and adm_entry.value != 'all':
            admitted = [] if adm_entry.value == 'none' else self.admitted_list(adm_entry, probe)
        dens_entry = self.get('context', 'density')
        density = 'euclidean'
        if dens_entry is not None:
            if dens_entry.value in ('euclidean', 'symbolic', 'exp'):
                density = dens_entry.value
            else:
                density = self.expr(dens_entry, probe)
        try:
            ctx = JetContext(len(bases), len(fields), order, admitted, density, bases, fields)
        except ContextError as exc:
            raise self.err(str(exc), adm_entry or need['order']) from None
        for e in self.entries('context'):
            if e.key not in ('base', 'fields', 'order', 'admitted', 'density'):
                raise self.err(f"unknown key '{e.key}' in [context]", e, -len(e.key) - 2)
        funcs = {}
        for e in self.entries('functions'):
            decl = e.value.strip()
            if decl.startswith('(') and decl.endswith(')'):
                decl = decl[1:-1]
            try:
                funcs[e.key] = expand_argument_groups(decl, ctx)
            except ParseError as exc:
                raise self.err(exc.message, e) from None
        return ctx.with_functions(funcs)

    def admitted_list(self, entry: Entry, ctx) -> list:
        out = []
        for item in re.finditer(r"([^,(]+(?:\([^)]*\))?)", entry.value):
            text = item.group(1).strip()
            if not text:
                continue
            mt = re.fullmatch(r"([A-Za-z][A-Za-z0-9_]*)\s*:\s*\(?([^)]*)\)?", text)
            if not mt or mt.group(1) not in ctx.field_names:
                raise self.err(f"bad admitted entry '{text}' (use field:dir or field:(dir,dir))", entry, item.start())
            dirs = [d.strip() for d in mt.group(2).split(',') if d.strip()]
            idx = []
            for d in dirs:
                if d not in ctx.base_names:
                    raise self.err(f"unknown base direction '{d}'", entry, item.start())
                idx.append(ctx.base_names.index(d))
            out.append((ctx.field_names.index(mt.group(1)), tuple(sorted(idx))))
        return out

    # constitutive relation
    def cr(self, ctx) -> ConstitutiveRelation:
        kind_e = self.get('cr', 'kind')
        kind = kind_e.value if kind_e else 'generic'
        if kind == 'cattaneo':
            from .secondary import cattaneo_build
            if ctx.m != ctx.n or ctx.k != 1:
                raise self.err("cattaneo needs one temperature plus n-1 flux fields at order 1", kind_e)
            # symbolic constitutive functions; [cattaneo] holds the instantiation for sampling
            self.cattaneo_model = cattaneo_build(ctx=ctx)
            return self.cattaneo_model.cr
        n, m = ctx.n, ctx.m
        F = [[Expr.const(0)] * m for _ in range(n)]
        Pi = [Expr.const(0)] * m
        inputs: dict = {}
        p = None
        Q = [Expr.const(0)] * m
        F0 = [Expr.const(0)] * m
        h = [Expr.const(0)] * n
        for e in self.entries('cr'):
            k = e.key
            if k == 'kind':
                continue
            mt = re.fullmatch(r"(F|Pi|Q|F0|h)\[([^\]]*)\]", k)
            if k in ('L', 'D'):
                inputs[k] = self.expr(e, ctx)
            elif k == 'p':
                p = self.expr(e, ctx)
            elif k == 'time':
                if e.value not in ctx.base_names:
                    raise self.err("time must name a base coordinate", e)
                inputs['time'] = ctx.base_names.index(e.value)
            elif mt:
                name, idx = mt.group(1), [s.strip() for s in mt.group(2).split(',')]
                val = self.expr(e, ctx)
                try:
                    if name == 'F':
                        i, mu = self.base_index(idx[0], ctx), self.field_index(idx[1], ctx)
                        F[i][mu] = val
                    elif name == 'h':
                        h[self.base_index(idx[0], ctx)] = val
                    else:
                        target = {'Pi': Pi, 'Q': Q, 'F0': F0}[name]
                        target[self.field_index(idx[0], ctx)] = val
                except (ValueError, IndexError):
                    raise self.err(f"bad index in '{k}'", e, -len(k) - 2) from None
            else:
                raise self.err(f"unknown key '{k}' in [cr]", e, -len(k) - 2)
        try:
            if kind == 'generic':
                return build_cr('generic', {'F': F, 'Pi': Pi, 'p': p}, ctx)
            if kind == 'lifted':
                return build_cr('lifted', {'F': F, 'Pi': Pi}, ctx)
            if kind in ('lagrangian', 'L+D', 'spatial-lagrangian'):
                if kind == 'spatial-lagrangian':
                    inputs['F0'] = F0
                return build_cr(kind, inputs, ctx)
            if kind == 'semi-lagrangian':
                inputs['Q'] = Q
                return build_cr(kind, inputs, ctx)
            if kind == 'vector-potential':
                return build_cr(kind, {'h': h, 'Pi': Pi}, ctx)
        except KeyError as exc:
            raise self.err(f"kind {kind} needs input {exc.args[0]}", kind_e) from None
        except (ContextError, ValueError) as exc:
            raise self.err(str(exc), kind_e) from None
        raise self.err(f"unknown constitutive kind '{kind}'", kind_e)

    def base_index(self, s, ctx) -> int:
        if s in ctx.base_names:
            return ctx.base_names.index(s)
        return int(s) - 1

    def field_index(self, s, ctx) -> int:
        if s in ctx.field_names:
            return ctx.field_names.index(s)
        return int(s) - 1

    def cattaneo_functions(self, ctx) -> dict:
        out = {}
        for name in ('tau', 'Lam', 'epseq', 'lamhat'):
            e = self.get('cattaneo', name)
            if e is not None:
                out[name] = self.expr(e, ctx)
        return out

    # vector fields
    def vector_fields(self, ctx) -> dict:
        out = {}
        for e in self.entries('fields'):
            comps = {}
            offset = 0
            for part in e.value.split(';'):
                if ':' not in part:
                    raise self.err("vector field components are 'coord: expr' separated by ';'", e, offset)
                left, _, right = part.partition(':')
                try:
                    c = parse_coord(left.strip(), ctx)
                except ParseError as exc:
                    raise self.err(exc.message, e, offset) from None
                if c.kind not in (0, 1):
                    raise self.err("vector fields are declared on (x, y); jet parts come from prolongation",
                                   e, offset)
                comps[c] = self.expr(e, ctx, right.strip(), offset + len(left) + 1 + (len(right) - len(right.lstrip())))
                offset += len(part) + 1
            out[e.key] = VectorField(comps, ctx)
        return out

    def connection(self, ctx) -> Optional[list]:
        if 'connection' not in self.sections:
            return None
        G = [[Expr.const(0)] * ctx.m for _ in range(ctx.n)]
        for e in self.entries('connection'):
            mt = re.fullmatch(r"Gamma\[([^,\]]+),([^\]]+)\]", e.key.replace(' ', ''))
            if not mt:
                raise self.err("connection entries are Gamma[base,field]", e, -len(e.key) - 2)
            try:
                i, mu = self.base_index(mt.group(1), ctx), self.field_index(mt.group(2), ctx)
                G[i][mu] = self.expr(e, ctx)
            except (ValueError, IndexError):
                raise self.err("bad connection index", e, -len(e.key) - 2) from None
        return G

    def secondary(self, ctx) -> dict:
        out = {}
        for e in self.entries('secondary'):
            mt = re.fullmatch(r"(K|lambda)\[([^\]]+)\]", e.key.replace(' ', ''))
            if e.key in ('Q', 'h0'):
                out[e.key] = self.expr(e, ctx)
            elif mt:
                idx = mt.group(2)
                try:
                    j = self.base_index(idx, ctx) if mt.group(1) == 'K' else self.field_index(idx, ctx)
                except ValueError:
                    raise self.err("bad index", e, -len(e.key) - 2) from None
                out.setdefault(mt.group(1), {})[j] = self.expr(e, ctx)
            else:
                raise self.err(f"unknown key '{e.key}' in [secondary]", e, -len(e.key) - 2)
        return out

    def cattaneo(self, ctx) -> Optional[dict]:
        if 'cattaneo' not in self.sections:
            return None
        out: dict = {'functions': self.cattaneo_functions(ctx)}
        for e in self.entries('cattaneo'):
            if e.key in ('tau', 'Lam', 'epseq', 'lamhat'):
                continue
            if e.key == 'expect':
                if e.value not in ('nonnegative', 'nonpositive', 'zero'):
                    raise self.err("expect is nonnegative, nonpositive or zero", e)
                out['expect'] = e.value
            elif e.key in ('theta_range', 'q_range'):
                try:
                    lo, hi = (float(v) for v in _split_list(e.value))
                except ValueError:
                    raise self.err("ranges are 'low, high'", e) from None
                out[e.key] = (lo, hi)
            elif e.key == 'samples':
                out['samples'] = int(e.value)
            else:
                raise self.err(f"unknown key '{e.key}' in [cattaneo]", e, -len(e.key) - 2)
        return out

    def analyses(self) -> tuple:
        run, options = [], {}
        for e in self.entries('analyses'):
            if e.key == 'run':
                run = _split_list(e.value)
            else:
                options[e.key] = _split_list(e.value)
        return run, options


def load_model_text(text: str, path: str = '<model>') -> Model:
    ld = _Loader(text, path)
    ctx = ld.context()
    cr = ld.cr(ctx)
    fields = ld.vector_fields(ctx)
    run, options = ld.analyses()
    return Model(path, ctx, cr, fields, ld.connection(ctx), ld.secondary(ctx), ld.cattaneo(ctx),
                 run, options, ld.title, ld.cattaneo_model)


def load_model(path) -> Model:
    p = Path(path)
    if not p.exists():
        bundled = Path(__file__).parent / 'models' / p.name
        if bundled.exists():
            p = bundled
        else:
            raise ModelError("file not found", 0, 0, str(path))
    return load_model_text(p.read_text(), p.name)


def bundled_models() -> list:
    return sorted(q.name for q in (Path(__file__).parent / 'models').glob('*.model'))
