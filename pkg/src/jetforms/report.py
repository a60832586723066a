"""Report assembly for model files.

Every analysis writes equations and findings through a ``Writer`` and records
checks; a check is a verification (an identity or certificate that must hold).
Verdicts such as "not variational" are findings, not failures.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

from . import expr as _expr
from .balance import (balance_system, euler_lagrange, ibs_decomposition, ibs_form,
                      variational_identity)
from .constitutive import helmholtz_test, legendre_map, lepage_test, lift_cr
from .expr import Expr
from .forms import form_latex, form_text
from .jets import StructureError
from .model import Model
from .printing import latex_name, to_latex, to_text
from .secondary import (SecondaryCandidate, cattaneo_build, ii_law_check, original_law,
                        ret_secondary_from_potential, verify_secondary)
from .symmetry import (Connection, RefusedError, energy_momentum, gauge_law, noether_law,
                       symmetry_residuals)

ANALYSES = ('balance', 'helmholtz', 'lepage', 'legendre', 'symmetry', 'noether',
            'energy-momentum', 'gauge', 'secondary', 'cattaneo')


class UnknownAnalysis(ValueError):
    pass


@dataclass
class Check:
    section: str
    name: str
    passed: bool


@dataclass
class Report:
    text: str
    checks: list = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


_TEX = {'\\': r'\textbackslash{}', '_': r'\_', '^': r'\textasciicircum{}', '{': r'\{', '}': r'\}',
        '&': r'\&', '%': r'\%', '#': r'\#', '$': r'\$'}


def tex_escape(s: str) -> str:
    return ''.join(_TEX.get(ch, ch) for ch in s)


class Writer:
    def __init__(self, fmt: str, model: Model):
        if fmt not in ('text', 'latex'):
            raise ValueError(f"unknown format {fmt!r}")
        self.fmt = fmt
        self.ctx = model.ctx
        self.lines: list = []
        self.checks: list = []
        self.section = ''

    # basic output
    def e(self, x) -> str:
        if isinstance(x, Expr):
            return to_latex(x, self.ctx) if self.fmt == 'latex' else to_text(x, self.ctx)
        return form_latex(x) if self.fmt == 'latex' else form_text(x)

    def name(self, s: str) -> str:
        return latex_name(s) if self.fmt == 'latex' else s

    def heading(self, title: str):
        self.section = title
        if self.fmt == 'latex':
            self.lines += ['', r'\section*{' + title + '}']
        else:
            self.lines += ['', f'== {title} ==']

    def para(self, text: str):
        if self.fmt == 'latex':
            self.lines.append(tex_escape(text) + r'\par')
        else:
            self.lines.append(text)

    def eq(self, lhs_text: str, lhs_latex: str, value):
        if self.fmt == 'latex':
            self.lines.append(r'\[ ' + lhs_latex + ' = ' + self.e(value) + r' \]')
        else:
            self.lines.append(f'{lhs_text} = {self.e(value)}')

    def check(self, name: str, passed: bool, detail: str = ''):
        self.checks.append(Check(self.section, name, bool(passed)))
        mark = 'pass' if passed else 'FAIL'
        if self.fmt == 'latex':
            tail = (': ' + detail) if detail else ''
            self.lines.append(r'\textbf{[' + mark + ']} ' + tex_escape(name + tail) + r'\par')
        else:
            self.lines.append(f'[{mark}] {name}' + (f': {detail}' if detail else ''))

    # indexed quantities
    def sub(self, base_text, base_latex, sup=None, sub=None):
        t = base_text + '[' + ','.join(x for x in (sup, sub) if x is not None) + ']'
        lx = base_latex
        if sup is not None:
            lx += '^{' + self.lx(sup) + '}'
        if sub is not None:
            lx += '_{' + self.lx(sub) + '}'
        return t, lx

    def lx(self, s):
        return latex_name(s)

    def residual_list(self, items):
        for label, e in items:
            self.eq(label, r'\text{' + tex_escape(label) + '}', e)


def _header(model: Model, w: Writer, seed: int, samples: int, analyses: list):
    ctx = model.ctx
    full = ctx.P == frozenset(_all_keys(ctx))
    adm = 'all' if full else ('none' if not ctx.P else ', '.join(
        f"z[{ctx.field_names[mu]},({','.join(ctx.base_names[i] for i in I)})]" for mu, I in sorted(ctx.P)))
    dens = ctx.density_kind if ctx.density_kind != 'expr' else to_text(ctx.density, ctx)
    info = [
        f"model: {model.path}",
        f"title: {model.title or '-'}",
        f"seed: {seed}; samples: {samples}; equality samples: {_expr.EQUALITY_SAMPLES}",
        f"base ({ctx.n}): {', '.join(ctx.base_names)}",
        f"fields ({ctx.m}): {', '.join(ctx.field_names)}",
        f"order: {ctx.k}; admitted: {adm}; density: {dens}",
        f"relation kind: {model.cr.kind}" + ('; covering (density p given)' if model.cr.density is not None else ''),
        f"analyses: {', '.join(analyses) if analyses else '(none)'}",
    ]
    if w.fmt == 'latex':
        w.lines += [r'\documentclass{article}', r'\usepackage{amsmath}', r'\begin{document}',
                    r'\section*{jetforms report}']
        w.lines += [r'\noindent\texttt{' + tex_escape(s) + r'}\\' for s in info]
    else:
        w.lines += ['jetforms report'] + info
    if ctx.functions:
        for nm in sorted(ctx.functions):
            args = ', '.join(to_text(Expr.atom(c), ctx) for c in ctx.functions[nm])
            w.para(f"function {nm}({args})")


def _all_keys(ctx):
    from itertools import combinations_with_replacement
    return [(mu, I) for mu in range(ctx.m) for r in range(1, ctx.k + 1)
            for I in combinations_with_replacement(range(ctx.n), r)]


def _fields(model: Model, analysis: str, w: Writer, default=None) -> list:
    names = model.options.get(analysis)
    if names is None:
        names = default if default is not None else list(model.fields)
    out = []
    for nm in names:
        if nm not in model.fields:
            w.check(f"vector field '{nm}' is declared", False)
            continue
        out.append((nm, model.fields[nm]))
    return out


def _law(w: Writer, law, label: str):
    ctx = w.ctx
    for i in range(ctx.n):
        t, lx = w.sub('K', 'K', sup=ctx.base_names[i])
        w.eq(t, lx, law.flux[i])
    w.eq('Q', 'Q', law.source)
    for mu in range(ctx.m):
        t, lx = w.sub('c', 'c', sub=ctx.field_names[mu])
        w.eq(t, lx, law.certificate[mu])
    for note in law.notes:
        w.para(f"note: {note}")
    w.check(f"{label}: (d_i + lambda_i) K^i - Q = c^mu B_mu", law.verified,
            '' if law.verified else w.e(law.residual))


# ---------------------------------------------------------------- analyses


def run_balance(model: Model, w: Writer, opts):
    cr, ctx = model.cr, model.ctx
    bs = balance_system(cr)
    for mu in range(ctx.m):
        t, lx = w.sub('B', 'B', sub=ctx.field_names[mu])
        w.eq(t, lx, bs[mu])
    if 'L' in cr.data and cr.kind == 'lagrangian':
        el = euler_lagrange(cr.data['L'], ctx)
        for mu in range(ctx.m):
            t, lx = w.sub('E', 'E', sub=ctx.field_names[mu])
            w.eq(t, lx, el[mu])
        ok = all((el[mu] + bs[mu]).is_zero for mu in range(ctx.m))
        w.check('Euler-Lagrange residuals equal -B', ok)
    ccr = cr if cr.density is not None else lift_cr(cr)
    try:
        dec = ibs_decomposition(ccr)
    except AssertionError as exc:
        w.check('invariant decomposition of d Theta + Pi dy ^ eta', False, str(exc))
    else:
        ok = (dec.reassemble() - ibs_form(ccr).lift(dec.form.h)).is_zero
        w.check('invariant decomposition reassembles exactly', ok)
        w.para('top-order contact block ' + ('vanishes (semi-Lagrangian)' if dec.block_zero else 'is nonzero'))
    if cr.density is None:
        res = variational_identity(ccr)
        w.check('variational identity of the lifted relation (symbolic variation)', res.ok,
                '' if res.ok else w.e(res.residual))


def run_helmholtz(model: Model, w: Writer, opts):
    res = helmholtz_test(model.cr)
    w.para('K_C is ' + ('closed: the relation is locally variational' if res.closed
                        else 'not closed: the relation is not variational'))
    w.residual_list(res.residuals)
    if model.cr.kind == 'lagrangian':
        w.check('a Lagrangian relation passes the Helmholtz test', res.closed)


def run_lepage(model: Model, w: Writer, opts):
    cr = model.cr
    if cr.density is None:
        w.para('relation has no density p; the Lepage test applies to covering relations')
        return
    res = lepage_test(cr)
    if res.lepage:
        w.para('Theta^n is a Lepage form')
        w.eq('L', 'L', res.lagrangian)
    else:
        w.para(f'not a Lepage form; condition {res.failed}')
        w.residual_list(res.residuals)
    if cr.kind == 'lagrangian':
        ok = res.lepage and (res.lagrangian - cr.data['L']).is_zero
        w.check('Lepage test recovers the Lagrangian', ok)


def run_legendre(model: Model, w: Writer, opts, seed=0):
    L = model.cr.data.get('L')
    if L is None:
        w.para('no Lagrangian in this model; the Legendre map is not defined')
        return
    ctx = model.ctx
    res = legendre_map(L, ctx, seed)
    for (i, mu), v in sorted(res.momenta.items()):
        t, lx = w.sub('F', 'F', sup=ctx.base_names[i], sub=ctx.field_names[mu])
        w.eq(t, lx, v)
    w.eq('p', 'p', res.density)
    w.eq('det Hessian', r'\det H', res.determinant)
    w.para(f'Legendre map: {res.verdict}')
    ok = (res.density - model.cr.density).is_zero if model.cr.density is not None else True
    w.check('density p = L - z F agrees with the relation', ok)


def run_symmetry(model: Model, w: Writer, opts):
    ccr = model.cr if model.cr.density is not None else lift_cr(model.cr)
    for nm, xi in _fields(model, 'symmetry', w):
        try:
            rep = symmetry_residuals(ccr, xi)
        except StructureError as exc:
            w.check(f"{nm} preserves the jet structure", False, str(exc))
            continue
        w.para(f"{nm}: {rep.verdict}")
        w.residual_list(rep.nonzero)


def run_noether(model: Model, w: Writer, opts):
    for nm, xi in _fields(model, 'noether', w):
        w.para(f"Noether law of {nm}")
        try:
            law = noether_law(model.cr, xi, nm)
        except RefusedError as exc:
            w.check(f"{nm} is a flux symmetry", False, str(exc))
            w.residual_list(exc.residuals)
            continue
        except StructureError as exc:
            w.check(f"{nm} preserves the jet structure", False, str(exc))
            continue
        _law(w, law, nm)


def run_energy_momentum(model: Model, w: Writer, opts):
    ctx = model.ctx
    conn = Connection(ctx, model.connection) if model.connection is not None else Connection.zero(ctx)
    names = model.options.get('energy-momentum')
    dirs = None
    if names is not None:
        bad = [s for s in names if s not in ctx.base_names]
        if bad:
            w.check(f"directions {', '.join(bad)} are base coordinates", False)
            return
        dirs = [ctx.base_names.index(s) for s in names]
    try:
        em = energy_momentum(model.cr, conn, dirs)
    except RefusedError as exc:
        w.check('relation is homogeneous for the connection', False, str(exc))
        for label, rep in exc.residuals:
            w.residual_list([(f"{label} {k}", e) for k, e in rep])
        return
    for j in range(ctx.n):
        for i in range(ctx.n):
            t, lx = w.sub('T', 'T', sup=ctx.base_names[j], sub=ctx.base_names[i])
            w.eq(t, lx, em.T[j][i])
    for i, law in em.laws.items():
        w.para(f"law for direction {ctx.base_names[i]}")
        _law(w, law, law.name)


def run_gauge(model: Model, w: Writer, opts):
    vertical = [nm for nm, xi in model.fields.items()
                if all(xi.base_part(i).is_zero for i in range(model.ctx.n))]
    for nm, xi in _fields(model, 'gauge', w, default=vertical):
        w.para(f"gauge law of {nm}")
        try:
            law = gauge_law(model.cr, xi, nm)
        except RefusedError as exc:
            w.check(f"FDiv({nm}) = 0", False)
            w.residual_list(exc.residuals)
            continue
        except ValueError as exc:
            w.check(f"{nm} is vertical", False, str(exc))
            continue
        _law(w, law, nm)


def _candidate(model: Model) -> Optional[SecondaryCandidate]:
    sec = model.secondary
    ctx = model.ctx
    if 'h0' in sec:
        return None
    if not sec:
        if model.cattaneo_model is not None:
            return model.cattaneo_model.law
        return None
    K = [sec.get('K', {}).get(i, Expr.const(0)) for i in range(ctx.n)]
    lam = [sec.get('lambda', {}).get(mu, Expr.const(0)) for mu in range(ctx.m)]
    return SecondaryCandidate(K, sec.get('Q', Expr.const(0)), lam, 'candidate')


def run_secondary(model: Model, w: Writer, opts, seed=0):
    ctx = model.ctx
    bs = balance_system(model.cr)
    if 'h0' in model.secondary:
        w.eq('h0', 'h^{0}', model.secondary['h0'])
        try:
            cand = ret_secondary_from_potential(model.cr, model.secondary['h0'])
        except ValueError as exc:
            w.check('potential construction', False, str(exc))
            return
    else:
        cand = _candidate(model)
    if cand is None:
        w.para('no candidate given; verifying the original laws as secondary laws')
        for mu in range(ctx.m):
            v = verify_secondary(bs, original_law(bs, mu))
            w.check(f"law[{ctx.field_names[mu]}] verifies with unit multiplier", v.ok)
        return
    for i in range(ctx.n):
        t, lx = w.sub('K', 'K', sup=ctx.base_names[i])
        w.eq(t, lx, cand.flux[i])
    w.eq('Q', 'Q', cand.source)
    for mu in range(ctx.m):
        t, lx = w.sub('lambda', r'\lambda', sup=ctx.field_names[mu])
        w.eq(t, lx, cand.multipliers[mu])
    v = verify_secondary(bs, cand)
    w.check(f"{cand.name}: (d_i + lambda_i) K^i - Q = lambda^mu B_mu", v.ok,
            '' if v.ok else w.e(v.residual))


def run_cattaneo(model: Model, w: Writer, opts, seed=0, samples=10_000):
    cm = model.cattaneo_model
    if cm is None:
        w.para('model is not of cattaneo kind')
        w.check('cattaneo analysis needs a cattaneo relation', False)
        return
    ctx = model.ctx
    bs = balance_system(cm.cr)
    for mu in range(ctx.m):
        t, lx = w.sub('B', 'B', sub=ctx.field_names[mu])
        w.eq(t, lx, bs[mu])
    w.eq('eps', r'\varepsilon', cm.energy)
    for i in range(ctx.n):
        t, lx = w.sub('K', 'K', sup=ctx.base_names[i])
        w.eq(t, lx, cm.law.flux[i])
    w.eq('Q', 'Q', cm.production)
    for mu in range(ctx.m):
        t, lx = w.sub('lambda', r'\lambda', sup=ctx.field_names[mu])
        w.eq(t, lx, cm.law.multipliers[mu])
    w.check('secondary law verifies with symbolic constitutive functions', cm.verified.ok)
    conf = model.cattaneo or {}
    given = conf.get('functions', {})
    if not given:
        w.para('no instantiation given; production sign not sampled')
        return
    inst = cattaneo_build(**given, ctx=ctx)
    w.para('instantiation: ' + ', '.join(f"{k} = {to_text(v, ctx)}" for k, v in sorted(given.items())))
    w.eq('Q (instantiated)', r'Q\big|_{\mathrm{inst}}', inst.production)
    w.check('secondary law verifies for the instantiation', inst.verified.ok)
    try:
        verdict = ii_law_check(inst, conf.get('theta_range', (1.0, 10.0)), conf.get('q_range', (0.0, 10.0)),
                               conf.get('samples', samples), seed)
    except ValueError as exc:
        w.check('production is numerically evaluable', False, str(exc))
        return
    w.para(f"sampled {verdict.samples} points: min {verdict.minimum:.6g}, max {verdict.maximum:.6g}")
    expect = conf.get('expect', 'nonnegative')
    ok = {'nonnegative': verdict.nonnegative, 'nonpositive': verdict.nonpositive,
          'zero': verdict.nonnegative and verdict.nonpositive}[expect]
    w.check(f"production is {expect} (II law)" if expect == 'nonnegative' else f"production is {expect}", ok)


RUNNERS: dict = {
    'balance': run_balance,
    'helmholtz': run_helmholtz,
    'lepage': run_lepage,
    'legendre': run_legendre,
    'symmetry': run_symmetry,
    'noether': run_noether,
    'energy-momentum': run_energy_momentum,
    'gauge': run_gauge,
    'secondary': run_secondary,
    'cattaneo': run_cattaneo,
}
SEEDED = {'legendre', 'secondary'}


def run_report(model: Model, analyses=None, fmt: str = 'text', seed: int = 0,
               samples: int = 10_000) -> Report:
    analyses = list(model.analyses if analyses is None else analyses)
    for a in analyses:
        if a not in RUNNERS:
            raise UnknownAnalysis(f"unknown analysis '{a}' (choose from {', '.join(ANALYSES)})")
    w = Writer(fmt, model)
    _header(model, w, seed, samples, analyses)
    for a in analyses:
        w.heading(a)
        runner: Callable = RUNNERS[a]
        opts = model.options.get(a)
        if a == 'cattaneo':
            runner(model, w, opts, seed, samples)
        elif a in SEEDED:
            runner(model, w, opts, seed)
        else:
            runner(model, w, opts)
    passed = sum(c.passed for c in w.checks)
    w.heading('summary')
    w.para(f"{passed} of {len(w.checks)} checks passed")
    if fmt == 'latex':
        w.lines.append(r'\end{document}')
    return Report('\n'.join(w.lines).lstrip('\n') + '\n', w.checks)
