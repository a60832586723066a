"""Entropy-like secondary law for Cattaneo heat conduction.

The law is verified with symbolic tau, Lam, epseq and lamhat.  Its production
term is then sampled for a Fourier-like choice and for the reversed sign.
"""
from jetforms.expr import Expr
from jetforms.printing import to_text
from jetforms.secondary import cattaneo_build, ii_law_check

model = cattaneo_build()
ctx = model.ctx
print('energy  eps =', to_text(model.energy, ctx))
print('production Q =', to_text(model.production, ctx))
print('verified symbolically:', model.verified.ok)

theta = Expr.atom(ctx.y(0))
for label, lamhat in (('lamhat = 1/theta', theta ** -1), ('lamhat = -1/theta', -theta ** -1)):
    inst = cattaneo_build(tau=Expr.const(2), Lam=3 * theta, lamhat=lamhat)
    v = ii_law_check(inst, samples=10_000, seed=0)
    print(f'{label}: Q = {to_text(inst.production, ctx)}; '
          f'sampled min {v.minimum:.4g}, max {v.maximum:.4g}; nonnegative: {v.nonnegative}')
