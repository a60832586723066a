"""Derive the energy and momentum laws of the 1+1 wave equation and check them."""
from jetforms.balance import balance_system
from jetforms.constitutive import build_cr
from jetforms.expr import ONE
from jetforms.jets import JetContext, vector_field
from jetforms.parse import parse_expr
from jetforms.printing import to_text
from jetforms.symmetry import noether_law

ctx = JetContext(2, 1, 1, base_names=['t', 'x'], field_names=['u'])
L = parse_expr('(z[u,t]^2 - z[u,x]^2)/2', ctx)
cr = build_cr('lagrangian', {'L': L}, ctx)
print('balance law:', to_text(balance_system(cr)[0], ctx), '= 0')

for name, j in (('time shift', 0), ('space shift', 1)):
    law = noether_law(cr, vector_field(ctx, {j: ONE}), name)
    print(f'\n{name}:')
    for i, K in enumerate(law.flux):
        print(f'  K[{ctx.base_names[i]}] =', to_text(K, ctx))
    print('  Q =', to_text(law.source, ctx))
    print('  certificate holds:', bool(law.verified))
