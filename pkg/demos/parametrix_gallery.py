"""Local parametrices: jump residuals and their approach to the identity.

Run: python3 demos/parametrix_gallery.py
"""

import math

import numpy as np

from gskdet import rhp
from gskdet.kernel import make_spec

for u in ("lambda - 0.1*lambda^2", "lambda - lambda^2"):
    spec = make_spec("0.1 + 0.05*lambda", u, "0.2*sin(lambda)", q=1.0)
    disks = rhp.make_disks(spec)
    print(f"{spec.regime}: disk radii {disks.delta_edge:g} (edges), {disks.delta_saddle:g} (saddle)")
    for name, v in rhp.jump_residuals(spec, disks).items():
        print(f"  {name:<32s} {v:.1e}")
    th = np.linspace(0, 2 * math.pi, 16, endpoint=False)
    print(f"  {'x':>6} {'max|P0 - I|':>12} {'max|P-q - I|':>13} {'max|Pq - I|':>12}")
    for x in (100, 400, 1600):
        s = spec.with_x(x)
        p0 = max(np.abs(rhp.parametrix_P0(s, spec.lambda0 + disks.delta_saddle * np.exp(1j * t)) - rhp.I2).max()
                 for t in th)
        pe = [max(np.abs(rhp.parametrix_Ppm(s, e, e + disks.delta_edge * np.exp(1j * (t + 0.1))) - rhp.I2).max()
                  for t in th) for e in (-1, 1)]
        print(f"  {x:6d} {p0:12.3e} {pe[0]:13.3e} {pe[1]:12.3e}")
    print()

# The saddle parametrix approaches I like x^-1/2; the edge ones like
# x^(2|Re nu| - 1), with nu evaluated on the respective disk boundary.
