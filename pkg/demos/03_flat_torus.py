"""
The flat torus
==============

With J = 0 every factor of Q_k becomes d delta, and the conformal
harmonics coincide with the ordinary ones.
"""

from math import comb

from detourlab import detour as dt
from detourlab import hodge
from detourlab.opfactor import DetourContext

cx = hodge.build_torus(4, 1)
print("dims", cx.dims)

# constant forms are the harmonics
print([hodge.betti(cx, k) for k in range(5)], [comb(4, k) for k in range(5)])

for k in range(3):
    ctx = DetourContext(4, k, 0.0)
    rep = dt.ricci_flat_branch(ctx, cx)
    print(k, rep.verdict, rep.residuals, rep.dims)

# the pairing on harmonics vanishes below the middle degree
for k in range(3):
    rep = dt.pairing_suite(DetourContext(4, k, 0.0), cx)
    print(k, rep.values["theta_harmonic"].round(12).tolist())
