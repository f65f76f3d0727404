"""
Rational arithmetic
===================

The same checks on a rational complex hold with no tolerance at all.
"""

from fractions import Fraction

from detourlab import detour as dt
from detourlab.opfactor import DetourContext

ctx = DetourContext(6, 1, Fraction(-3))
sc = dt.seeded_complex(ctx, seed=2, exact=True)
cx = sc.complex
print(cx.dims, cx.exact)

for check in (dt.null_L_decomposition, dt.harmonics_G, dt.null_LL_decomposition,
              dt.sequence_checks, dt.null_Q, dt.b_space, dt.pairing_suite):
    rep = check(ctx, cx)
    print(f"{check.__name__:24s} {rep.verdict}  residuals {rep.residuals}")

print(dt.Q_matrix(ctx, cx)[:3, :3])
