"""
Decompositions on a seeded complex
==================================

Build a complex whose d delta and delta d spectra hit the scalars lambda_i
at J = -n/2, then recover the planted multiplicities from the kernels of
L_k, G_k and the slot pair.
"""

from detourlab import detour as dt
from detourlab.opfactor import DetourContext

ctx = DetourContext(8, 2, -4.0)
print("lambda^k     :", ctx.lambdas())
print("lambda^{k+1} :", ctx.lambdas_next())

sc = dt.seeded_complex(ctx, seed=1, scramble=0.4)
cx = sc.complex
print("dims", cx.dims)
print("planted exact  ", sc.exact_mults)
print("planted coexact", sc.coexact_mults)

# N(L_k): kernel of delta d plus coexact eigenspaces
rep = dt.null_L_decomposition(ctx, cx)
print(rep.verdict, [(s.kind, s.eigenvalue, s.dim) for s in rep.summands], rep.total_dim)

# conformal harmonics: Hodge harmonics plus exact eigenspaces
rep = dt.harmonics_G(ctx, cx)
print(rep.verdict, [(s.kind, s.eigenvalue, s.dim) for s in rep.summands])

# the slot pair has kernel N(L) & N(G)
rep = dt.null_LL_decomposition(ctx, cx)
print(rep.verdict, rep.total_dim, rep.dims)

# both sequences are exact
rep = dt.sequence_checks(ctx, cx)
print(rep.verdict, rep.dims)

# on harmonics <u, Q w> is s^k J^p <u, w>
rep = dt.pairing_suite(ctx, cx)
print(rep.verdict, rep.predicted_constant)
print(rep.values["theta_harmonic"].round(8))
