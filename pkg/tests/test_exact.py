"""Rational mode: every identity must hold with zero tolerance."""

from fractions import Fraction

import numpy as np
import pytest

from detourlab import detour as dt
from detourlab import hodge
from detourlab import tractor_sym as ts
from detourlab.opfactor import DetourContext

F = Fraction


@pytest.mark.parametrize("n, k", [(6, 1), (6, 2), (8, 1), (8, 3), (6, 0)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_decompositions_hold_exactly(n, k, seed):
    ctx = DetourContext(n, k, F(-n, 2))
    sc = dt.seeded_complex(ctx, seed=seed, exact=True)
    cx = sc.complex
    assert cx.exact
    checks = [dt.pairing_suite]
    if 2 * k < n:
        checks.append(dt.null_L_decomposition)
    if k:
        checks += [dt.harmonics_G, dt.null_G_decomposition, dt.null_LL_decomposition,
                   dt.cohomology_HL, dt.sequence_checks, dt.null_Q, dt.b_space]
    for check in checks:
        rep = check(ctx, cx)
        assert rep.passed, (check.__name__, rep.notes)
        assert all(v == 0 for v in rep.residuals.values()), (check.__name__, rep.residuals)
    if k:
        hg = dt.harmonics_G(ctx, cx)
        assert [s.dim for s in hg.summands if s.kind == "exact"] == sc.exact_mults


def test_exact_and_float_agree_on_dimensions():
    ctx = DetourContext(8, 2, F(-4))
    sc = dt.seeded_complex(ctx, seed=4, exact=True)
    cx = sc.complex
    fcx = hodge.ChainComplex(cx.n, cx.dims, [cx.d(j).astype(float) for j in range(cx.n)],
                             [cx.gram(j).astype(float) for j in range(cx.n + 1)])
    fctx = DetourContext(8, 2, -4.0)
    for check in (dt.null_L_decomposition, dt.harmonics_G, dt.null_LL_decomposition):
        a, b = check(ctx, cx), check(fctx, fcx)
        assert a.total_dim == b.total_dim
        assert [s.dim for s in a.summands] == [s.dim for s in b.summands]


def test_symbolic_polys_instantiate_exactly():
    ctx = DetourContext(6, 1, F(-3))
    cx = dt.seeded_complex(ctx, seed=2, exact=True).complex
    polys = ts.operator_polys(6, 1)
    for name, direct in (("Q", dt.Q_matrix(ctx, cx)), ("L", dt.L_matrix(ctx, cx)),
                         ("G", dt.G_matrix(ctx, cx)), ("G_inner", dt.G_matrix(ctx, cx, "inner"))):
        A = polys[name].instantiate(cx, 1, ctx.J)
        assert A.dtype == object
        assert np.all(A == direct), name


def test_exact_complex_needs_rational_J():
    ctx = DetourContext(6, 1, F(-3))
    cx = dt.seeded_complex(ctx, seed=0, exact=True).complex
    with pytest.raises(ValueError, match="rational"):
        dt.Q_matrix(DetourContext(6, 1, -3.0), cx)
