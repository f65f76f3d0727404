"""Einstein-scale detour operators assembled on a :class:`ChainComplex`.

The operators are the exact factored products with unit normalisation:

    Q_k = P^p_k[d delta],   G_k = delta Q_k,
    L_k = delta P^{p-1}_{k+1}[d delta] d = delta d P^{p-1}_{k+1}[delta d],

with p = (n - 2k)/2 and L_{n/2} = 0.  The report functions compare the
directly computed null spaces, cohomologies and pairings against their
predicted direct-sum descriptions in terms of eigenspaces of d delta and
delta d.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import _linalg as la
from .hodge import (ChainComplex, _scramble, build_prescribed, build_prescribed_exact,
                    closed_forms, eigenspace, harmonic_basis, make_rng)
from .opfactor import DetourContext, P_poly, apply_P, decompose_null, projectors


# -- operators ----------------------------------------------------------------

def _check_field(ctx: DetourContext, cx: ChainComplex) -> None:
    if cx.exact and isinstance(ctx.J, float):
        raise ValueError("exact complexes need a rational J")
    if cx.n < ctx.n:
        raise ValueError(f"complex has top degree {cx.n} < n = {ctx.n}")


def s_constant(ctx: DetourContext) -> Fraction:
    """s^k = prod_{i=1}^{p} 2i(n-2k-i+1)/n (1 when p = 0)."""
    out = Fraction(1)
    for i in range(1, ctx.p + 1):
        out *= Fraction(2 * i * (ctx.n - 2 * ctx.k - i + 1), ctx.n)
    return out


def Q_matrix(ctx: DetourContext, cx: ChainComplex) -> np.ndarray:
    _check_field(ctx, cx)
    return P_poly(ctx.n, ctx.k, ctx.p, ctx.J).matrix(cx.ddelta(ctx.k))


def L_matrix(ctx: DetourContext, cx: ChainComplex, order: str = "outer") -> np.ndarray:
    """L_k as a matrix; ``order`` selects delta P[d delta] d or delta d P[delta d]."""
    _check_field(ctx, cx)
    n, k, p = ctx.n, ctx.k, ctx.p
    if k == n // 2:
        return la.zeros((cx.dim(k), cx.dim(k)), cx.exact)
    poly = P_poly(n, k + 1, p - 1, ctx.J)
    if order == "outer":
        return cx.delta(k + 1) @ poly.matrix(cx.ddelta(k + 1)) @ cx.d(k)
    if order == "inner":
        return cx.deltad(k) @ poly.matrix(cx.deltad(k))
    raise ValueError(f"unknown assembly order {order!r}")


def G_matrix(ctx: DetourContext, cx: ChainComplex, order: str = "outer") -> np.ndarray:
    """G_k = delta P^p_k[d delta], or the intertwined P^p_k[delta d] delta."""
    _check_field(ctx, cx)
    poly = P_poly(ctx.n, ctx.k, ctx.p, ctx.J)
    if order == "outer":
        return cx.delta(ctx.k) @ poly.matrix(cx.ddelta(ctx.k))
    if order == "inner":
        return poly.matrix(cx.deltad(ctx.k - 1)) @ cx.delta(ctx.k)
    raise ValueError(f"unknown assembly order {order!r}")


def _closed_residual(cx: ChainComplex, k: int, w: np.ndarray) -> float:
    dw = cx.d(k) @ w
    if la.is_exact(dw):
        return 0.0 if la.is_zero(dw) else float("inf")
    return la.norm(dw) / (max(1.0, la.opnorm(cx.d(k))) * max(la.norm(w), 1e-300))


def apply_Q(ctx: DetourContext, cx: ChainComplex, w: np.ndarray,
            tol: la.Tolerances = la.DEFAULT_TOL) -> np.ndarray:
    """Q_k w for a closed k-form w."""
    _check_field(ctx, cx)
    res = _closed_residual(cx, ctx.k, w)
    if res > tol.tau:
        raise ValueError(f"input is not closed (relative residual {res:.3e})")
    return apply_P(P_poly(ctx.n, ctx.k, ctx.p, ctx.J), cx.ddelta(ctx.k), w)


def apply_L(ctx: DetourContext, cx: ChainComplex, f: np.ndarray, check: bool = False,
            tol: la.Tolerances = la.DEFAULT_TOL) -> np.ndarray:
    _check_field(ctx, cx)
    n, k, p = ctx.n, ctx.k, ctx.p
    if k == n // 2:
        return la.zeros(f.shape, cx.exact)
    poly = P_poly(n, k + 1, p - 1, ctx.J)
    out = cx.delta(k + 1) @ apply_P(poly, cx.ddelta(k + 1), cx.d(k) @ f)
    if check:
        other = cx.deltad(k) @ apply_P(poly, cx.deltad(k), f)
        _agree(out, other, tol, "delta P[d delta] d and delta d P[delta d]")
    return out


def apply_G(ctx: DetourContext, cx: ChainComplex, f: np.ndarray, check: bool = False,
            tol: la.Tolerances = la.DEFAULT_TOL) -> np.ndarray:
    _check_field(ctx, cx)
    poly = P_poly(ctx.n, ctx.k, ctx.p, ctx.J)
    out = cx.delta(ctx.k) @ apply_P(poly, cx.ddelta(ctx.k), f)
    if check:
        other = apply_P(poly, cx.deltad(ctx.k - 1), cx.delta(ctx.k) @ f)
        _agree(out, other, tol, "delta P[d delta] and P[delta d] delta")
    return out


def apply_LL(ctx: DetourContext, cx: ChainComplex, f: np.ndarray):
    """The (Z, X) slot pair; for k = 0 the pair is (L_0 f, empty)."""
    _check_field(ctx, cx)
    n, k, p = ctx.n, ctx.k, ctx.p
    if k == 0:
        return apply_L(ctx, cx, f), la.zeros((0,) + f.shape[1:], cx.exact)
    poly = P_poly(n, k + 1, p - 1, ctx.J)
    z = cx.deltad(k) @ apply_P(poly, cx.deltad(k), f)
    coef = Fraction(2 * p, k)
    z = z * (coef if cx.exact else float(coef))
    return z, apply_G(ctx, cx, f)


def _agree(a: np.ndarray, b: np.ndarray, tol: la.Tolerances, what: str) -> None:
    if la.is_exact(a) or la.is_exact(b):
        if not la.is_zero(a - b):
            raise AssertionError(f"{what} disagree")
        return
    scale = max(la.norm(a), la.norm(b), 1e-300)
    if la.norm(a - b) > 1e-10 * scale:
        raise AssertionError(f"{what} disagree (relative {la.norm(a - b) / scale:.3e})")


# -- reports ------------------------------------------------------------------

@dataclass
class Summand:
    kind: str
    eigenvalue: object
    dim: int


@dataclass
class DecompositionReport:
    space: str
    params: dict
    summands: list = field(default_factory=list)
    total_dim: int = 0
    residuals: dict = field(default_factory=dict)
    dims: dict = field(default_factory=dict)
    verdict: str = "pass"
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["summands"] = [dict(s, eigenvalue=_num(s["eigenvalue"])) for s in d["summands"]]
        return d

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass
class PairingReport:
    name: str
    params: dict
    predicted_constant: object = None
    values: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    verdict: str = "pass"
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["predicted_constant"] = _num(self.predicted_constant)
        d["values"] = {k: np.asarray(v, dtype=float).tolist() for k, v in self.values.items()}
        return d

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _num(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


class _Tally:
    """Accumulates pass/fail conditions and rank-conclusiveness."""

    def __init__(self, report):
        self.report = report
        self.ok = True
        self.conclusive = True

    def need(self, cond: bool, note: str) -> None:
        if not cond:
            self.ok = False
            self.report.notes.append(note)

    def seen(self, conclusive: bool) -> None:
        self.conclusive &= bool(conclusive)

    def residual(self, name: str, value: float, tol: float) -> None:
        self.report.residuals[name] = value
        self.need(value <= tol, f"residual {name} = {value:.3e} exceeds {tol:.1e}")

    def close(self):
        if not self.ok:
            self.report.verdict = "fail"
        elif not self.conclusive:
            self.report.verdict = "inconclusive"
            self.report.notes.append("rank decision within the ambiguity gap")
        else:
            self.report.verdict = "pass"
        return self.report


def _rel_residual(A: np.ndarray, V: np.ndarray, scale: float = 0.0) -> float:
    """max_v |A v| / (max(1, |A|, scale) |v|); exact inputs give 0 or inf."""
    if V.shape[1] == 0 or A.shape[0] == 0:
        return 0.0
    AV = A @ V
    if la.is_exact(AV):
        return 0.0 if la.is_zero(AV) else float("inf")
    scale = max(1.0, la.opnorm(A), scale)
    cols = np.linalg.norm(AV, axis=0) / (scale * np.maximum(np.linalg.norm(V, axis=0), 1e-300))
    return float(cols.max())


def op_scale(ctx: DetourContext, cx: ChainComplex, name: str) -> float:
    """Product of factor norms: the natural size of Q, G or L before cancellation."""
    if cx.exact:
        return 0.0
    n, k, p = ctx.n, ctx.k, ctx.p
    if name == "L":
        if k == n // 2:
            return 0.0
        E = la.opnorm(cx.ddelta(k + 1))
        out = la.opnorm(cx.delta(k + 1)) * la.opnorm(cx.d(k))
        shifts = P_poly(n, k + 1, p - 1, ctx.J).shifts
    else:
        E = la.opnorm(cx.ddelta(k))
        out = la.opnorm(cx.delta(k)) if name == "G" else 1.0
        shifts = P_poly(n, k, p, ctx.J).shifts
    for c in shifts:
        out *= E + abs(float(c))
    return out


def _span_rank(blocks, nrows, exact, tol):
    M = la.hstack(blocks, nrows, exact)
    return la.rank(M, tol)


def _params(ctx: DetourContext, cx: ChainComplex) -> dict:
    return {"n": ctx.n, "k": ctx.k, "J": _num(ctx.J), "generator": cx.meta.get("generator"),
            "seed": cx.meta.get("seed")}


def _require_nonflat(ctx: DetourContext) -> None:
    if ctx.J == 0:
        raise ValueError("J = 0: the factored decomposition needs a non Ricci-flat scale")


def _sum_check(t: _Tally, rep, ambient: np.ndarray, parts: list, nrows: int, exact: bool,
               tol: la.Tolerances) -> None:
    """Dimensions add up, the parts are independent and lie in ``ambient``."""
    total = ambient.shape[1]
    dsum = sum(P.shape[1] for P in parts)
    r = _span_rank(parts, nrows, exact, tol)
    t.seen(r.conclusive)
    r_all = _span_rank([ambient] + parts, nrows, exact, tol)
    t.seen(r_all.conclusive)
    rep.dims.update({"summand_sum": dsum, "span_rank": r.rank, "joint_rank": r_all.rank})
    t.need(dsum == total, f"summand dimensions sum to {dsum}, kernel has {total}")
    t.need(r.rank == dsum, "summands are not independent")
    t.need(r_all.rank == total, "summands leave the kernel")


def null_L_decomposition(ctx: DetourContext, cx: ChainComplex,
                         tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """N(L_k) = ker(delta d) + sum_{i<p} (delta d)-eigenspaces at lambda_i^{k+1}."""
    _require_nonflat(ctx)
    if ctx.k >= ctx.n // 2:
        raise ValueError("L_k decomposition needs k < n/2")
    k = ctx.k
    rep = DecompositionReport("N(L_k)", _params(ctx, cx))
    t = _Tally(rep)
    L = L_matrix(ctx, cx)
    N, ok = la.null_space(L, tol, op_scale(ctx, cx, "L"))
    t.seen(ok)
    rep.total_dim = N.shape[1]
    parts = [eigenspace(cx, k, "deltad", 0, tol)]
    parts += [eigenspace(cx, k, "deltad", lam, tol) for lam in ctx.lambdas_next()]
    for s in parts:
        rep.summands.append(Summand(s.kind, s.eigenvalue, s.dim))
        t.residual(f"L on eig {s.eigenvalue}", _rel_residual(L, s.basis), tol.tau)
    _sum_check(t, rep, N, [s.basis for s in parts], cx.dim(k), cx.exact, tol)
    # second route: canonical projectors of prod (delta d - lambda) on N(L)
    eigs = [0] + list(ctx.lambdas_next())
    eigs = [Fraction(e) if cx.exact else float(e) for e in eigs]
    split = decompose_null(eigs, cx.deltad(k), N, tol)
    rep.dims["projector_dims"] = [B.shape[1] for B in split]
    t.need(rep.dims["projector_dims"] == [s.dim for s in parts],
           "projector images disagree with eigenspace dimensions")
    C, ok = closed_forms(cx, k, tol)
    t.seen(ok)
    rep.dims["closed"] = C.shape[1]
    t.need(C.shape[1] == parts[0].dim, "ker(delta d) differs from the closed forms")
    return t.close()


def null_G_decomposition(ctx: DetourContext, cx: ChainComplex,
                         tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """N(G_k) = N(delta) + sum_i (d delta)-eigenspaces at lambda_i^k."""
    _require_nonflat(ctx)
    k = ctx.k
    rep = DecompositionReport("N(G_k)", _params(ctx, cx))
    t = _Tally(rep)
    G = G_matrix(ctx, cx)
    N, ok = la.null_space(G, tol, op_scale(ctx, cx, "G"))
    t.seen(ok)
    rep.total_dim = N.shape[1]
    Nd, ok = la.null_space(cx.delta(k), tol)
    t.seen(ok)
    rep.summands.append(Summand("kernel-delta", 0, Nd.shape[1]))
    parts = [Nd]
    for lam in ctx.lambdas():
        s = eigenspace(cx, k, "ddelta", lam, tol)
        rep.summands.append(Summand(s.kind, lam, s.dim))
        t.residual(f"G on eig {lam}", _rel_residual(G, s.basis), tol.tau)
        parts.append(s.basis)
    _sum_check(t, rep, N, parts, cx.dim(k), cx.exact, tol)
    return t.close()


def harmonics_G(ctx: DetourContext, cx: ChainComplex,
                tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """H_G = closed forms killed by G_k = harmonics + sum_i eigenspaces of d delta."""
    _require_nonflat(ctx)
    k = ctx.k
    rep = DecompositionReport("H_G^k", _params(ctx, cx))
    t = _Tally(rep)
    G = G_matrix(ctx, cx)
    C, ok = closed_forms(cx, k, tol)
    t.seen(ok)
    HG, ok = la.restrict_kernel(G, C, tol, op_scale(ctx, cx, "G"))
    t.seen(ok)
    rep.total_dim = HG.shape[1]
    H, ok = harmonic_basis(cx, k, tol)
    t.seen(ok)
    rep.summands.append(Summand("harmonic", 0, H.shape[1]))
    parts = [H]
    for lam in ctx.lambdas():
        s = eigenspace(cx, k, "ddelta", lam, tol)
        rep.summands.append(Summand(s.kind, lam, s.dim))
        t.residual(f"G on eig {lam}", _rel_residual(G, s.basis), tol.tau)
        t.residual(f"d on eig {lam}", _rel_residual(cx.d(k), s.basis), tol.tau)
        parts.append(s.basis)
    _sum_check(t, rep, HG, parts, cx.dim(k), cx.exact, tol)
    return t.close()


def null_LL_decomposition(ctx: DetourContext, cx: ChainComplex,
                          tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """N(LL_k) = (N(delta) & N(delta d)) + coexact and exact eigen-summands."""
    _require_nonflat(ctx)
    n, k = ctx.n, ctx.k
    rep = DecompositionReport("N(LL_k)", _params(ctx, cx))
    t = _Tally(rep)
    m = cx.dim(k)
    Nd, ok = la.null_space(cx.delta(k), tol)
    t.seen(ok)
    if k == n // 2:
        z, x = apply_LL(ctx, cx, cx.identity(k))
        NLL, ok = la.null_space(x, tol)
        t.seen(ok)
        rep.total_dim = NLL.shape[1]
        rep.summands.append(Summand("kernel-delta", 0, Nd.shape[1]))
        t.need(la.is_zero(z), "Z slot is nonzero at k = n/2")
        _sum_check(t, rep, NLL, [Nd], m, cx.exact, tol)
        return t.close()
    L = L_matrix(ctx, cx)
    G = G_matrix(ctx, cx)
    NL, ok = la.null_space(L, tol, op_scale(ctx, cx, "L"))
    t.seen(ok)
    NLL, ok = la.restrict_kernel(G, NL, tol, op_scale(ctx, cx, "G")) if k > 0 else (NL, True)
    t.seen(ok)
    if not cx.exact and NLL.shape[1]:
        NLL, ok = la.col_space(NLL, tol)
        t.seen(ok)
    rep.total_dim = NLL.shape[1]
    # the slot pair must have the same kernel
    z, x = apply_LL(ctx, cx, cx.identity(k))
    zx_scale = 0.0 if cx.exact else max(float(Fraction(2 * ctx.p, max(k, 1))) * op_scale(ctx, cx, "L"),
                                        op_scale(ctx, cx, "G") if k else 0.0)
    r = la.rank(np.vstack([z, x]) if x.shape[0] else z, tol, zx_scale)
    t.seen(r.conclusive)
    rep.dims["slot_kernel"] = m - r.rank
    t.need(m - r.rank == rep.total_dim, "slot-pair kernel differs from N(L) & N(G)")
    A, ok = la.restrict_kernel(cx.deltad(k), Nd, tol)
    t.seen(ok)
    rep.summands.append(Summand("kernel-delta-deltad", 0, A.shape[1]))
    parts = [A]
    for lam in ctx.lambdas_next():
        s = eigenspace(cx, k, "deltad", lam, tol)
        rep.summands.append(Summand(s.kind, lam, s.dim))
        parts.append(s.basis)
    for lam in ctx.lambdas():
        s = eigenspace(cx, k, "ddelta", lam, tol)
        rep.summands.append(Summand(s.kind, lam, s.dim))
        parts.append(s.basis)
    for B in parts[1:]:
        t.residual("LL on eigen-summands", max(_rel_residual(L, B), _rel_residual(G, B)), tol.tau)
    _sum_check(t, rep, NLL, parts, m, cx.exact, tol)
    # N(delta) & N(d)  <=  N(delta) & N(delta d)  <=  N(d delta + delta d)
    H, ok = harmonic_basis(cx, k, tol)
    t.seen(ok)
    Lap, ok = la.null_space(cx.laplacian(k), tol)
    t.seen(ok)
    rep.dims["between"] = [H.shape[1], A.shape[1], Lap.shape[1]]
    t.need(_contains(A, H, tol) and _contains(Lap, A, tol), "sandwich inclusions fail")
    t.need(H.shape[1] == A.shape[1] == Lap.shape[1],
           "sandwich does not collapse in the positive-definite model")
    return t.close()


def _contains(big: np.ndarray, small: np.ndarray, tol: la.Tolerances) -> bool:
    if small.shape[1] == 0:
        return True
    exact = la.is_exact(big) or la.is_exact(small)
    return la.rank(la.hstack([big, small], big.shape[0], exact), tol).rank == big.shape[1]


def _HL_dim(ctx_minus: DetourContext, cx: ChainComplex, tol: la.Tolerances, t: _Tally):
    """(dim N(L_j), rank d_{j-1}, kernel basis) for j = ctx_minus.k."""
    j = ctx_minus.k
    NL, ok = la.null_space(L_matrix(ctx_minus, cx), tol, op_scale(ctx_minus, cx, "L"))
    t.seen(ok)
    r = la.rank(cx.d(j - 1), tol)
    t.seen(r.conclusive)
    return NL, r.rank


def cohomology_HL(ctx: DetourContext, cx: ChainComplex,
                  tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """dim H^{k-1}_L against its eigenspace description (ctx.k is the upper degree k)."""
    _require_nonflat(ctx)
    n, k = ctx.n, ctx.k
    if not 1 <= k <= n // 2:
        raise ValueError("H^{k-1}_L needs 1 <= k <= n/2")
    rep = DecompositionReport("H^{k-1}_L", _params(ctx, cx))
    t = _Tally(rep)
    lower = DetourContext(n, k - 1, ctx.J)
    NL, rd = _HL_dim(lower, cx, tol, t)
    rep.total_dim = NL.shape[1] - rd
    kernel0 = eigenspace(cx, k - 1, "deltad", 0, tol)
    rep.summands.append(Summand("kernel-deltad/R(d)", 0, kernel0.dim - rd))
    parts = []
    for lam in ctx.lambdas():
        s = eigenspace(cx, k - 1, "deltad", lam, tol)
        rep.summands.append(Summand(s.kind, lam, s.dim))
        parts.append(s.basis)
    predicted = sum(s.dim for s in rep.summands)
    rep.dims.update({"N(L)": NL.shape[1], "rank d": rd, "predicted": predicted})
    t.need(predicted == rep.total_dim, f"predicted {predicted}, computed {rep.total_dim}")
    # the lambda part meets R(d) trivially
    Rd, ok = la.col_space(cx.d(k - 2), tol)
    t.seen(ok)
    lam_part = la.hstack(parts, cx.dim(k - 1), cx.exact)
    inter, ok = la.intersect(lam_part, Rd, tol) if lam_part.shape[1] else (lam_part, True)
    t.seen(ok)
    t.need(inter.shape[1] == 0, "eigen-summands meet the exact forms")
    return t.close()


def sequence_checks(ctx: DetourContext, cx: ChainComplex,
                    tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """Rank accounting for

        0 -> H^{k-1} -> H^{k-1}_L -d-> H_G^k  -> H^k   -> 0
        0 -> H^{k-1} -> H^{k-1}_L -d-> N(LL_k) -> H^k_L -> 0

    plus, for J != 0, the bijections d between coexact and exact eigenspaces.
    """
    n, k = ctx.n, ctx.k
    if not 1 <= k <= n // 2:
        raise ValueError("sequences need 1 <= k <= n/2")
    rep = DecompositionReport("exact sequences", _params(ctx, cx))
    t = _Tally(rep)
    exact = cx.exact
    lower = DetourContext(n, k - 1, ctx.J)
    NL1, rd2 = _HL_dim(lower, cx, tol, t)
    C1, ok = closed_forms(cx, k - 1, tol)
    t.seen(ok)
    Ck, ok = closed_forms(cx, k, tol)
    t.seen(ok)
    rd1 = la.rank(cx.d(k - 1), tol)
    t.seen(rd1.conclusive)
    rd1 = rd1.rank
    b_lo = C1.shape[1] - rd2
    b_hi = Ck.shape[1] - rd1
    HL_lo = NL1.shape[1] - rd2
    G = G_matrix(ctx, cx)
    HG, ok = la.restrict_kernel(G, Ck, tol, op_scale(ctx, cx, "G"))
    t.seen(ok)
    # H^{k-1} -> H^{k-1}_L is induced by C^{k-1} <= N(L_{k-1})
    t.need(_contains(NL1, C1, tol), "closed forms are not in N(L_{k-1})")
    # exactness at H^{k-1}_L: ker(d on N(L_{k-1})) = C^{k-1}
    kd, ok = la.restrict_kernel(cx.d(k - 1), NL1, tol)
    t.seen(ok)
    t.need(kd.shape[1] == C1.shape[1], "kernel of d on N(L_{k-1}) is not C^{k-1}")
    # d maps N(L_{k-1}) into H_G^k
    img = cx.d(k - 1) @ NL1
    dnorm = 0.0 if exact else la.opnorm(cx.d(k - 1))
    t.residual("G_k d N(L_{k-1})",
               _rel_residual(G @ cx.d(k - 1), NL1, op_scale(ctx, cx, "G") * dnorm), tol.tau)
    r_img = la.rank(img, tol, dnorm * la.opnorm(NL1))
    t.seen(r_img.conclusive)
    # exactness at H_G^k: image = H_G & R(d)
    Rd, ok = la.col_space(cx.d(k - 1), tol)
    t.seen(ok)
    HG_ex, ok = la.intersect(HG, Rd, tol)
    t.seen(ok)
    t.need(r_img.rank == HG_ex.shape[1], "image of d differs from H_G & R(d)")
    # surjectivity onto H^k (k-1 regularity)
    t.need(HG.shape[1] - HG_ex.shape[1] == b_hi, "H_G^k -> H^k is not onto")
    alt = b_lo - HL_lo + HG.shape[1] - b_hi
    t.need(alt == 0, f"alternating sum {alt} != 0")
    # second sequence
    if k == n // 2:
        NLL, ok = la.null_space(cx.delta(k), tol)
        NLk = cx.identity(k)
    else:
        ctxk = DetourContext(n, k, ctx.J)
        NLk, ok = la.null_space(L_matrix(ctxk, cx), tol, op_scale(ctxk, cx, "L"))
        t.seen(ok)
        NLL, ok = la.restrict_kernel(G, NLk, tol, op_scale(ctx, cx, "G"))
        if not exact and NLL.shape[1]:
            NLL, ok2 = la.col_space(NLL, tol)
            t.seen(ok2)
    t.seen(ok)
    HLk = NLk.shape[1] - rd1
    ctxk = DetourContext(n, k, ctx.J)
    t.residual("LL d N(L_{k-1})",
               _rel_residual(L_matrix(ctxk, cx) @ cx.d(k - 1), NL1,
                             op_scale(ctxk, cx, "L") * dnorm), tol.tau)
    NLL_ex, ok = la.intersect(NLL, Rd, tol)
    t.seen(ok)
    t.need(r_img.rank == NLL_ex.shape[1], "image of d differs from N(LL) & R(d)")
    t.need(NLL.shape[1] - NLL_ex.shape[1] == HLk, "N(LL_k) -> H^k_L is not onto")
    alt2 = b_lo - HL_lo + NLL.shape[1] - HLk
    t.need(alt2 == 0, f"second alternating sum {alt2} != 0")
    rep.dims.update({"H^{k-1}": b_lo, "H^{k-1}_L": HL_lo, "H_G^k": HG.shape[1], "H^k": b_hi,
                     "N(LL_k)": NLL.shape[1], "H^k_L": HLk})
    rep.total_dim = HG.shape[1]
    if ctx.J != 0:
        bij = []
        for lam in ctx.lambdas():
            src = eigenspace(cx, k - 1, "deltad", lam, tol)
            dst = eigenspace(cx, k, "ddelta", lam, tol)
            r = la.rank(cx.d(k - 1) @ src.basis, tol, dnorm * la.opnorm(src.basis)) if src.dim else la.RankResult(0, True, 0, 0)
            t.seen(r.conclusive)
            bij.append([src.dim, dst.dim, r.rank])
            t.need(r.rank == src.dim == dst.dim, f"d is not a bijection at eigenvalue {lam}")
        rep.dims["bijections"] = bij
    return t.close()


def null_Q(ctx: DetourContext, cx: ChainComplex,
           tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """Kernel of Q_k on closed forms = sum_i (d delta)-eigenspaces, inside R(d)."""
    _require_nonflat(ctx)
    k = ctx.k
    rep = DecompositionReport("N(Q_k|C^k)", _params(ctx, cx))
    t = _Tally(rep)
    Q = Q_matrix(ctx, cx)
    C, ok = closed_forms(cx, k, tol)
    t.seen(ok)
    K, ok = la.restrict_kernel(Q, C, tol, op_scale(ctx, cx, "Q"))
    t.seen(ok)
    rep.total_dim = K.shape[1]
    parts = []
    for lam in ctx.lambdas():
        s = eigenspace(cx, k, "ddelta", lam, tol)
        rep.summands.append(Summand(s.kind, lam, s.dim))
        t.residual(f"Q on eig {lam}", _rel_residual(Q, s.basis), tol.tau)
        parts.append(s.basis)
    _sum_check(t, rep, K, parts, cx.dim(k), cx.exact, tol)
    Rd, ok = la.col_space(cx.d(k - 1), tol)
    t.seen(ok)
    t.need(_contains(Rd, K, tol) if Rd.shape[1] else K.shape[1] == 0, "kernel leaves R(d)")
    return t.close()


def b_space(ctx: DetourContext, cx: ChainComplex,
            tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """B^k = {df : Q_k df in R(delta)}."""
    k = ctx.k
    rep = DecompositionReport("B^k", _params(ctx, cx))
    t = _Tally(rep)
    Q = Q_matrix(ctx, cx)
    D = cx.d(k - 1)
    A = la.hstack([Q @ D, -cx.delta(k + 1)], cx.dim(k), cx.exact)
    if A.shape[1]:
        sc = 0.0 if cx.exact else op_scale(ctx, cx, "Q") * la.opnorm(D)
        K, ok = la.null_space(A, tol, sc)
        t.seen(ok)
        F = K[: cx.dim(k - 1)]
        B, ok = la.col_space(D @ F, tol, scale=0.0 if cx.exact else la.opnorm(D) * la.opnorm(K))
        t.seen(ok)
    else:
        B = la.zeros((cx.dim(k), 0), cx.exact)
    rep.total_dim = B.shape[1]
    parts = []
    if ctx.J != 0:
        for lam in ctx.lambdas():
            s = eigenspace(cx, k, "ddelta", lam, tol)
            rep.summands.append(Summand(s.kind, lam, s.dim))
            parts.append(s.basis)
    _sum_check(t, rep, B, parts, cx.dim(k), cx.exact, tol)
    return t.close()


def _gram_unit(cx: ChainComplex, k: int, B: np.ndarray) -> np.ndarray:
    if cx.exact or B.shape[1] == 0:
        return B
    return la.gram_orthonormalize(B, cx.gram(k))


def _gnorms(cx: ChainComplex, k: int, B: np.ndarray) -> np.ndarray:
    if B.shape[1] == 0:
        return np.zeros(0)
    G = cx.gram(k).astype(float)
    Bf = B.astype(float)
    return np.sqrt(np.einsum("ij,ij->j", Bf, G @ Bf))


def _pairing_bound(cx, k, U, W, M) -> float:
    """max |M_ab| / (|u_a| |w_b|) in Gram norms."""
    if M.size == 0:
        return 0.0
    nu = _gnorms(cx, k, U)
    nw = _gnorms(cx, k, W)
    return float(np.max(np.abs(M.astype(float)) / np.outer(nu, nw)))


def pairing_suite(ctx: DetourContext, cx: ChainComplex,
                  tol: la.Tolerances = la.DEFAULT_TOL) -> PairingReport:
    """Descent and evaluation of the pairings (u, w) -> <u, Q_k w>."""
    n, k, p = ctx.n, ctx.k, ctx.p
    const = s_constant(ctx) * (Fraction(ctx.J) ** p if not isinstance(ctx.J, float) else 1)
    if isinstance(ctx.J, float):
        const = float(s_constant(ctx)) * ctx.J ** p
    rep = PairingReport("<u, Q_k w>", _params(ctx, cx), predicted_constant=const)
    t = _Tally(rep)
    Q = Q_matrix(ctx, cx)
    Gk = cx.gram(k)
    C, ok = closed_forms(cx, k, tol)
    t.seen(ok)
    H, ok = harmonic_basis(cx, k, tol)
    t.seen(ok)
    H = _gram_unit(cx, k, H)

    # (a) descent on N(L_k) x C^k
    if ctx.J != 0 and k < n // 2:
        NL, ok = la.null_space(L_matrix(ctx, cx), tol, op_scale(ctx, cx, "L"))
        t.seen(ok)
        eigs = [0] + list(ctx.lambdas_next())
        eigs = [Fraction(e) if cx.exact else float(e) for e in eigs]
        projs = projectors(eigs, cx.deltad(k))
        U1 = la.zeros(NL.shape, cx.exact)
        for Pr in projs.matrices[1:]:
            U1 = U1 + Pr @ NL
        U0 = projs.matrices[0] @ NL
        M1 = U1.T @ Gk @ Q @ C
        rep.values["descent"] = M1
        t.residual("<u_1, Q w>", _pairing_bound(cx, k, NL, C, M1) if NL.shape[1] and C.shape[1] else 0.0,
                   tol.tau)
        full = NL.T @ Gk @ Q @ C
        t.residual("<u, Qw> - <u_0, Qw>",
                   _pairing_bound(cx, k, NL, C, full - U0.T @ Gk @ Q @ C) if full.size else 0.0, tol.tau)
        P0 = projs.matrices[0]
        p0scale = 0.0 if cx.exact else la.opnorm(cx.d(k)) * la.opnorm(P0)
        t.residual("u_0 closed", _rel_residual(cx.d(k) @ P0, NL, p0scale), tol.tau)

    # (b) the quadratic form on H_G
    Theta_h = H.T @ Gk @ Q @ H
    Gram_h = H.T @ Gk @ H
    rep.values["theta_harmonic"] = Theta_h
    if ctx.J != 0 or k == n // 2:
        c = const if not cx.exact else Fraction(const)
        diff = Theta_h - (c if cx.exact else float(c)) * Gram_h
        scale = max(abs(float(c)), 1e-300)
        err = 0.0 if diff.size == 0 else (
            (0.0 if la.is_zero(diff) else float("inf")) if la.is_exact(diff)
            else float(np.max(np.abs(diff))) / (scale * max(1.0, float(np.max(np.abs(Gram_h.astype(float)))))))
        t.residual("theta on harmonics vs s^k J^p <u,w>", err, tol.tau_rel)
    else:
        err = float(np.max(np.abs(Theta_h.astype(float)))) / max(1.0, la.opnorm(Q)) if Theta_h.size else 0.0
        t.residual("theta on harmonics (Ricci-flat, k < n/2)", err, tol.tau_rel)
    if ctx.J != 0:
        HG, ok = la.restrict_kernel(G_matrix(ctx, cx), C, tol, op_scale(ctx, cx, "G"))
        t.seen(ok)
        worst = 0.0
        for lam in ctx.lambdas():
            s = eigenspace(cx, k, "ddelta", lam, tol)
            if s.dim == 0 or HG.shape[1] == 0:
                continue
            M = s.basis.T @ Gk @ Q @ HG
            Mt = HG.T @ Gk @ Q @ s.basis
            worst = max(worst, _pairing_bound(cx, k, s.basis, HG, M), _pairing_bound(cx, k, HG, s.basis, Mt))
        t.residual("theta with an exact eigen-summand", worst, tol.tau)

    # (d) k = 0: <f, Q 1> = c <1, Q 1>
    if k == 0:
        NL, ok = la.null_space(L_matrix(ctx, cx), tol, op_scale(ctx, cx, "L"))
        t.seen(ok)
        worst = 0.0
        for j in range(H.shape[1]):
            h = H[:, j]
            hh = h @ Gk @ h
            for a in range(NL.shape[1]):
                f = NL[:, a]
                c = (f @ Gk @ h) / hh
                lhs = f @ Gk @ Q @ h
                rhs = c * (h @ Gk @ Q @ h)
                if cx.exact:
                    worst = max(worst, 0.0 if lhs == rhs else float("inf"))
                else:
                    scale = max(abs(rhs), abs(lhs), np.sqrt(abs(f @ Gk @ f) * hh) * max(1.0, abs(float(const))))
                    worst = max(worst, abs(lhs - rhs) / max(scale, 1e-300))
        t.residual("<f, Q 1> - c <1, Q 1>", worst, tol.tau_rel)
        if H.shape[1] and NL.shape[1]:
            coeff = H.T @ Gk @ NL
            rest = NL - H @ coeff
            Rdel, ok = la.col_space(cx.delta(1), tol)
            t.seen(ok)
            rep.residuals["c - f in R(delta)"] = 0.0 if _contains(Rdel, rest if cx.exact else la.col_space(rest, tol, scale=la.opnorm(NL))[0], tol) else 1.0
            t.need(rep.residuals["c - f in R(delta)"] == 0.0, "f - c is not a divergence")
    return t.close()


def ricci_flat_branch(ctx: DetourContext, cx: ChainComplex, nvec: int = 50, seed: int = 0,
                      tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """J = 0: Q_k = (d delta)^p on closed forms, N(L_k) = C^k, H_G = N(LL_k) = harmonics."""
    if ctx.J != 0:
        raise ValueError("Ricci-flat branch needs J = 0")
    n, k, p = ctx.n, ctx.k, ctx.p
    rep = DecompositionReport("Ricci-flat branch", _params(ctx, cx))
    t = _Tally(rep)
    rng = make_rng(seed)
    C, ok = closed_forms(cx, k, tol)
    t.seen(ok)
    W = C @ rng.standard_normal((C.shape[1], nvec)) if C.shape[1] else np.zeros((cx.dim(k), 0))
    power = np.linalg.matrix_power(cx.ddelta(k), p) if cx.dim(k) else np.zeros((0, 0))
    got = apply_Q(ctx, cx, W) if W.shape[1] else W
    ref = power @ W
    err = la.norm(got - ref) / max(la.norm(ref), la.norm(W), 1e-300)
    t.residual("Q_k - (d delta)^p", err, 1e-10)
    H, ok = harmonic_basis(cx, k, tol)
    t.seen(ok)
    rep.summands.append(Summand("harmonic", 0, H.shape[1]))
    if k < n // 2:
        NL, ok = la.null_space(L_matrix(ctx, cx), tol, op_scale(ctx, cx, "L"))
        t.seen(ok)
        rep.total_dim = NL.shape[1]
        t.need(NL.shape[1] == C.shape[1] and _contains(C, NL, tol), "N(L_k) != C^k")
        G = G_matrix(ctx, cx)
        HG, ok = la.restrict_kernel(G, C, tol, op_scale(ctx, cx, "G"))
        t.seen(ok)
        NLL, ok2 = la.restrict_kernel(G, NL, tol, op_scale(ctx, cx, "G"))
        t.seen(ok and ok2)
        rep.dims.update({"H_G": HG.shape[1], "N(LL)": NLL.shape[1], "harmonic": H.shape[1]})
        t.need(HG.shape[1] == H.shape[1] == NLL.shape[1], "H_G, N(LL) and harmonics differ")
    b, ok = b_space(ctx, cx, tol), True
    rep.dims["B^k"] = b.total_dim
    t.need(b.total_dim == 0, "B^k is nonzero for J = 0")
    return t.close()


def positive_curvature(ctx: DetourContext, cx: ChainComplex,
                       tol: la.Tolerances = la.DEFAULT_TOL) -> DecompositionReport:
    """J > 0: no eigenvalue lambda_i^k is attained and the decompositions collapse."""
    if not ctx.J > 0:
        raise ValueError("positive-curvature check needs J > 0")
    n, k = ctx.n, ctx.k
    rep = DecompositionReport("positive curvature", _params(ctx, cx))
    t = _Tally(rep)
    hits = []
    for lam in ctx.lambdas() + ctx.lambdas_next():
        for kp in range(cx.n + 1):
            for tag in ("ddelta", "deltad"):
                s = eigenspace(cx, kp, tag, lam, tol)
                if s.dim:
                    hits.append([tag, kp, _num(lam), s.dim])
    rep.dims["eigen_hits"] = hits
    t.need(not hits, "an eigenspace at a negative lambda is nonempty")
    C, ok = closed_forms(cx, k, tol)
    t.seen(ok)
    H, ok = harmonic_basis(cx, k, tol)
    t.seen(ok)
    if k < n // 2:
        NL, ok = la.null_space(L_matrix(ctx, cx), tol, op_scale(ctx, cx, "L"))
        t.seen(ok)
        t.need(NL.shape[1] == C.shape[1] and _contains(C, NL, tol), "N(L_k) != C^k")
        rep.dims["N(L)"] = NL.shape[1]
    HG, ok = la.restrict_kernel(G_matrix(ctx, cx), C, tol, op_scale(ctx, cx, "G"))
    t.seen(ok)
    rep.dims.update({"closed": C.shape[1], "H_G": HG.shape[1], "harmonic": H.shape[1]})
    rep.total_dim = HG.shape[1]
    t.need(HG.shape[1] == H.shape[1], "H_G != harmonics")
    return t.close()


# -- seeded complexes ---------------------------------------------------------

@dataclass
class SeededComplex:
    complex: ChainComplex
    exact_mults: list
    coexact_mults: list
    harmonic: list


def _noise_eigs(rng: np.random.Generator, count: int, top: float) -> list:
    # stays at least 0.3 away from every integer, hence from every lambda when J = -n/2
    base = rng.integers(0, int(top) + 1, size=count)
    return list(base + rng.uniform(0.3, 0.7, size=count))


def seeded_complex(ctx: DetourContext, seed: int = 0, max_mult: int = 2,
                   exact: bool = False, scramble: float = 0.0) -> SeededComplex:
    """Complex with known multiplicities at the targets
    lambda_i^k (exact side, degree k) and lambda_i^{k+1} (coexact side).

    Intended for J = -n/2, where every target is a positive integer; noise
    eigenvalues are kept away from the integers.  ``scramble`` > 0 applies a
    random change of basis (float only), giving non-identity Grams.
    """
    n, k = ctx.n, ctx.k
    lam_k = [l for l in ctx.lambdas()] if k >= 1 else []
    lam_next = ctx.lambdas_next()
    if any(float(l) <= 0 for l in lam_k + lam_next):
        raise ValueError("seeded targets must be positive; use J < 0")
    rng = make_rng(seed)
    top = max([float(l) for l in lam_k + lam_next] + [4.0]) + 2
    a = [int(x) for x in rng.integers(0, max_mult + 1, size=len(lam_k))]
    b = [int(x) for x in rng.integers(0, max_mult + 1, size=len(lam_next))]
    eigs = []
    for j in range(n):
        noise_count = int(rng.integers(0, 3))
        noise = [] if exact else _noise_eigs(rng, noise_count, top)
        if exact:
            noise = [Fraction(int(m)) + Fraction(1, 2) for m in rng.integers(0, int(top), size=noise_count)]
        seeds = []
        if j == k - 1:
            seeds = [lam for lam, m in zip(lam_k, a) for _ in range(m)]
        elif j == k:
            seeds = [lam for lam, m in zip(lam_next, b) for _ in range(m)]
        eigs.append(list(seeds) + list(noise))
    harm = [int(x) for x in rng.integers(0, 3, size=n + 1)]
    harm[0] = 1
    if exact:
        cx = build_prescribed_exact(n, eigs, harm)
    else:
        spectra = [[float(np.sqrt(float(v))) for v in e] for e in eigs]
        cx = build_prescribed(n, spectra, harm, seed=int(rng.integers(0, 2**63)))
        if scramble:
            cx = _scramble(cx, rng, scramble)
    meta = dict(cx.meta, generator="seeded", seed=seed, J=_num(ctx.J), k=k)
    if scramble:
        meta["scrambled"] = scramble
    cx = ChainComplex(cx.n, cx.dims, cx.differentials, cx.grams, meta)
    return SeededComplex(cx, a, b, harm)

