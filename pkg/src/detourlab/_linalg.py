"""Dense linear algebra over two scalar fields.

Float arrays go through numpy/scipy SVDs with a relative rank threshold.
Object arrays holding ``fractions.Fraction`` (or ints) are treated as exact
rationals; ranks and kernels are then computed with sympy.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg
import sympy


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every check.

    ``tau`` is the eigen-membership tolerance, ``eps`` the relative rank
    threshold (scaled by the largest dimension and singular value) and
    ``tau_rel`` the relative tolerance for pairing comparisons.
    """

    tau: float = 1e-8
    eps: float = 1e-10
    tau_rel: float = 1e-8
    gap: float = 10.0


DEFAULT_TOL = Tolerances()


def is_exact(A) -> bool:
    return isinstance(A, np.ndarray) and A.dtype == object


def as_exact(A) -> np.ndarray:
    A = np.asarray(A, dtype=object)
    out = np.empty(A.shape, dtype=object)
    for idx, v in np.ndenumerate(A):
        out[idx] = Fraction(v)
    return out


def eye(n: int, exact: bool = False) -> np.ndarray:
    if exact:
        out = np.zeros((n, n), dtype=object)
        out[...] = Fraction(0)
        for i in range(n):
            out[i, i] = Fraction(1)
        return out
    return np.eye(n)


def zeros(shape, exact: bool = False) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out[...] = Fraction(0)
        return out
    return np.zeros(shape)


def coerce_scalar(c, like: np.ndarray):
    """Cast a shift scalar into the field of ``like``."""
    if is_exact(like):
        return Fraction(c)
    return float(c)


def _to_sympy(A: np.ndarray) -> sympy.Matrix:
    rows, cols = A.shape
    return sympy.Matrix(rows, cols, lambda i, j: sympy.Rational(
        Fraction(A[i, j]).numerator, Fraction(A[i, j]).denominator))


def _from_sympy(M: sympy.Matrix) -> np.ndarray:
    out = np.empty(M.shape, dtype=object)
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            v = sympy.Rational(M[i, j])
            out[i, j] = Fraction(int(v.p), int(v.q))
    return out


def norm(A) -> float:
    """Frobenius norm as a float, for either field."""
    if A.size == 0:
        return 0.0
    if is_exact(A):
        return float(np.sqrt(float(sum(Fraction(v) ** 2 for v in A.flat))))
    return float(np.linalg.norm(A))


def opnorm(A) -> float:
    if A.size == 0:
        return 0.0
    if is_exact(A):
        A = A.astype(float)
    return float(np.linalg.norm(A, 2))


def is_zero(A, tol: float = 0.0) -> bool:
    if A.size == 0:
        return True
    if is_exact(A):
        return all(Fraction(v) == 0 for v in A.flat)
    return norm(A) <= tol


@dataclass(frozen=True)
class RankResult:
    rank: int
    conclusive: bool
    threshold: float
    gap: float

    def __index__(self) -> int:
        return self.rank

    def __int__(self) -> int:
        return self.rank


def rank(A, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> RankResult:
    """Numerical (or exact) rank with an ambiguity flag.

    The threshold is ``eps * max(shape) * max(sigma_max, scale)``; pass
    ``scale`` when A is a product whose factors are much larger than A
    itself, so that cancellation round-off is not mistaken for rank.
    The decision is inconclusive when some singular value lies within a
    factor ``tol.gap`` of the threshold on either side.
    """
    A = np.asarray(A)
    if A.size == 0:
        return RankResult(0, True, 0.0, float("inf"))
    if is_exact(A):
        return RankResult(int(_to_sympy(A).rank()), True, 0.0, float("inf"))
    s = scipy.linalg.svdvals(A)
    if s[0] == 0.0:
        return RankResult(0, True, 0.0, float("inf"))
    thr = tol.eps * max(A.shape) * max(s[0], scale)
    r = int(np.sum(s > thr))
    ambiguous = np.any((s > thr / tol.gap) & (s < thr * tol.gap))
    kept = s[:r]
    dropped = s[r:]
    lo = kept[-1] / thr if r else float("inf")
    hi = thr / dropped[0] if dropped.size and dropped[0] > 0 else float("inf")
    return RankResult(r, not bool(ambiguous), float(thr), float(min(lo, hi)))


def null_space(A, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> tuple[np.ndarray, bool]:
    """Basis of the right kernel as columns, plus the conclusiveness flag.

    Float bases are Euclidean-orthonormal; exact bases are rational.
    """
    A = np.asarray(A)
    ncols = A.shape[1]
    if is_exact(A):
        if A.shape[0] == 0:
            return eye(ncols, exact=True), True
        vecs = _to_sympy(A).nullspace()
        if not vecs:
            return zeros((ncols, 0), exact=True), True
        return _from_sympy(sympy.Matrix.hstack(*vecs)), True
    if A.shape[0] == 0 or A.size == 0:
        return np.eye(ncols), True
    r = rank(A, tol, scale)
    _, _, vh = scipy.linalg.svd(A, full_matrices=True)
    return vh[r.rank:].conj().T.copy(), r.conclusive


def col_space(A, tol: Tolerances = DEFAULT_TOL, floor: float = 0.0,
              scale: float = 0.0) -> tuple[np.ndarray, bool]:
    """Basis of the column space.

    ``floor`` is an absolute singular-value cutoff applied on top of the
    relative threshold; it drops round-off that carries no real direction.
    """
    A = np.asarray(A)
    if is_exact(A):
        if A.size == 0:
            return zeros((A.shape[0], 0), exact=True), True
        M = _to_sympy(A)
        _, pivots = M.rref()
        return A[:, list(pivots)].copy(), True
    if A.size == 0:
        return np.zeros((A.shape[0], 0)), True
    r = rank(A, tol, scale)
    u, sv, _ = scipy.linalg.svd(A, full_matrices=False)
    keep = min(r.rank, int(np.sum(sv > floor)))
    ok = r.conclusive and not np.any((sv > floor / tol.gap) & (sv < floor * tol.gap))
    return u[:, :keep].copy(), bool(ok)


def hstack(blocks, nrows: int, exact: bool) -> np.ndarray:
    blocks = [b for b in blocks if b.shape[1] > 0]
    if not blocks:
        return zeros((nrows, 0), exact)
    return np.hstack(blocks)


def intersect(U, V, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, bool]:
    """Basis of span(U) ∩ span(V); both inputs must have independent columns."""
    exact = is_exact(U) or is_exact(V)
    if U.shape[1] == 0 or V.shape[1] == 0:
        return zeros((U.shape[0], 0), exact), True
    K, ok = null_space(np.hstack([U, -V]), tol)
    basis = U @ K[: U.shape[1]]
    if exact:
        return basis, ok
    B, ok2 = col_space(basis, tol)
    return B, ok and ok2


def restrict_kernel(A, B, tol: Tolerances = DEFAULT_TOL,
                    scale: float = 0.0) -> tuple[np.ndarray, bool]:
    """Kernel of A restricted to span(B), returned in ambient coordinates."""
    exact = is_exact(A) or is_exact(B)
    if B.shape[1] == 0:
        return zeros((B.shape[0], 0), exact), True
    if A.shape[0] == 0:
        return B.copy(), True
    # A @ B is judged against the factor sizes, not its own (possibly round-off) norm
    bscale = 0.0 if exact else max(scale, opnorm(A)) * opnorm(B)
    K, ok = null_space(A @ B, tol, bscale)
    return B @ K, ok


def inv(G) -> np.ndarray:
    if is_exact(G):
        return _from_sympy(_to_sympy(G).inv())
    return scipy.linalg.inv(G)


def gram_orthonormalize(B, G) -> np.ndarray:
    """Columns of B made G-orthonormal (float only)."""
    if B.shape[1] == 0:
        return B
    S = B.T @ G @ B
    S = (S + S.T) / 2
    w, v = scipy.linalg.eigh(S)
    return B @ v @ np.diag(1.0 / np.sqrt(w)) @ v.T
