"""Factored operator polynomials and their spectral projectors.

Everything here is generic over the scalar field: pass ints or
``Fraction`` values (and object arrays) for exact work, floats otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from . import _linalg as la

Scalar = Union[int, float, Fraction]
Operator = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _scale(c: Scalar, J: Scalar) -> Scalar:
    if isinstance(J, float):
        return float(c) * J
    return Fraction(c) * Fraction(J)


@dataclass(frozen=True)
class DetourContext:
    """Scalar frame (n, k, J) of an Einstein scale; ``p = (n - 2k)/2``."""

    n: int
    k: int
    J: Scalar = 1

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ValueError(f"n must be even and >= 4, got {self.n}")
        if not 0 <= self.k <= self.n // 2:
            raise ValueError(f"k must lie in [0, {self.n // 2}], got {self.k}")

    @property
    def p(self) -> int:
        return (self.n - 2 * self.k) // 2

    @property
    def exact(self) -> bool:
        return not isinstance(self.J, float)

    def shift(self, i: int, degree: int | None = None) -> Scalar:
        """The positive shift 2i(n-2k-i+1)J/n, i.e. minus lambda_i at ``degree``."""
        k = self.k if degree is None else degree
        return _scale(Fraction(2 * i * (self.n - 2 * k - i + 1), self.n), self.J)

    def lam(self, i: int, degree: int | None = None) -> Scalar:
        return -self.shift(i, degree)

    def lambdas(self, degree: int | None = None, count: int | None = None) -> list:
        """lambda_1 .. lambda_count at ``degree`` (defaults: this k, count p)."""
        k = self.k if degree is None else degree
        if count is None:
            count = (self.n - 2 * k) // 2
        return [self.lam(i, k) for i in range(1, count + 1)]

    def lambdas_next(self) -> list:
        """lambda_i^{k+1} for i = 1 .. p-1, the shifts inside L_k."""
        return self.lambdas(self.k + 1, self.p - 1)


def lambda_scalars(ctx: DetourContext) -> list:
    return ctx.lambdas()


def check_distinct(ctx: DetourContext) -> tuple[bool, tuple[int, int] | None]:
    """Pairwise distinctness of lambda_1^k .. lambda_p^k.

    Returns ``(ok, witness)`` where the witness is a colliding pair of
    1-based indices, or the index of a non-negative value when J > 0.
    """
    if ctx.J == 0:
        raise ValueError("J = 0: every lambda vanishes; use the Ricci-flat branch")
    lams = ctx.lambdas()
    for i in range(len(lams)):
        for j in range(i + 1, len(lams)):
            if lams[i] == lams[j]:
                return False, (i + 1, j + 1)
    if ctx.J > 0:
        for i, v in enumerate(lams):
            if v >= 0:
                return False, (i + 1, i + 1)
    return True, None


@dataclass(frozen=True)
class FactoredPolynomial:
    """prod_i (E + c_i); an empty shift list is the identity."""

    shifts: tuple = ()

    def __init__(self, shifts: Sequence[Scalar] = ()):
        object.__setattr__(self, "shifts", tuple(shifts))

    @property
    def degree(self) -> int:
        return len(self.shifts)

    def apply(self, E: Operator, f: np.ndarray) -> np.ndarray:
        return apply_P(self, E, f)

    def matrix(self, E: np.ndarray) -> np.ndarray:
        return apply_P(self, E, la.eye(E.shape[0], la.is_exact(E)))


def P_poly(n: int, k: int, p: int, J: Scalar) -> FactoredPolynomial:
    """prod_{i=1}^{p} (E + 2i(n-2k-i+1)J/n); identity for p <= 0."""
    return FactoredPolynomial(
        [_scale(Fraction(2 * i * (n - 2 * k - i + 1), n), J) for i in range(1, p + 1)])


def _as_callable(E: Operator, f: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    if callable(E):
        return E
    E = np.asarray(E)
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise ValueError(f"operator must be square, got shape {E.shape}")
    if E.shape[1] != f.shape[0]:
        raise ValueError(f"dimension mismatch: operator {E.shape}, vector {f.shape}")
    return lambda v: E @ v


def apply_P(poly: FactoredPolynomial, E: Operator, f: np.ndarray) -> np.ndarray:
    """Apply the factors one at a time to ``f`` (a vector or column block)."""
    f = np.asarray(f)
    op = _as_callable(E, f)
    out = f.copy()
    for c in poly.shifts:
        out = op(out) + la.coerce_scalar(c, out) * out
    return out


@dataclass(frozen=True)
class ProjectorSet:
    eigenvalues: tuple
    coefficients: tuple
    matrices: tuple = field(repr=False)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.matrices[i]


def _check_eigs(eigs: Sequence[Scalar]) -> None:
    for i in range(len(eigs)):
        for j in range(i + 1, len(eigs)):
            if eigs[i] == eigs[j]:
                raise ValueError(f"repeated eigenvalue {eigs[i]!r} at positions {(i, j)}")


def projectors(eigs: Sequence[Scalar], E: np.ndarray) -> ProjectorSet:
    """Proj_i = y_i prod_{j != i} (E - lambda_j), y_i = prod_{j != i} 1/(lambda_i - lambda_j)."""
    eigs = list(eigs)
    _check_eigs(eigs)
    E = np.asarray(E)
    exact = la.is_exact(E)
    I = la.eye(E.shape[0], exact)
    coeffs, mats = [], []
    for i, li in enumerate(eigs):
        y = Fraction(1) if exact else 1.0
        M = I.copy()
        for j, lj in enumerate(eigs):
            if j == i:
                continue
            y = y / (la.coerce_scalar(li, I) - la.coerce_scalar(lj, I))
            M = (E - la.coerce_scalar(lj, I) * I) @ M
        coeffs.append(y)
        mats.append(y * M)
    return ProjectorSet(tuple(eigs), tuple(coeffs), tuple(mats))


def annihilator(eigs: Sequence[Scalar], E: np.ndarray) -> np.ndarray:
    """Matrix of prod_i (E - lambda_i)."""
    return FactoredPolynomial([-c for c in eigs]).matrix(np.asarray(E))


def decompose_null(eigs: Sequence[Scalar], E: np.ndarray, null_basis: np.ndarray,
                   tol: la.Tolerances = la.DEFAULT_TOL) -> list[np.ndarray]:
    """Split the solution space of prod (E - lambda_i) into eigenspace bases.

    ``null_basis`` must span that solution space; it is checked first.
    """
    E = np.asarray(E)
    B = np.asarray(null_basis)
    exact = la.is_exact(E) or la.is_exact(B)
    P = annihilator(eigs, E)
    if B.shape[1] and not la.is_zero(P @ B, tol.tau * max(1.0, la.opnorm(P)) * la.norm(B)):
        raise ValueError("basis does not lie in the null space of the polynomial")
    projs = projectors(eigs, E)
    out = []
    for lam, Pr in zip(eigs, projs.matrices):
        if B.shape[1] == 0:
            out.append(la.zeros((E.shape[0], 0), exact))
            continue
        # the true projection of a spanning set has order-one singular values
        V, _ = la.col_space(Pr @ B, tol, floor=0.0 if exact else np.sqrt(tol.tau) * la.opnorm(B))
        if not exact and V.shape[1]:
            res = np.linalg.norm(E @ V - float(lam) * V, axis=0)
            if np.any(res > tol.tau * max(1.0, la.opnorm(E))):
                raise ValueError(f"projected vectors are not eigenvectors for {lam!r}")
        out.append(V)
    return out
