"""Exact slot calculus for the operators LL_k^p.

Operators are noncommutative polynomials in the letters d and delta with a
central scalar J and rational coefficients; words are reduced by
d^2 = delta^2 = 0, so every nonzero word alternates.  A
:class:`SlotExpression` holds one such polynomial per slot (Y, Z, W, X) of
a tractor k-form.  The Einstein-scale Laplacian rules for -fl on each slot
are taken as axioms; iterating them from the splitting operator M and
comparing against the closed form is the verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import _linalg as la

D, DELTA = "d", "δ"
SLOTS = ("Y", "Z", "W", "X")
P_CAP = 64


@dataclass(frozen=True, order=True)
class OperatorWord:
    """An alternating word, stored by its first letter and its length."""

    length: int = 0
    first: str = ""

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("negative word length")
        if self.length == 0 and self.first:
            raise ValueError("the empty word has no first letter")
        if self.length and self.first not in (D, DELTA):
            raise ValueError(f"unknown letter {self.first!r}")

    @classmethod
    def parse(cls, text: str) -> "OperatorWord | None":
        letters = _letters(text)
        for a, b in zip(letters, letters[1:]):
            if a == b:
                return None
        return cls(len(letters), letters[0] if letters else "")

    @property
    def last(self) -> str:
        if not self.length:
            return ""
        return self.first if self.length % 2 else _other(self.first)

    @property
    def letters(self) -> str:
        out, cur = [], self.first
        for _ in range(self.length):
            out.append(cur)
            cur = _other(cur)
        return "".join(out)

    @property
    def degree_shift(self) -> int:
        """Net form-degree change: +1 per d, -1 per delta."""
        return sum(1 if c == D else -1 for c in self.letters)

    def __mul__(self, other: "OperatorWord") -> "OperatorWord | None":
        return word_multiply(self, other)

    def __str__(self) -> str:
        return self.letters or "1"


def _other(letter: str) -> str:
    return DELTA if letter == D else D


def _letters(text: str) -> list[str]:
    text = text.replace("delta", DELTA).replace(" ", "")
    if text in ("", "1"):
        return []
    out = []
    for c in text:
        if c not in (D, DELTA):
            raise ValueError(f"unknown letter {c!r} in {text!r}")
        out.append(c)
    return out


EMPTY = OperatorWord()


def word_multiply(a: OperatorWord, b: OperatorWord) -> OperatorWord | None:
    """Concatenation, or None (the zero word) when the join repeats a letter."""
    if not a.length:
        return b
    if not b.length:
        return a
    if a.last == b.first:
        return None
    return OperatorWord(a.length + b.length, a.first)


class OperatorPoly:
    """Finite sum of coeff * J^m * word with exact rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        clean = {}
        for key, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[key] = c
        self.terms = clean

    # constructors
    @classmethod
    def const(cls, c=1) -> "OperatorPoly":
        return cls({(EMPTY, 0): c})

    @classmethod
    def word(cls, text: str, c=1, m: int = 0) -> "OperatorPoly":
        w = OperatorWord.parse(text)
        return cls() if w is None else cls({(w, m): c})

    @classmethod
    def J(cls, power: int = 1) -> "OperatorPoly":
        return cls({(EMPTY, power): 1})

    # algebra
    def __add__(self, other: "OperatorPoly") -> "OperatorPoly":
        other = _lift(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0) + c
        return OperatorPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "OperatorPoly":
        return OperatorPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "OperatorPoly":
        return self + (-_lift(other))

    def __rsub__(self, other) -> "OperatorPoly":
        return _lift(other) - self

    def __mul__(self, other) -> "OperatorPoly":
        if not isinstance(other, OperatorPoly):
            c = Fraction(other)
            return OperatorPoly({k: v * c for k, v in self.terms.items()})
        out: dict = {}
        for (w1, m1), c1 in self.terms.items():
            for (w2, m2), c2 in other.terms.items():
                w = word_multiply(w1, w2)
                if w is None:
                    continue
                key = (w, m1 + m2)
                out[key] = out.get(key, 0) + c1 * c2
        return OperatorPoly(out)

    def __rmul__(self, other) -> "OperatorPoly":
        return self * other

    def __pow__(self, e: int) -> "OperatorPoly":
        out = OperatorPoly.const(1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorPoly):
            other = _lift(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def words(self) -> set:
        return {w for (w, _) in self.terms}

    def degree_shifts(self) -> set:
        return {w.degree_shift for w in self.words()}

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0].letters, kv[0][0].length, kv[0][1]))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (w, m), c in self.sorted_terms():
            parts.append(f"{c} * J^{m} * {w}")
        return " + ".join(parts)

    __repr__ = __str__

    def instantiate(self, cx, k_in: int, J) -> np.ndarray:
        """Matrix of the polynomial acting on degree-``k_in`` vectors of ``cx``."""
        shifts = self.degree_shifts()
        if len(shifts) > 1:
            raise ValueError(f"inhomogeneous degree shifts {sorted(shifts)}")
        shift = shifts.pop() if shifts else 0
        exact = cx.exact
        out = la.zeros((cx.dim(k_in + shift), cx.dim(k_in)), exact)
        Jv = Fraction(J) if exact else float(J)
        for (w, m), c in self.terms.items():
            M = cx.identity(k_in)
            deg = k_in
            for letter in reversed(w.letters):
                if letter == D:
                    M = cx.d(deg) @ M
                    deg += 1
                else:
                    M = cx.delta(deg) @ M
                    deg -= 1
            coef = c * Jv ** m if exact else float(c) * Jv ** m
            out = out + coef * M
        return out


def _lift(x) -> OperatorPoly:
    return x if isinstance(x, OperatorPoly) else OperatorPoly.const(x)


d_ = OperatorPoly.word(D)
delta_ = OperatorPoly.word(DELTA)
J_ = OperatorPoly.J()
ONE = OperatorPoly.const(1)


def P_expanded(n: int, k: int, p: int, E: OperatorPoly) -> OperatorPoly:
    """prod_{i=1}^{p} (E + 2i(n-2k-i+1)J/n) expanded; 1 for p <= 0."""
    out = ONE
    for i in range(1, p + 1):
        out = out * (E + J_ * Fraction(2 * i * (n - 2 * k - i + 1), n))
    return out


@dataclass(frozen=True)
class SlotExpression:
    """Slot coefficients for a tractor k-form built from a k-form input."""

    n: int
    k: int
    Y: OperatorPoly
    Z: OperatorPoly
    W: OperatorPoly
    X: OperatorPoly
    p: int = 0

    @classmethod
    def zero(cls, n: int, k: int, p: int = 0) -> "SlotExpression":
        z = OperatorPoly()
        return cls(n, k, z, z, z, z, p)

    def slots(self) -> dict:
        return {s: getattr(self, s) for s in SLOTS}

    def __add__(self, other: "SlotExpression") -> "SlotExpression":
        return SlotExpression(self.n, self.k, self.Y + other.Y, self.Z + other.Z,
                              self.W + other.W, self.X + other.X, self.p)

    def scale(self, c: OperatorPoly) -> "SlotExpression":
        """Left-multiply every slot by a central polynomial such as c*J."""
        return SlotExpression(self.n, self.k, c * self.Y, c * self.Z, c * self.W, c * self.X, self.p)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SlotExpression) and (self.n, self.k) == (other.n, other.k)
                and all(self.slots()[s] == other.slots()[s] for s in SLOTS))

    def __sub__(self, other: "SlotExpression") -> "SlotExpression":
        return self + other.scale(OperatorPoly.const(-1))

    def check_degrees(self) -> None:
        """Y, X carry (k-1)-forms, Z a k-form and W a (k-2)-form."""
        want = {"Y": -1, "Z": 0, "W": -2, "X": -1}
        for s, poly in self.slots().items():
            bad = poly.degree_shifts() - {want[s]}
            if bad:
                raise ValueError(f"slot {s} has degree shifts {sorted(bad)}")

    def __str__(self) -> str:
        return "\n".join(f"{s}: {poly}" for s, poly in self.slots().items())


def check_validity(n: int, k: int) -> None:
    if k < 1:
        raise ValueError("slot rules need k >= 1")
    if n == 4 and k != 1:
        raise ValueError("the Laplacian rules hold for n = 4 only when k = 1")
    if n < 4 or n % 2:
        raise ValueError("n must be even and >= 4")


def apply_neg_fl(expr: SlotExpression) -> SlotExpression:
    """Apply -fl slot by slot (Einstein scale)."""
    n, k = expr.n, expr.k
    check_validity(n, k)
    F = Fraction
    lap = delta_ * d_ + d_ * delta_
    cY = 1 - F(2 * (k - 1) * (n - k + 1), n)
    Y, Z, W, X = expr.Y, expr.Z, expr.W, expr.X
    zero = OperatorPoly()
    nY, nZ, nW, nX = zero, zero, zero, zero
    # -fl Y tau
    nY += (lap + J_ * cY) * Y
    nZ += J_ * F(-2, n * k) * d_ * Y
    nW += J_ * F(2 * (k - 1), n) * delta_ * Y
    nX += J_ ** 2 * F(n - 2 * k + 2, n * n) * Y
    # -fl Z mu
    nY += F(-2 * k) * delta_ * Z
    nZ += (lap - J_ * F(2 * k * (n - k - 1), n)) * Z
    nX += J_ * F(-2 * k, n) * delta_ * Z
    # -fl W nu (the Y and X images need k >= 2; W stays empty otherwise)
    if not W.is_zero():
        nY += F(2, k - 1) * d_ * W
        nW += (lap - J_ * F(2 * (k - 3) * (n - k + 2), n)) * W
        nX += J_ * F(-2, n * (k - 1)) * d_ * W
    # -fl X rho
    nY += F(n - 2 * k + 2) * X
    nW += F(-2 * (k - 1)) * delta_ * X
    nZ += F(-2, k) * d_ * X
    nX += (lap + J_ * cY) * X
    return SlotExpression(n, k, nY, nZ, nW, nX, expr.p)


def apply_M(n: int, k: int) -> SlotExpression:
    """Splitting operator: Z = (n-2k)/k, X = delta."""
    if k < 1:
        raise ValueError("M is defined for k >= 1")
    if not k <= n // 2:
        raise ValueError("need k <= n/2")
    z = OperatorPoly()
    return SlotExpression(n, k, z, ONE * Fraction(n - 2 * k, k), z, delta_, 0)


def step_scalar(n: int, k: int, q: int) -> Fraction:
    """Shift 2(k+q)(n-k-q-1)/n taking LL^q to LL^{q+1}."""
    return Fraction(2 * (k + q) * (n - k - q - 1), n)


def iterate_LL(n: int, k: int, p: int, cap: int = P_CAP) -> SlotExpression:
    if p < 0:
        raise ValueError("p must be >= 0")
    if p > cap:
        raise ValueError(f"p = {p} exceeds cap {cap}")
    expr = apply_M(n, k)
    if p:
        check_validity(n, k)
    for q in range(p):
        nxt = apply_neg_fl(expr) + expr.scale(J_ * step_scalar(n, k, q))
        expr = SlotExpression(n, k, nxt.Y, nxt.Z, nxt.W, nxt.X, q + 1)
    return expr


def closed_form_LL(n: int, k: int, p: int) -> SlotExpression:
    if p < 1:
        raise ValueError("closed form is stated for p >= 1")
    F = Fraction
    dd = d_ * delta_
    ddl = delta_ * d_
    Pk = P_expanded(n, k, p - 1, dd)
    Pk1 = P_expanded(n, k + 1, p - 1, ddl)
    Y = delta_ * Pk * F(-p * (n - 2 * k - 2 * p))
    Z = (dd * Pk * F(n - 2 * k - 2 * p) + ddl * Pk1 * F(n - 2 * k)) * F(1, k)
    X = delta_ * (dd + J_ * F(p * (n - 2 * k + 2), n)) * Pk
    return SlotExpression(n, k, Y, Z, OperatorPoly(), X, p)


@dataclass
class FormulaVerdict:
    n: int
    k: int
    p: int
    equal: bool
    difference: SlotExpression

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "p": self.p, "equal": self.equal,
                "difference": {s: str(v) for s, v in self.difference.slots().items()}}


def verify_formula(n: int, k: int, p: int, cap: int = P_CAP) -> FormulaVerdict:
    check_validity(n, k)
    if p < 1:
        raise ValueError("p must be >= 1")
    it = iterate_LL(n, k, p, cap)
    it.check_degrees()
    cf = closed_form_LL(n, k, p)
    diff = it - cf
    return FormulaVerdict(n, k, p, diff == SlotExpression.zero(n, k), diff)


def LLk_pair(n: int, k: int) -> tuple[OperatorPoly, OperatorPoly]:
    """((2p/k) delta d P^{p-1}_{k+1}[delta d], delta P^p_k[d delta]) at p = (n-2k)/2."""
    p = (n - 2 * k) // 2
    Z = delta_ * d_ * P_expanded(n, k + 1, p - 1, delta_ * d_) * Fraction(2 * p, k)
    X = delta_ * P_expanded(n, k, p, d_ * delta_)
    return Z, X


def operator_polys(n: int, k: int) -> dict:
    """Q_k, G_k (both orders), L_k (both orders) built from the factored products."""
    p = (n - 2 * k) // 2
    dd, ddl = d_ * delta_, delta_ * d_
    Q = P_expanded(n, k, p, dd)
    out = {
        "Q": Q,
        "G": delta_ * Q,
        "G_inner": P_expanded(n, k, p, ddl) * delta_,
    }
    if 2 * k < n:
        Q1 = P_expanded(n, k + 1, p - 1, dd)
        out["L"] = delta_ * Q1 * d_
        out["L_inner"] = ddl * P_expanded(n, k + 1, p - 1, ddl)
        out["Q_next"] = Q1
    else:
        out["L"] = OperatorPoly()
        out["L_inner"] = OperatorPoly()
    return out


@dataclass
class OperatorFormulas:
    n: int
    k: int
    G: OperatorPoly
    Q: OperatorPoly
    L: OperatorPoly
    checks: dict


def extract_operator_formulas(n: int, k: int, cap: int = P_CAP) -> OperatorFormulas:
    """Read G_k off the X slot at the critical weight and check the companions."""
    check_validity(n, k)
    p = (n - 2 * k) // 2
    if p == 0:
        slots = iterate_LL(n, k, 0, cap)
    else:
        slots = closed_form_LL(n, k, p)
    polys = operator_polys(n, k)
    G = slots.X
    checks = {}
    if p:
        factor = d_ * delta_ + J_ * Fraction(p * (n - 2 * k + 2), n)
        ith = d_ * delta_ + J_ * Fraction(2 * p * (n - 2 * k - p + 1), n)
        checks["absorbed factor"] = factor == ith
        checks["critical weight iterate"] = iterate_LL(n, k, p, cap) == slots
    checks["G = delta Q"] = G == polys["G"]
    checks["G intertwines"] = polys["G"] == polys["G_inner"]
    checks["L = delta Q_{k+1} d"] = (
        polys["L"] == delta_ * polys["Q_next"] * d_ if "Q_next" in polys else polys["L"].is_zero())
    checks["L intertwines"] = polys["L"] == polys["L_inner"]
    checks["d Q d = 0"] = (d_ * polys["Q"] * d_).is_zero()
    return OperatorFormulas(n, k, G, polys["Q"], polys["L"], checks)


def admissible(ns: Iterable[int] = (4, 6, 8, 10, 12)):
    """(n, k) pairs where the slot rules hold."""
    for n in ns:
        for k in range(1, n // 2 + 1):
            if n == 4 and k != 1:
                continue
            yield n, k
