"""Finite-dimensional cochain complexes with inner products.

A :class:`ChainComplex` carries differentials ``d_j`` (degree j -> j+1) and
optional Gram matrices.  The codifferential is the Gram adjoint of ``d``.
Generators build random, prescribed-spectrum and flat-torus complexes.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb
from typing import Sequence

import numpy as np

from . import _linalg as la

DIM_CAP = 2000

TAGS = ("ddelta", "deltad")


def make_rng(seed: int | None) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=0 if seed is None else int(seed)))


@dataclass(frozen=True, eq=False)
class ChainComplex:
    n: int
    dims: tuple
    differentials: tuple
    grams: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        dims = tuple(int(x) for x in self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "differentials", tuple(np.asarray(a) for a in self.differentials))
        if self.grams is not None:
            object.__setattr__(self, "grams", tuple(np.asarray(g) for g in self.grams))
        if len(dims) != self.n + 1:
            raise ValueError(f"need {self.n + 1} dimensions, got {len(dims)}")
        if len(self.differentials) != self.n:
            raise ValueError(f"need {self.n} differentials, got {len(self.differentials)}")
        for j, D in enumerate(self.differentials):
            if D.shape != (dims[j + 1], dims[j]):
                raise ValueError(f"d_{j} has shape {D.shape}, expected {(dims[j + 1], dims[j])}")
        if self.grams is not None:
            for j, G in enumerate(self.grams):
                if G.shape != (dims[j], dims[j]):
                    raise ValueError(f"Gram {j} has shape {G.shape}")
                if not la.is_zero(G - G.T, 1e-12 * max(1.0, la.norm(G))):
                    raise ValueError(f"Gram {j} is not symmetric")
                if dims[j] and np.linalg.eigvalsh(G.astype(float)).min() <= 0:
                    raise ValueError(f"Gram {j} is not positive definite")
        for j in range(self.n - 1):
            dd = self.differentials[j + 1] @ self.differentials[j]
            scale = la.norm(self.differentials[j + 1]) * la.norm(self.differentials[j])
            if not la.is_zero(dd, 1e-12 * scale):
                raise ValueError(f"d_{j + 1} d_{j} != 0 (norm {la.norm(dd):.3e})")

    @property
    def exact(self) -> bool:
        if any(la.is_exact(D) for D in self.differentials):
            return True
        return self.grams is not None and any(la.is_exact(G) for G in self.grams)

    def dim(self, j: int) -> int:
        return self.dims[j] if 0 <= j <= self.n else 0

    def d(self, j: int) -> np.ndarray:
        """d_j : degree j -> j+1 (zero map outside the stored range)."""
        if 0 <= j < self.n:
            return self.differentials[j]
        return la.zeros((self.dim(j + 1), self.dim(j)), self.exact)

    def gram(self, j: int) -> np.ndarray:
        if self.grams is None:
            return la.eye(self.dim(j), self.exact)
        return self.grams[j] if 0 <= j <= self.n else la.eye(0, self.exact)

    @cached_property
    def _gram_inv(self) -> tuple:
        if self.grams is None:
            return tuple(la.eye(m, self.exact) for m in self.dims)
        return tuple(la.inv(G) for G in self.grams)

    def gram_inv(self, j: int) -> np.ndarray:
        return self._gram_inv[j] if 0 <= j <= self.n else la.eye(0, self.exact)

    @cached_property
    def _deltas(self) -> tuple:
        out = []
        for k in range(self.n + 1):
            if k == 0:
                out.append(la.zeros((0, self.dim(0)), self.exact))
            else:
                out.append(self.gram_inv(k - 1) @ self.d(k - 1).T @ self.gram(k))
        return tuple(out)

    def delta(self, k: int) -> np.ndarray:
        """delta_k : degree k -> k-1."""
        if 0 <= k <= self.n:
            return self._deltas[k]
        return la.zeros((self.dim(k - 1), self.dim(k)), self.exact)

    def ddelta(self, k: int) -> np.ndarray:
        """d delta on degree k."""
        return self.d(k - 1) @ self.delta(k)

    def deltad(self, k: int) -> np.ndarray:
        """delta d on degree k."""
        return self.delta(k + 1) @ self.d(k)

    def laplacian(self, k: int) -> np.ndarray:
        return self.ddelta(k) + self.deltad(k)

    def op(self, tag: str, k: int) -> np.ndarray:
        if tag == "ddelta":
            return self.ddelta(k)
        if tag == "deltad":
            return self.deltad(k)
        raise ValueError(f"unknown operator tag {tag!r}")

    def inner(self, k: int, x: np.ndarray, y: np.ndarray):
        return x.T @ self.gram(k) @ y

    def identity(self, k: int) -> np.ndarray:
        return la.eye(self.dim(k), self.exact)


def codifferential(cx: ChainComplex, k: int) -> np.ndarray:
    if not 1 <= k <= cx.n:
        raise ValueError(f"degree {k} out of range 1..{cx.n}")
    return cx.delta(k)


@dataclass(frozen=True)
class SpectralSubspace:
    degree: int
    tag: str
    eigenvalue: object
    basis: np.ndarray
    kind: str

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _kind(tag: str, lam) -> str:
    if lam == 0:
        return "harmonic" if tag == "harmonic" else ("kernel-ddelta" if tag == "ddelta" else "kernel-deltad")
    return "exact" if tag == "ddelta" else "coexact"


def eigenspace(cx: ChainComplex, k: int, tag: str, lam,
               tol: la.Tolerances = la.DEFAULT_TOL) -> SpectralSubspace:
    """The lam-eigenspace of d delta or delta d on degree k.

    Float bases are orthonormal for the Gram inner product; exact bases are
    rational kernel bases of (E - lam).
    """
    E = cx.op(tag, k)
    m = cx.dim(k)
    if cx.exact:
        basis, _ = la.null_space(E - Fraction(lam) * la.eye(m, True), tol)
        return SpectralSubspace(k, tag, lam, basis, _kind(tag, lam))
    if m == 0:
        return SpectralSubspace(k, tag, lam, np.zeros((0, 0)), _kind(tag, lam))
    import scipy.linalg

    G = cx.gram(k)
    A = G @ E
    A = (A + A.T) / 2
    w, V = scipy.linalg.eigh(A, G)
    scale = max(1.0, float(np.max(np.abs(w))))
    sel = np.abs(w - float(lam)) <= tol.tau * scale
    return SpectralSubspace(k, tag, lam, V[:, sel].copy(), _kind(tag, lam))


def closed_forms(cx: ChainComplex, k: int, tol: la.Tolerances = la.DEFAULT_TOL):
    return la.null_space(cx.d(k), tol)


def harmonic_basis(cx: ChainComplex, k: int, tol: la.Tolerances = la.DEFAULT_TOL):
    A = np.vstack([cx.d(k), cx.delta(k)])
    B, ok = la.null_space(A, tol)
    if not cx.exact:
        B = la.gram_orthonormalize(B, cx.gram(k))
    return B, ok


def hodge_decompose(cx: ChainComplex, k: int, tol: la.Tolerances = la.DEFAULT_TOL):
    """(exact, coexact, harmonic) bases at degree k."""
    ex, _ = la.col_space(cx.d(k - 1), tol)
    co, _ = la.col_space(cx.delta(k + 1), tol)
    har, _ = harmonic_basis(cx, k, tol)
    if not cx.exact:
        ex = la.gram_orthonormalize(ex, cx.gram(k))
        co = la.gram_orthonormalize(co, cx.gram(k))
    return ex, co, har


def betti(cx: ChainComplex, k: int, tol: la.Tolerances = la.DEFAULT_TOL) -> int:
    ker = cx.dim(k) - la.rank(cx.d(k), tol).rank
    return ker - la.rank(cx.d(k - 1), tol).rank


# -- generators ---------------------------------------------------------------

def _check_budget(n: int, spectra, extra_dims) -> list[int]:
    if len(spectra) != n:
        raise ValueError(f"need {n} spectra (one per differential), got {len(spectra)}")
    if len(extra_dims) != n + 1:
        raise ValueError(f"need {n + 1} extra dimensions, got {len(extra_dims)}")
    dims = []
    for j in range(n + 1):
        s_in = len(spectra[j - 1]) if j > 0 else 0
        s_out = len(spectra[j]) if j < n else 0
        if extra_dims[j] < 0:
            raise ValueError(f"negative harmonic budget at degree {j}")
        dims.append(s_in + s_out + extra_dims[j])
    if max(dims) > DIM_CAP:
        raise ValueError(f"dimension {max(dims)} exceeds cap {DIM_CAP}")
    return dims


def _orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    if m == 0:
        return np.zeros((0, 0))
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    return q * np.sign(np.diag(r))


def build_prescribed(n: int, spectra: Sequence[Sequence[float]], extra_dims: Sequence[int],
                     seed: int | None = 0) -> ChainComplex:
    """Complex whose d_j has exactly the singular values ``spectra[j]``.

    Each degree gets a random orthonormal frame split into an image block
    (for d_{j-1}), a coimage block (for d_j) and ``extra_dims[j]`` harmonic
    directions, so delta d at degree j has nonzero spectrum
    {s**2 : s in spectra[j]}.
    """
    dims = _check_budget(n, spectra, extra_dims)
    rng = make_rng(seed)
    frames = [_orthogonal(m, rng) for m in dims]
    ds = []
    for j in range(n):
        s = np.asarray(spectra[j], dtype=float)
        if np.any(s <= 0):
            raise ValueError("singular values must be positive")
        s_in = len(spectra[j - 1]) if j > 0 else 0
        coimg = frames[j][:, s_in:s_in + len(s)]
        img = frames[j + 1][:, :len(s)]
        ds.append(img @ np.diag(s) @ coimg.T if len(s) else np.zeros((dims[j + 1], dims[j])))
    meta = {"generator": "prescribed", "seed": seed,
            "spectra": [[float(x) for x in s] for s in spectra],
            "extra_dims": list(extra_dims)}
    return ChainComplex(n, dims, ds, None, meta)


def build_prescribed_exact(n: int, eigenvalues: Sequence[Sequence], extra_dims: Sequence[int]) -> ChainComplex:
    """Rational counterpart of :func:`build_prescribed`.

    Differentials are 0/1 coordinate maps and the Gram matrices are
    diagonal, with weight ``lam`` on each image coordinate, so that
    delta d has eigenvalue ``lam`` exactly.  ``eigenvalues[j]`` lists the
    nonzero spectrum of delta d at degree j (squared singular values).
    """
    dims = _check_budget(n, eigenvalues, extra_dims)
    ds, grams = [], []
    for j in range(n + 1):
        g = [Fraction(1)] * dims[j]
        if j > 0:
            for a, lam in enumerate(eigenvalues[j - 1]):
                if Fraction(lam) <= 0:
                    raise ValueError("eigenvalues must be positive")
                g[a] = Fraction(lam)
        G = la.zeros((dims[j], dims[j]), True)
        for a in range(dims[j]):
            G[a, a] = g[a]
        grams.append(G)
    for j in range(n):
        D = la.zeros((dims[j + 1], dims[j]), True)
        s_in = len(eigenvalues[j - 1]) if j > 0 else 0
        for a in range(len(eigenvalues[j])):
            D[a, s_in + a] = Fraction(1)
        ds.append(D)
    meta = {"generator": "prescribed-exact",
            "eigenvalues": [[str(Fraction(x)) for x in s] for s in eigenvalues],
            "extra_dims": list(extra_dims)}
    return ChainComplex(n, dims, ds, grams, meta)


def _scramble(cx: ChainComplex, rng: np.random.Generator, strength: float) -> ChainComplex:
    """Change basis by random well-conditioned T_j; the result is isometric."""
    Ts = []
    for m in cx.dims:
        T = np.eye(m) + strength * rng.standard_normal((m, m)) / max(1.0, np.sqrt(m))
        Ts.append(T)
    ds = [np.linalg.solve(Ts[j + 1], cx.d(j) @ Ts[j]) for j in range(cx.n)]
    grams = [T.T @ cx.gram(j) @ T for j, T in enumerate(Ts)]
    return ChainComplex(cx.n, cx.dims, ds, grams, dict(cx.meta, scrambled=strength))


def build_random(n: int, dims: Sequence[int] | None = None, seed: int | None = 0,
                 smin: float = 0.5, smax: float = 3.0, gram: bool = True) -> ChainComplex:
    """Random complex with random ranks, random singular values and, by
    default, random positive-definite Gram matrices."""
    rng = make_rng(seed)
    if dims is None:
        dims = [int(x) for x in rng.integers(3, 9, size=n + 1)]
    dims = list(dims)
    if len(dims) != n + 1:
        raise ValueError(f"need {n + 1} dimensions")
    spectra, used_in = [], 0
    for j in range(n):
        room_src = dims[j] - used_in
        r = int(rng.integers(0, min(room_src, dims[j + 1]) + 1))
        spectra.append(list(rng.uniform(smin, smax, size=r)))
        used_in = r
    extra = []
    for j in range(n + 1):
        s_in = len(spectra[j - 1]) if j > 0 else 0
        s_out = len(spectra[j]) if j < n else 0
        extra.append(dims[j] - s_in - s_out)
    cx = build_prescribed(n, spectra, extra, seed=int(rng.integers(0, 2**63)))
    if gram:
        cx = _scramble(cx, rng, 0.3)
    meta = {"generator": "random", "seed": seed, "dims": dims, "gram": gram}
    return ChainComplex(cx.n, cx.dims, cx.differentials, cx.grams, meta)


def _wedge_sign(j: int, I: tuple) -> tuple[int, tuple] | None:
    """dx^j ^ dx^I = sign * dx^{I + j sorted}, or None when j is in I."""
    if j in I:
        return None
    before = sum(1 for i in I if i < j)
    return (-1) ** before, tuple(sorted(I + (j,)))


def build_torus(n: int, M: int) -> ChainComplex:
    """Real Fourier truncation of the flat n-torus with |m_i| <= M.

    The trigonometric basis is {1} and {sqrt(2) cos(m.x), sqrt(2) sin(m.x)}
    over one representative m of each pair {m, -m}; it is orthonormal, so
    every Gram is the identity.
    """
    if n < 4 or n % 2:
        raise ValueError("n must be even and >= 4")
    if M < 1:
        raise ValueError("cutoff M must be >= 1")
    nmodes = (2 * M + 1) ** n
    dims = [nmodes * comb(n, k) for k in range(n + 1)]
    if max(dims) > DIM_CAP:
        raise ValueError(f"torus dimension {max(dims)} exceeds cap {DIM_CAP}")
    # each real mode: (frequency vector, kind) with kind 0 = const/cos, 1 = sin
    reps = []
    for m in itertools.product(range(-M, M + 1), repeat=n):
        if any(m):
            first = next(x for x in m if x)
            if first > 0:
                reps.append(m)
    modes = [((0,) * n, 0)]
    for m in reps:
        modes.append((m, 0))
        modes.append((m, 1))
    mode_index = {mk: i for i, mk in enumerate(modes)}
    subsets = [list(itertools.combinations(range(n), k)) for k in range(n + 1)]
    subset_index = [{I: i for i, I in enumerate(s)} for s in subsets]
    ds = []
    for k in range(n):
        D = np.zeros((dims[k + 1], dims[k]))
        nk, nk1 = len(subsets[k]), len(subsets[k + 1])
        for (m, kind), mi in mode_index.items():
            if not any(m):
                continue
            # d/dx_j cos = -m_j sin ; d/dx_j sin = m_j cos
            target = mode_index[(m, 1 - kind)]
            for I, ii in subset_index[k].items():
                col = mi * nk + ii
                for j in range(n):
                    if m[j] == 0:
                        continue
                    ws = _wedge_sign(j, I)
                    if ws is None:
                        continue
                    sign, K = ws
                    coef = -m[j] if kind == 0 else m[j]
                    D[target * nk1 + subset_index[k + 1][K], col] += sign * coef
        ds.append(D)
    meta = {"generator": "torus", "n": n, "M": M}
    return ChainComplex(n, dims, ds, None, meta)


def torus_mode_norms(n: int, M: int) -> np.ndarray:
    """|m|^2 per real mode, in the basis order used by :func:`build_torus`."""
    out = [0]
    for m in itertools.product(range(-M, M + 1), repeat=n):
        if any(m) and next(x for x in m if x) > 0:
            out.extend([sum(x * x for x in m)] * 2)
    return np.array(out)


# -- file format --------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return repr(float(v))


def _triplets(A: np.ndarray) -> list:
    out = []
    for (i, j), v in np.ndenumerate(A):
        if v != 0:
            out.append([int(i), int(j), _fmt(v)])
    return out


def to_document(cx: ChainComplex) -> dict:
    doc = {
        "n": cx.n,
        "dims": list(cx.dims),
        "field": "rational" if cx.exact else "float",
        "d": [_triplets(D) for D in cx.differentials],
        "meta": cx.meta,
    }
    if cx.grams is not None:
        doc["gram"] = [_triplets(G) for G in cx.grams]
    return doc


def from_document(doc: dict) -> ChainComplex:
    n = int(doc["n"])
    dims = [int(x) for x in doc["dims"]]
    exact = doc.get("field", "float") == "rational"
    parse = Fraction if exact else float

    def fill(shape, trip):
        A = la.zeros(shape, exact)
        for i, j, v in trip:
            A[int(i), int(j)] = parse(v)
        return A

    ds = [fill((dims[j + 1], dims[j]), doc["d"][j]) for j in range(n)]
    grams = None
    if doc.get("gram") is not None:
        grams = [fill((dims[j], dims[j]), doc["gram"][j]) for j in range(n + 1)]
    return ChainComplex(n, dims, ds, grams, doc.get("meta", {}))


def save(cx: ChainComplex, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_document(cx), fh)


def load(path) -> ChainComplex:
    with open(path) as fh:
        return from_document(json.load(fh))
