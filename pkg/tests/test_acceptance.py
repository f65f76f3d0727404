"""The eleven acceptance criteria, each timed against its budget.

A summary line per criterion is printed at the end of the pytest run.
"""

import time
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from detourlab import detour as dt
from detourlab import hodge
from detourlab import tractor_sym as ts
from detourlab.opfactor import DetourContext

NS = (4, 6, 8, 10, 12)
SEEDED_PAIRS = ((6, 1), (6, 2), (8, 1), (8, 2), (8, 3))
PER_PAIR = 20


def sweep():
    return list(ts.admissible(NS))


@lru_cache(maxsize=None)
def seeded_batch():
    out = []
    for n, k in SEEDED_PAIRS:
        ctx = DetourContext(n, k, -n / 2)
        for s in range(PER_PAIR):
            # odd seeds get non-identity Grams
            sc = dt.seeded_complex(ctx, seed=1000 * n + 100 * k + s, scramble=0.4 * (s % 2))
            out.append((ctx, sc))
    return tuple(out)


@lru_cache(maxsize=None)
def random_batch(count=20):
    return tuple(hodge.build_random((6, 8)[s % 2], seed=500 + s) for s in range(count))


def _rank(cx, j):
    return len(cx.meta["spectra"][j]) if 0 <= j < cx.n else 0


def _timed(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t0


def _finish(acceptance, number, name, budget, fn):
    ok, detail, secs = _timed(fn)
    within = secs < budget
    acceptance(number, name, ok and within, secs, budget, detail if not ok else "")
    assert ok, detail
    assert within, f"took {secs:.1f} s, budget {budget} s"


def test_criterion_01_symbolic_formula(acceptance):
    def run():
        bad = []
        for n, k in sweep():
            for p in range(1, (n - 2 * k) // 2 + 3):
                if not ts.verify_formula(n, k, p).equal:
                    bad.append((n, k, p))
        return not bad, f"unequal at {bad}"

    _finish(acceptance, 1, "slot iteration equals closed form", 10, run)


def test_criterion_02_critical_weight_collapse(acceptance):
    def run():
        bad = []
        for n, k in sweep():
            p = (n - 2 * k) // 2
            it = ts.iterate_LL(n, k, p)
            Z, X = ts.LLk_pair(n, k)
            if not (it.Y.is_zero() and it.W.is_zero() and it.Z == Z and it.X == X):
                bad.append((n, k))
        return not bad, f"collapse fails at {bad}"

    _finish(acceptance, 2, "critical-weight collapse", 5, run)


def test_criterion_03_operator_identities(acceptance):
    def run():
        bad = []
        for n, k in sweep():
            polys = ts.operator_polys(n, k)
            checks = {
                "L = delta Q_{k+1} d": polys["L"] == (
                    ts.delta_ * polys["Q_next"] * ts.d_ if "Q_next" in polys else ts.OperatorPoly()),
                "G intertwines": polys["G"] == polys["G_inner"],
                "G = delta Q": polys["G"] == ts.delta_ * polys["Q"],
                "d Q d = 0": (ts.d_ * polys["Q"] * ts.d_).is_zero(),
            }
            bad += [(n, k, name) for name, ok in checks.items() if not ok]
        return not bad, f"failed {bad}"

    _finish(acceptance, 3, "operator identities as polynomials", 5, run)


def test_criterion_04_null_L(acceptance):
    def run():
        bad = []
        for ctx, sc in seeded_batch():
            cx, k = sc.complex, ctx.k
            rep = dt.null_L_decomposition(ctx, cx)
            coexact = [s.dim for s in rep.summands if s.kind == "coexact"]
            # dim C^k + seeded coexact multiplicities
            want_total = cx.dims[k] - _rank(cx, k) + sum(sc.coexact_mults)
            worst = max(rep.residuals.values(), default=0.0)
            if not (rep.passed and coexact == sc.coexact_mults and rep.total_dim == want_total
                    and worst <= 1e-8):
                bad.append((ctx.n, k, cx.meta["seed"], rep.notes))
        return not bad, f"{len(bad)} complexes failed, first {bad[:1]}"

    _finish(acceptance, 4, "null space of L_k", 60, run)


def test_criterion_05_harmonics_and_LL(acceptance):
    def run():
        bad = []
        for ctx, sc in seeded_batch():
            cx, k = sc.complex, ctx.k
            hg = dt.harmonics_G(ctx, cx)
            exact = [s.dim for s in hg.summands if s.kind == "exact"]
            harm = [s.dim for s in hg.summands if s.kind == "harmonic"]
            ll = dt.null_LL_decomposition(ctx, cx)
            ng = dt.null_G_decomposition(ctx, cx)
            want_hg = sc.harmonic[k] + sum(sc.exact_mults)
            # N(LL_k) also holds the coexact seeds, which are coclosed
            want_ll = want_hg + sum(sc.coexact_mults)
            want_ng = cx.dims[k] - _rank(cx, k - 1) + sum(sc.exact_mults)
            ok = (hg.passed and ll.passed and ng.passed and exact == sc.exact_mults
                  and harm == [sc.harmonic[k]] and hg.total_dim == want_hg
                  and ll.total_dim == want_ll and ng.total_dim == want_ng)
            worst = max([*hg.residuals.values(), *ll.residuals.values(), *ng.residuals.values(), 0.0])
            if not ok or worst > 1e-8:
                bad.append((ctx.n, k, cx.meta["seed"], hg.notes + ll.notes + ng.notes))
        return not bad, f"{len(bad)} complexes failed, first {bad[:1]}"

    _finish(acceptance, 5, "conformal harmonics and N(LL_k)", 60, run)


def test_criterion_06_exact_sequences(acceptance):
    def run():
        bad, count = [], 0
        cases = [(ctx, sc.complex) for ctx, sc in seeded_batch()]
        torus = hodge.build_torus(4, 1)
        cases += [(DetourContext(4, k, 0.0), torus) for k in (1, 2)]
        for cx in random_batch():
            cases += [(DetourContext(cx.n, k, cx.n / 2), cx) for k in range(1, cx.n // 2 + 1)]
        for ctx, cx in cases:
            rep = dt.sequence_checks(ctx, cx)
            count += 1
            if not rep.passed:
                bad.append((ctx.n, ctx.k, str(ctx.J), rep.notes))
        return not bad, f"{len(bad)} of {count} failed, first {bad[:1]}"

    _finish(acceptance, 6, "exact sequences with k-regularity", 60, run)


def test_criterion_07_positive_curvature(acceptance):
    def run():
        bad = []
        for cx in random_batch():
            for k in range(cx.n // 2 + 1):
                rep = dt.positive_curvature(DetourContext(cx.n, k, cx.n / 2), cx)
                if not rep.passed or rep.dims["eigen_hits"]:
                    bad.append((cx.n, k, cx.meta["seed"], rep.notes))
        return not bad, f"failed {bad[:1]}"

    _finish(acceptance, 7, "positive-curvature vanishing", 30, run)


def test_criterion_08_ricci_flat_torus(acceptance):
    def run():
        cx = hodge.build_torus(4, 1)
        notes = []
        betti = [hodge.betti(cx, k) for k in range(5)]
        if betti != [comb(4, k) for k in range(5)]:
            notes.append(f"betti {betti}")
        for k in range(3):
            ctx = DetourContext(4, k, 0.0)
            rf = dt.ricci_flat_branch(ctx, cx, nvec=50, seed=k)
            if not rf.passed or rf.residuals["Q_k - (d delta)^p"] > 1e-10:
                notes.append(f"k={k}: {rf.notes}")
            pr = dt.pairing_suite(ctx, cx)
            theta = pr.values["theta_harmonic"]
            H = dt.harmonic_basis(cx, k)[0]
            gram = H.T @ cx.gram(k) @ H
            target = gram if k == 2 else np.zeros_like(gram)
            if not pr.passed or np.max(np.abs(theta - target)) > 1e-8:
                notes.append(f"k={k} pairing: {pr.notes}")
        return not notes, "; ".join(notes)

    _finish(acceptance, 8, "Ricci-flat branch on the 4-torus", 120, run)


def test_criterion_09_pairing_descent(acceptance):
    def run():
        bad = []
        if dt.s_constant(DetourContext(6, 1)) != Fraction(8, 3):
            bad.append("s^k(6,1) != 8/3")
        for ctx, sc in seeded_batch():
            rep = dt.pairing_suite(ctx, sc.complex)
            want = float(dt.s_constant(ctx)) * ctx.J ** ctx.p
            if (not rep.passed or rep.residuals["<u_1, Q w>"] > 1e-8
                    or rep.residuals["theta on harmonics vs s^k J^p <u,w>"] > 1e-8
                    or abs(rep.predicted_constant - want) > 1e-12 * abs(want)):
                bad.append((ctx.n, ctx.k, sc.complex.meta["seed"], rep.notes))
        return not bad, f"failed {bad[:2]}"

    _finish(acceptance, 9, "pairing descent and Q-constant", 30, run)


def test_criterion_10_k0_remark(acceptance):
    def run():
        bad = []
        for n in (6, 8):
            ctx = DetourContext(n, 0, -n / 2)
            for s in range(10):
                sc = dt.seeded_complex(ctx, seed=7000 + 10 * n + s, scramble=0.4 * (s % 2))
                rep = dt.pairing_suite(ctx, sc.complex)
                if not rep.passed or rep.residuals["<f, Q 1> - c <1, Q 1>"] > 1e-8:
                    bad.append((n, s, rep.notes))
        return not bad, f"failed {bad[:2]}"

    _finish(acceptance, 10, "degree-zero pairing with constants", 10, run)


def test_criterion_11_cross_engine(acceptance):
    def run():
        worst, bad = 0.0, []
        for n in NS:
            complexes = [hodge.build_random(n, seed=900 + 10 * n + s) for s in range(5)]
            for k in range(n // 2 + 1):
                if (n, k) not in sweep():
                    continue
                polys = ts.operator_polys(n, k)
                for cx in complexes:
                    ctx = DetourContext(n, k, -n / 2)
                    direct = {"Q": dt.Q_matrix(ctx, cx), "G": dt.G_matrix(ctx, cx),
                              "G_inner": dt.G_matrix(ctx, cx, "inner"),
                              "L": dt.L_matrix(ctx, cx), "L_inner": dt.L_matrix(ctx, cx, "inner")}
                    if "Q_next" in polys:
                        direct["Q_next"] = dt.Q_matrix(DetourContext(n, k + 1, ctx.J), cx)
                    for name, M in direct.items():
                        kin = k + 1 if name == "Q_next" else k
                        A = polys[name].instantiate(cx, kin, ctx.J)
                        err = np.linalg.norm(A - M) / max(np.linalg.norm(M), 1e-300)
                        worst = max(worst, err)
                        if err > 1e-10:
                            bad.append((n, k, name, err))
        return not bad, f"worst {worst:.2e}, failed {bad[:2]}"

    _finish(acceptance, 11, "symbolic and direct assembly agree", 30, run)
