"""Batch runner: generate complexes, run the verification suites, emit reports.

    detourlab verify symbolic --n 6 --k 1 --pmax 4
    detourlab gen torus --n 4 --M 1 --out t4.cx
    detourlab verify complex --in t4.cx --J 0 --k 1
    detourlab verify suite --seed 42
    detourlab explain nullL

A report is one JSON document with ``config``, ``checks`` (sorted by id,
then params), ``failures``, ``inconclusive`` and ``timestamp``.  The exit
status is 0 iff ``failures`` and ``inconclusive`` are both empty.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from math import comb

import numpy as np

from . import _linalg as la
from . import detour as dt
from . import hodge
from . import tractor_sym as ts
from .opfactor import DetourContext

# exit statuses
OK, CHECK_FAILED, BAD_ARGS, BAD_INPUT, BAD_BUDGET, UNKNOWN_CHECK = 0, 1, 2, 3, 4, 5

SEEDED_PAIRS = ((6, 1), (6, 2), (8, 1), (8, 2), (8, 3))


class CliError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.status = status


CATALOG = {
    "formula": ("Iterating the slot rules p times from M gives the closed form of the iterate.",
                "LL^p = sum of Y, Z, W, X slot polynomials in d, delta, J; compared as exact "
                "noncommutative polynomials"),
    "collapse": ("At the critical weight p = (n-2k)/2 the Y slot vanishes and (Z, X) is the "
                 "operator pair of LL_k.",
                 "Z = (2p/k) delta d P^{p-1}_{k+1}[delta d],  X = delta P^p_k[d delta]"),
    "opident": ("Operator identities between the factored products.",
                "L_k = delta Q_{k+1} d,  delta P^p_k[d delta] = P^p_k[delta d] delta,  d Q_k d = 0"),
    "nullL": ("The null space of L_k splits into N(delta d) and coexact eigenspaces.",
              "N(L_k) = N(delta d) + sum_{i<p} H~(lambda_i^{k+1}),  "
              "lambda_i^k = -2i(n-2k-i+1)J/n"),
    "nullG": ("The null space of G_k splits into N(delta) and exact eigenspaces.",
              "N(G_k) = N(delta) + sum_{i<=p} H-(lambda_i^k)"),
    "harmG": ("Conformal harmonics are Hodge harmonics plus exact eigenspaces.",
              "H_G^k = C^k & N(G_k) = H^k_sigma + sum_{i<=p} H-(lambda_i^k)"),
    "nullLL": ("The kernel of the slot pair equals N(L_k) & N(G_k) and sits between the "
               "conformal and Hodge harmonics.",
               "N(LL_k) = N(delta d) & N(delta) + sum_i H-(lambda_i^k);  "
               "H_sigma <= N(LL_k) <= H_G"),
    "HL": ("The L-cohomology in degree k-1 is the de Rham class group plus exact eigenspaces.",
           "H^{k-1}_L = N(L_{k-1}) / R(d) = H^{k-1} + sum_{i<p+1} H~(lambda_i^k)"),
    "sequences": ("Both detour sequences are exact, including surjectivity at the right end.",
                  "0 -> H^{k-1} -> H^{k-1}_L -d-> H_G^k -> H^k -> 0 and "
                  "0 -> H^{k-1} -> H^{k-1}_L -d-> N(LL_k) -> H^k_L -> 0"),
    "nullQ": ("On closed forms Q_k vanishes exactly on the exact eigenspaces.",
              "N(Q_k | C^k) = sum_{i<=p} H-(lambda_i^k), a subspace of R(d)"),
    "bspace": ("Exact forms whose Q-image is a divergence.",
               "B^k = {df : Q_k df in R(delta)} = sum_{i<=p} H-(lambda_i^k); zero when J = 0"),
    "qdes": ("The Q-pairing descends to cohomology and is a multiple of the Gram pairing "
             "on harmonics.",
             "<u, Q_k w> = <u_0, Q_k w>;  <u, Q_k w> = s^k J^p <u, w> on H_sigma;  "
             "s^k = prod_{i=1}^p 2i(n-2k-i+1)/n"),
    "k0": ("In degree zero the pairing with constants reduces to the constant component.",
           "<f, Q_0 1> = c <1, Q_0 1> for f in N(L_0), c the constant part of f"),
    "ricciflat": ("With J = 0 every factor collapses to a power of d delta.",
                  "Q_k = (d delta)^p,  N(L_k) = C^k,  H_G = N(LL_k) = H_sigma,  B^k = 0"),
    "poscurv": ("With J > 0 every lambda is negative, so no eigenspace is hit.",
                "lambda_i^k < 0  =>  N(L_k) = C^k,  H_G = H_sigma"),
    "xengine": ("Symbolic polynomials instantiated as matrices agree with direct assembly.",
                "|poly(cx) - direct(cx)| <= 1e-10 |direct(cx)|"),
    "betti": ("Betti numbers from the Hodge Laplacian kernel.",
              "b_k = dim N(d delta + delta d) on C^k; torus: b_k = C(n, k)"),
}


@dataclass
class SuiteConfig:
    """Everything that determines a run; identical configs give identical reports."""

    mode: str = "suite"
    ns: list = field(default_factory=lambda: [4, 6, 8])
    ks: list | None = None
    Js: list = field(default_factory=list)
    seed: int = 0
    count: int = 2
    pmax: int | None = None
    M: int = 1
    dims: list | None = None
    spectrum: list | None = None
    tol: la.Tolerances = la.DEFAULT_TOL
    infile: str | None = None
    out: str | None = None
    fmt: str = "json"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["Js"] = [str(j) for j in self.Js]
        return d


# -- check records ------------------------------------------------------------

def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


def _record(cid: str, params: dict, verdict: str, dims=None, residuals=None, notes=None) -> dict:
    rec = {"id": cid, "params": _clean(params), "verdict": verdict, "dims": _clean(dims or {}),
           "residuals": _clean(residuals or {}), "ref": CATALOG[cid][1]}
    if notes:
        rec["notes"] = list(notes)
    return rec


def _from_report(cid: str, rep, params: dict, expected: dict | None = None) -> dict:
    dims = dict(rep.dims) if hasattr(rep, "dims") else {}
    notes = list(rep.notes)
    verdict = rep.verdict
    if hasattr(rep, "summands"):
        dims["summands"] = [[s.kind, _clean(s.eigenvalue), s.dim] for s in rep.summands]
        dims["total"] = rep.total_dim
    if expected:
        got = {s.kind + ":" + str(_clean(s.eigenvalue)): s.dim for s in rep.summands}
        for key, want in expected.items():
            dims.setdefault("expected", {})[key] = want
            if got.get(key) != want:
                notes.append(f"{key}: seeded {want}, found {got.get(key)}")
                verdict = "fail"
    return _record(cid, params, verdict, dims, rep.residuals, notes)


def _guard(cid: str, params: dict, fn) -> dict:
    """Run one check; a raised error becomes a failing record instead of a crash."""
    try:
        return fn()
    except (ValueError, AssertionError, np.linalg.LinAlgError) as exc:
        return _record(cid, params, "fail", notes=[f"{type(exc).__name__}: {exc}"])


# -- suites ---------------------------------------------------------------------

def symbolic_checks(ns, ks=None, pmax=None, extras: bool = True) -> list:
    out = []
    for n, k in ts.admissible(ns):
        if ks is not None and k not in ks:
            continue
        top = pmax if pmax is not None else (n - 2 * k) // 2 + 2
        for p in range(1, top + 1):
            prm = {"n": n, "k": k, "p": p}
            v = ts.verify_formula(n, k, p)
            out.append(_record("formula", prm, "pass" if v.equal else "fail",
                               notes=None if v.equal else [str(v.difference)]))
        if not extras:
            continue
        prm = {"n": n, "k": k}
        p = (n - 2 * k) // 2
        if p:
            slots = ts.iterate_LL(n, k, p)
            Z, X = ts.LLk_pair(n, k)
            ok = slots.Y.is_zero() and slots.W.is_zero() and slots.Z == Z and slots.X == X
            out.append(_record("collapse", prm, "pass" if ok else "fail"))
        f = ts.extract_operator_formulas(n, k)
        bad = [name for name, ok in f.checks.items() if not ok]
        out.append(_record("opident", prm, "fail" if bad else "pass", notes=bad))
    return out


def numeric_checks(ctx: DetourContext, cx: hodge.ChainComplex, tol: la.Tolerances,
                   label: dict, expected: dict | None = None) -> list:
    """Every check that applies to (ctx, cx) given the sign of J."""
    n, k = ctx.n, ctx.k
    prm = dict(label, n=n, k=k, J=str(ctx.J))
    expected = expected or {}
    out = []

    def add(cid, fn, exp=None):
        out.append(_guard(cid, prm, lambda: _from_report(cid, fn(), prm, exp)))

    if ctx.J == 0:
        add("ricciflat", lambda: dt.ricci_flat_branch(ctx, cx, tol=tol))
    elif ctx.J > 0:
        add("poscurv", lambda: dt.positive_curvature(ctx, cx, tol=tol))
    else:
        if 2 * k < n:
            add("nullL", lambda: dt.null_L_decomposition(ctx, cx, tol), expected.get("nullL"))
        if k >= 1:
            add("nullG", lambda: dt.null_G_decomposition(ctx, cx, tol))
            add("harmG", lambda: dt.harmonics_G(ctx, cx, tol), expected.get("harmG"))
            add("nullLL", lambda: dt.null_LL_decomposition(ctx, cx, tol))
            add("HL", lambda: dt.cohomology_HL(ctx, cx, tol))
            add("nullQ", lambda: dt.null_Q(ctx, cx, tol))
            add("bspace", lambda: dt.b_space(ctx, cx, tol))
    if k >= 1:
        add("sequences", lambda: dt.sequence_checks(ctx, cx, tol))
    add("k0" if k == 0 else "qdes", lambda: dt.pairing_suite(ctx, cx, tol))
    return out


def betti_check(cx: hodge.ChainComplex, tol: la.Tolerances, label: dict) -> dict:
    b = [hodge.betti(cx, j, tol) for j in range(cx.n + 1)]
    dims = {"betti": b}
    verdict, notes = "pass", []
    if cx.meta.get("generator") == "torus":
        want = [comb(cx.n, j) for j in range(cx.n + 1)]
        dims["expected"] = want
        if b != want:
            verdict, notes = "fail", [f"torus Betti numbers {b} != {want}"]
    return _record("betti", dict(label, n=cx.n), verdict, dims, notes=notes)


def xengine_check(ctx: DetourContext, cx: hodge.ChainComplex, label: dict) -> dict:
    prm = dict(label, n=ctx.n, k=ctx.k, J=str(ctx.J))
    polys = ts.operator_polys(ctx.n, ctx.k)
    direct = {"Q": dt.Q_matrix(ctx, cx), "G": dt.G_matrix(ctx, cx),
              "G_inner": dt.G_matrix(ctx, cx, "inner"), "L": dt.L_matrix(ctx, cx),
              "L_inner": dt.L_matrix(ctx, cx, "inner")}
    res = {}
    for name, M in direct.items():
        A = polys[name].instantiate(cx, ctx.k, ctx.J)
        res[name] = la.norm(A - M) / max(la.norm(M), 1e-300) if A.size else 0.0
    bad = [f"{k} differs by {v:.3e}" for k, v in res.items() if v > 1e-10]
    return _record("xengine", prm, "fail" if bad else "pass", residuals=res, notes=bad)


def _child_seeds(seed: int, count: int) -> list:
    rng = hodge.make_rng(seed)
    return [int(x) for x in rng.integers(0, 2**31, size=count)]


def seeded_expectation(ctx: DetourContext, sc: dt.SeededComplex) -> dict:
    """Multiplicities a seeded complex was built with, keyed like report summands."""
    nullL = {"coexact:" + str(_clean(lam)): m for lam, m in zip(ctx.lambdas_next(), sc.coexact_mults)}
    harmG = {"exact:" + str(_clean(lam)): m for lam, m in zip(ctx.lambdas(), sc.exact_mults)}
    harmG["harmonic:0"] = sc.harmonic[ctx.k]
    return {"nullL": nullL, "harmG": harmG}


def suite_checks(cfg: SuiteConfig) -> list:
    tol = cfg.tol
    out = symbolic_checks(cfg.ns, cfg.ks, cfg.pmax)
    seeds = iter(_child_seeds(cfg.seed, 64))
    for n, k in SEEDED_PAIRS + ((6, 0),):
        ctx = DetourContext(n, k, -n / 2)
        for _ in range(cfg.count):
            s = next(seeds)
            sc = dt.seeded_complex(ctx, seed=s, scramble=0.3)
            out += numeric_checks(ctx, sc.complex, tol, {"generator": "seeded", "seed": s},
                                  seeded_expectation(ctx, sc))
    torus = hodge.build_torus(4, cfg.M)
    label = {"generator": "torus", "M": cfg.M}
    out.append(betti_check(torus, tol, label))
    for k in range(3):
        out += numeric_checks(DetourContext(4, k, 0.0), torus, tol, label)
    for n in (6, 8):
        s = next(seeds)
        cx = hodge.build_random(n, seed=s)
        for k in range(1, n // 2 + 1):
            lab = {"generator": "random", "seed": s}
            out += numeric_checks(DetourContext(n, k, n / 2), cx, tol, lab)
            out.append(xengine_check(DetourContext(n, k, -n / 2), cx, lab))
    return out


def complex_checks(cfg: SuiteConfig, cx: hodge.ChainComplex) -> list:
    Js = cfg.Js or [Fraction(-cx.n, 2)]
    ks = cfg.ks if cfg.ks is not None else range(cx.n // 2 + 1)
    label = {"file": cfg.infile}
    out = [betti_check(cx, cfg.tol, label)]
    for J in Js:
        Jv = Fraction(J) if cx.exact else float(J)
        for k in ks:
            out += numeric_checks(DetourContext(cx.n, k, Jv), cx, cfg.tol, label)
    return out


# -- report ---------------------------------------------------------------------

def _sort_key(rec: dict):
    return rec["id"], json.dumps(rec["params"], sort_keys=True)


def run(cfg: SuiteConfig) -> tuple[dict, int]:
    """Execute the configured checks; returns (report document, exit status)."""
    if cfg.mode == "symbolic":
        ns = cfg.ns
        checks = symbolic_checks(ns, cfg.ks, cfg.pmax, extras=False)
    elif cfg.mode == "complex":
        checks = complex_checks(cfg, _load(cfg.infile))
    elif cfg.mode == "suite":
        checks = suite_checks(cfg)
    else:
        raise CliError("bad-mode", f"unknown mode {cfg.mode!r}", BAD_ARGS)
    checks.sort(key=_sort_key)
    failures = [_ref(c) for c in checks if c["verdict"] == "fail"]
    inconclusive = [_ref(c) for c in checks if c["verdict"] == "inconclusive"]
    report = {
        "config": _clean(cfg.to_dict()),
        "checks": checks,
        "failures": failures,
        "inconclusive": inconclusive,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return report, OK if not failures and not inconclusive else CHECK_FAILED


def _ref(rec: dict) -> dict:
    return {"id": rec["id"], "params": rec["params"]}


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    lines = []
    for c in report["checks"]:
        prm = " ".join(f"{k}={v}" for k, v in sorted(c["params"].items()))
        lines.append(f"{c['verdict'].upper():13s} {c['id']:10s} {prm}")
        for note in c.get("notes", []):
            lines.append(f"{'':14s}{note}")
    lines.append(f"{len(report['checks'])} checks, {len(report['failures'])} failed, "
                 f"{len(report['inconclusive'])} inconclusive")
    return "\n".join(lines)


def explain(cid: str) -> str:
    if cid not in CATALOG:
        raise CliError("unknown-check", f"unknown check id {cid!r}; known: {', '.join(sorted(CATALOG))}",
                       UNKNOWN_CHECK)
    statement, formula = CATALOG[cid]
    return f"{cid}: {statement}\n  {formula}"


# -- argument handling ---------------------------------------------------------

def _load(path: str) -> hodge.ChainComplex:
    if not path:
        raise CliError("missing-input", "--in is required", BAD_ARGS)
    try:
        return hodge.load(path)
    except OSError as exc:
        raise CliError("unreadable-input", str(exc), BAD_INPUT) from exc
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise CliError("malformed-input", f"{path}: {exc}", BAD_INPUT) from exc


def _ints(text):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise CliError("bad-list", f"expected comma-separated integers, got {text!r}", BAD_ARGS) from exc


def _spectrum(text):
    """Comma-separated decimals; ';' separates consecutive differentials."""
    if text is None:
        return None
    try:
        return [[float(x) for x in part.split(",") if x.strip()] for part in text.split(";")]
    except ValueError as exc:
        raise CliError("bad-spectrum", f"cannot parse spectrum {text!r}", BAD_ARGS) from exc


def _J(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError("bad-J", f"cannot parse J = {text!r}", BAD_ARGS) from exc


def _tol(text):
    if text is None:
        return la.DEFAULT_TOL
    try:
        v = float(text)
    except ValueError as exc:
        raise CliError("bad-tol", f"cannot parse tolerance {text!r}", BAD_ARGS) from exc
    return la.Tolerances(tau=v, tau_rel=v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="detourlab", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.add_argument("--format", choices=("json", "text"), default="json")

    verify = sub.add_parser("verify", help="run verification checks")
    vsub = verify.add_subparsers(dest="what", required=True)
    for name in ("symbolic", "complex", "suite"):
        p = vsub.add_parser(name)
        common(p)
        p.add_argument("--J", action="append")
        p.add_argument("--pmax", type=int)
        p.add_argument("--M", type=int, default=1)
        p.add_argument("--tol")
        p.add_argument("--in", dest="infile")

    gen = sub.add_parser("gen", help="generate a complex file")
    gsub = gen.add_subparsers(dest="what", required=True)
    for name in ("prescribed", "random", "torus"):
        p = gsub.add_parser(name)
        common(p)
        p.add_argument("--M", type=int, default=1)
        p.add_argument("--dims")
        p.add_argument("--spectrum")

    ex = sub.add_parser("explain", help="describe a check")
    ex.add_argument("check_id")
    return ap


def _generate(args) -> hodge.ChainComplex:
    n = args.n
    if n is None:
        raise CliError("missing-n", "--n is required", BAD_ARGS)
    try:
        if args.what == "torus":
            return hodge.build_torus(n, args.M)
        if args.what == "random":
            return hodge.build_random(n, _ints(args.dims), seed=args.seed)
        spectra = _spectrum(args.spectrum) or [[]]
        start = args.k or 0
        full = [[] for _ in range(n)]
        for j, s in enumerate(spectra):
            if start + j >= n:
                raise CliError("bad-spectrum", "spectrum runs past degree n - 1", BAD_ARGS)
            full[start + j] = s
        extra = _ints(args.dims) or [0] * (n + 1)
        return hodge.build_prescribed(n, full, extra, seed=args.seed)
    except CliError:
        raise
    except ValueError as exc:
        raise CliError("infeasible-generator", str(exc), BAD_BUDGET) from exc


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _join_values(argv: list) -> list:
    """Let ``--J -3/2`` through; argparse only accepts plain negative numbers."""
    out, it = [], iter(argv)
    for a in it:
        if a == "--J":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--J={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(_join_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        if args.command == "explain":
            print(explain(args.check_id))
            return OK
        if args.command == "gen":
            cx = _generate(args)
            if args.out:
                hodge.save(cx, args.out)
            else:
                print(json.dumps(hodge.to_document(cx)))
            return OK
        cfg = SuiteConfig(
            mode=args.what,
            ns=[args.n] if args.n is not None else [4, 6, 8],
            ks=[args.k] if args.k is not None else None,
            Js=[_J(j) for j in args.J or []],
            seed=args.seed, pmax=args.pmax, M=args.M, tol=_tol(args.tol),
            infile=args.infile, out=args.out, fmt=args.format)
        report, status = run(cfg)
        _emit(render(report, cfg.fmt), cfg.out)
        return status
    except CliError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return exc.status


if __name__ == "__main__":
    sys.exit(main())
