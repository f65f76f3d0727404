from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detourlab import _linalg as la
from detourlab.opfactor import (DetourContext, FactoredPolynomial, P_poly, annihilator, apply_P,
                                check_distinct, decompose_null, lambda_scalars, projectors)

F = Fraction


def test_context_validation():
    with pytest.raises(ValueError):
        DetourContext(5, 1)
    with pytest.raises(ValueError):
        DetourContext(2, 0)
    with pytest.raises(ValueError):
        DetourContext(6, 4)
    assert DetourContext(8, 3).p == 1


def test_lambdas_small_case():
    ctx = DetourContext(6, 1, 1)
    assert lambda_scalars(ctx) == [F(-4, 3), F(-2)]
    assert ctx.lambdas_next() == [F(-2, 3)]


def test_einstein_scale_gives_integers():
    # with J = -n/2 the shifts are i(n - 2k - i + 1)
    ctx = DetourContext(8, 1, F(-4))
    assert ctx.lambdas() == [6, 10, 12]


@pytest.mark.parametrize("n", [4, 6, 8, 10, 12, 14])
def test_distinct_for_negative_J(n):
    for k in range(n // 2 + 1):
        ok, witness = check_distinct(DetourContext(n, k, F(-1)))
        assert ok and witness is None


@pytest.mark.parametrize("n, k, values", [
    (8, 1, [F(-3, 2), F(-5, 2), F(-3)]),
    (4, 1, [F(-1)]),
    (6, 2, [F(-2, 3)]),
])
def test_positive_J_values_are_negative_and_distinct(n, k, values):
    ctx = DetourContext(n, k, 1)
    assert check_distinct(ctx) == (True, None)
    assert ctx.lambdas() == values


def test_zero_J_refused():
    with pytest.raises(ValueError):
        check_distinct(DetourContext(6, 1, 0))


def test_P_is_identity_below_one_factor():
    E = np.diag([1.0, 2.0])
    assert P_poly(6, 3, 0, 1).degree == 0
    np.testing.assert_array_equal(P_poly(6, 3, 0, 1).matrix(E), np.eye(2))


def test_P_matches_eigen_oracle():
    rng = np.random.default_rng(3)
    V = rng.standard_normal((5, 5))
    w = np.array([0.5, 1.0, 2.0, 3.0, 7.0])
    E = V @ np.diag(w) @ np.linalg.inv(V)
    poly = P_poly(8, 1, 3, -1.0)
    want = V @ np.diag([np.prod([x + c for c in poly.shifts]) for x in w]) @ np.linalg.inv(V)
    np.testing.assert_allclose(poly.matrix(E), want, rtol=1e-9, atol=1e-9)


def test_callable_operator():
    E = np.array([[2.0, 1.0], [0.0, 3.0]])
    poly = FactoredPolynomial([1.0, -2.0])
    f = np.array([1.0, 1.0])
    np.testing.assert_allclose(apply_P(poly, lambda v: E @ v, f), apply_P(poly, E, f))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_P(FactoredPolynomial([1]), np.eye(3), np.ones(2))
    with pytest.raises(ValueError):
        apply_P(FactoredPolynomial([1]), np.ones((2, 3)), np.ones(3))


def test_exact_application():
    E = la.as_exact([[0, 1], [0, 0]])
    out = P_poly(4, 1, 1, F(1)).matrix(E)
    assert out.dtype == object
    assert out[0, 0] == F(1) and out[0, 1] == F(1) and out[1, 0] == 0


def test_projectors_on_diagonal():
    eigs = [F(1), F(3), F(4)]
    E = la.as_exact(np.diag([1, 3, 4]))
    P = projectors(eigs, E)
    for i in range(3):
        want = np.zeros((3, 3), dtype=int)
        want[i, i] = 1
        assert all(P[i][a, b] == want[a, b] for a in range(3) for b in range(3))
    assert P.coefficients[0] == F(1, (1 - 3) * (1 - 4))


def test_repeated_eigenvalue_named():
    with pytest.raises(ValueError, match=r"positions \(0, 2\)"):
        projectors([1.0, 2.0, 1.0], np.eye(2))


@st.composite
def spectral_problems(draw):
    m = draw(st.integers(1, 4))
    eigs = draw(st.lists(st.integers(-6, 6), min_size=m, max_size=m, unique=True))
    mult = draw(st.lists(st.integers(0, 2), min_size=m, max_size=m))
    noise = draw(st.integers(0, 2))
    seed = draw(st.integers(0, 2**16))
    return [float(e) for e in eigs], mult, noise, seed


@settings(max_examples=40, deadline=None)
@given(spectral_problems())
def test_projectors_split_the_annihilator_kernel(problem):
    eigs, mult, noise, seed = problem
    rng = np.random.default_rng(seed)
    diag = [e for e, m in zip(eigs, mult) for _ in range(m)] + list(20.0 + rng.random(noise))
    dim = len(diag)
    if dim == 0:
        return
    V = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    E = V @ np.diag(diag) @ V.T
    # the annihilator may cancel to round-off; judge rank against its factors
    scale = np.prod([np.linalg.norm(E, 2) + abs(e) for e in eigs])
    N, _ = la.null_space(annihilator(eigs, E), scale=scale)
    assert N.shape[1] == sum(mult)
    parts = decompose_null(eigs, E, N)
    assert [p.shape[1] for p in parts] == mult
    P = projectors(eigs, E)
    total = sum(P.matrices)
    # sum of projectors is the identity on the kernel, and each is idempotent there
    np.testing.assert_allclose(total @ N, N, atol=1e-8)
    for Pi in P.matrices:
        np.testing.assert_allclose(Pi @ Pi @ N, Pi @ N, atol=1e-7 * max(1, np.linalg.norm(Pi)) ** 2)


def test_decompose_null_rejects_foreign_basis():
    E = np.diag([1.0, 2.0, 5.0])
    with pytest.raises(ValueError):
        decompose_null([1.0, 2.0], E, np.eye(3)[:, 2:])
