import itertools
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from chaoscalc.chaos_model import ChaosElement, ChaosVector, evaluate
from chaoscalc.errors import OrderMismatch, RangeError
from chaoscalc.malliavin import (cauchy_binet_det, cov_of_squares, covariance_matrix, det_gamma,
                                 expected_det_gamma_order1, expected_det_gamma_order2,
                                 expected_det_gamma_mc, expected_det_gamma_second_chaos, gamma_at,
                                 gamma_limit_matrix, gradient, is_det_zero, truncated_gamma_det)
from chaoscalc.polynomial import Polynomial
from chaoscalc.rng import Rng, mc_reduce
from chaoscalc.tensor_core import SymmetricKernel as K

CE = ChaosElement


def vec(*polys):
    return ChaosVector.from_polynomials(polys)


def xs(n):
    return [Polynomial.variable(i, n) for i in range(n)]


def random_vector(seed, d, q, n):
    gen = np.random.default_rng(seed)
    comps = []
    for _ in range(d):
        k = int(gen.integers(1, q + 1))
        comps.append(CE.from_kernels(*(K.random(j, n, gen, density=0.7) for j in range(1, k + 1))))
    return ChaosVector(tuple(comps))


# gradient ------------------------------------------------------------------------

def test_gradient_examples():
    n = 3
    A = gradient(ChaosVector.of(CE.gaussian(0, n))).evaluate([0.3, -1.0, 2.0])
    np.testing.assert_array_equal(A, [[1.0, 0.0, 0.0]])
    A = gradient(ChaosVector.of(CE.from_kernels(K.basis(0, 0, dim=n)))).evaluate([0.3, -1.0, 2.0])
    np.testing.assert_allclose(A, [[0.6, 0.0, 0.0]])
    A = gradient(ChaosVector.of(CE.from_kernels(K.basis(0, 1, dim=n)))).evaluate([0.3, -1.0, 2.0])
    np.testing.assert_allclose(A, [[-1.0, 0.3, 0.0]])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_gradient_matches_sympy_and_chaos_view(seed):
    F = random_vector(seed, 2, 3, 3)
    sym = sympy.symbols("x0:3")
    x = np.random.default_rng(seed).standard_normal(3)
    grad = gradient(F)
    A = grad.evaluate(x)
    chaos = grad.as_chaos()
    for i, P in enumerate(F.polynomials()):
        expr = sum(c * sympy.prod([s ** e for s, e in zip(sym, exps)]) for exps, c in P.to_pairs())
        for j in range(3):
            want = float(sympy.diff(expr, sym[j]).subs(dict(zip(sym, x))))
            assert A[i, j] == pytest.approx(want, rel=1e-9, abs=1e-9)
            assert evaluate(chaos[i][j], x) == pytest.approx(want, rel=1e-9, abs=1e-9)
            assert chaos[i][j].max_order <= F[i].max_order - 1 or chaos[i][j].max_order == 0


# gamma -------------------------------------------------------------------------------

def test_gamma_examples():
    x = xs(2)
    G = gamma_at(vec(x[0], x[0] ** 2 - 1), [1.0, 0.0])
    np.testing.assert_allclose(G, [[1, 2], [2, 4]])
    assert np.linalg.det(G) == pytest.approx(0, abs=1e-12)
    g = np.array([0.7, -1.3])
    assert det_gamma(vec(x[0], x[0] * x[1]), g) == pytest.approx(g[0] ** 2, rel=1e-12)
    np.testing.assert_allclose(gamma_at(vec(x[0], x[1]), g), np.eye(2))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3), st.integers(1, 6))
def test_gamma_symmetric_psd(seed, d, q, n):
    F = random_vector(seed, d, q, n)
    G = gamma_at(F, np.random.default_rng(seed).standard_normal((1000, n)))
    np.testing.assert_allclose(G, np.swapaxes(G, 1, 2), atol=1e-12)
    scale = 1 + np.abs(G).max(axis=(1, 2))
    assert (np.linalg.eigvalsh(G).min(axis=1) / scale >= -1e-9).all()


def test_expected_det_mc_examples():
    x = xs(2)
    est = expected_det_gamma_mc(vec(x[0], x[0] * x[1]), 10**6, Rng(21))
    assert est.within(1.0)
    F = vec(x[0], x[0] ** 2 - 1)
    d = det_gamma(F, np.random.default_rng(0).standard_normal((10**4, 2)))
    assert np.abs(d).max() <= 1e-9
    est = expected_det_gamma_mc(vec(x[0], x[1] ** 2 - 1), 10**6, Rng(22))
    assert est.within(4.0)


def test_zero_test_is_scale_free():
    G = np.array([[1e6, 1e6], [1e6, 1e6 + 1e-3]])
    assert not is_det_zero(np.linalg.det(G), G)
    G = np.array([[1.0, 2.0], [2.0, 4.0]])
    assert is_det_zero(np.linalg.det(G), G)
    assert is_det_zero(0.0, np.zeros((2, 2)))


# closed forms ------------------------------------------------------------------------

def test_order1_closed_form_hand_cases():
    e1 = K.basis(0, dim=2)
    assert expected_det_gamma_order1(e1, K.basis(0, 0, dim=2)) == 0.0
    assert expected_det_gamma_order1(e1, K.basis(1, 1, dim=2)) == 4.0
    assert expected_det_gamma_order1(e1, K.basis(0, 1, dim=2)) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(OrderMismatch):
        expected_det_gamma_order1(K.basis(0, 0, dim=2), e1)


def test_order1_closed_form_against_mc():
    est = expected_det_gamma_mc(ChaosVector.of(CE.gaussian(0, 2), CE.from_kernels(K.basis(0, 1, dim=2))),
                                10**6, Rng(23))
    assert est.within(1.0)


def test_order2_closed_form_hand_cases():
    f = K.basis(0, 0, dim=2)
    assert expected_det_gamma_order2(f, f) == pytest.approx(0.0, abs=1e-12)
    assert expected_det_gamma_order2(f, K.basis(1, 1, dim=2)) == pytest.approx(16.0, abs=1e-12)
    x = xs(2)
    est = expected_det_gamma_mc(vec(x[0] ** 2 - 1, x[1] ** 2 - 1), 10**6, Rng(24))
    assert est.within(16.0)
    with pytest.raises(OrderMismatch):
        expected_det_gamma_order2(f, K.basis(0, dim=2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_second_chaos_forms_agree_and_bound(seed, n):
    gen = np.random.default_rng(seed)
    f, g = K.random(2, n, gen), K.random(2, n, gen)
    a, b = expected_det_gamma_order2(f, g), expected_det_gamma_second_chaos(f, g)
    assert a == pytest.approx(b, abs=1e-9 * (1 + abs(a)))
    C = covariance_matrix(ChaosVector.of(CE.from_kernels(f), CE.from_kernels(g)))
    np.testing.assert_allclose(C, [[2 * f.norm() ** 2, 2 * float(np.sum(f.to_dense() * g.to_dense()))],
                                   [2 * float(np.sum(f.to_dense() * g.to_dense())), 2 * g.norm() ** 2]],
                               rtol=1e-12)
    assert b >= 4 * np.linalg.det(C) - 1e-9


def test_gamma_limit_matrix():
    n = 3
    F = ChaosVector.of(CE.gaussian(0, n), CE.from_kernels(K.basis(1, 1, dim=n) * (1 / math.sqrt(2))))
    np.testing.assert_allclose(gamma_limit_matrix(F), np.diag([1.0, 2.0]))
    est = mc_reduce(lambda x: gamma_at(F, x)[:, 1, 1], n, 200_000, Rng(25))
    assert est.within(2.0)
    with pytest.raises(OrderMismatch):
        gamma_limit_matrix(ChaosVector.of(CE.from_kernels(K.basis(0, dim=n), K.basis(0, 0, dim=n))))


# Cauchy-Binet ------------------------------------------------------------------------

def minors_oracle(A):
    d, n = A.shape
    return sum(np.linalg.det(A[:, J]) ** 2 for J in map(list, itertools.combinations(range(n), d)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.integers(3, 5))
def test_cauchy_binet_and_truncation(seed, d, n):
    F = random_vector(seed, d, 2, n)
    grad = gradient(F)
    for x in np.random.default_rng(seed).standard_normal((10, n)):
        A = grad.evaluate(x)
        direct = np.linalg.det(A @ A.T)
        assert cauchy_binet_det(A) == pytest.approx(direct, abs=1e-9 * (1 + abs(direct)))
        assert minors_oracle(A) == pytest.approx(direct, abs=1e-9 * (1 + abs(direct)))
        dets = [truncated_gamma_det(F, x, j, grad) for j in range(1, n + 1)]
        assert dets[-1] == pytest.approx(direct, abs=1e-9 * (1 + abs(direct)))
        assert all(b >= a - 1e-9 * (1 + abs(a)) for a, b in zip(dets, dets[1:]))


def test_truncation_range():
    F = ChaosVector.of(CE.gaussian(0, 2))
    with pytest.raises(RangeError):
        truncated_gamma_det(F, [0.0, 1.0], 3)


def test_truncation_below_d_is_exactly_zero():
    F = random_vector(3, 3, 3, 5)
    x = np.random.default_rng(3).standard_normal(5) * 4
    assert truncated_gamma_det(F, x, 1) == 0.0 and truncated_gamma_det(F, x, 2) == 0.0


def test_cauchy_binet_wide_matrix():
    assert cauchy_binet_det(np.ones((3, 2))) == 0.0


# covariance of squares -----------------------------------------------------------------

def test_cov_of_squares_examples():
    assert cov_of_squares(K.basis(0, dim=2), K.basis(1, 1, dim=2)) == 0.0
    assert cov_of_squares(K.basis(0, dim=1), K.basis(0, dim=1)) == pytest.approx(2.0)
    f = K.basis(0, 0, dim=1)
    # Var(H_2(G)^2) = E[(G^2 - 1)^4] - 4 = 60 - 4
    assert cov_of_squares(f, f) == pytest.approx(56.0)
    est = mc_reduce(lambda x: ((x[:, 0] ** 2 - 1) ** 2 - 2) ** 2, 1, 10**6, Rng(26))
    assert est.within(56.0)


@pytest.mark.parametrize("ki,kj,seed", [(1, 2, 1), (2, 2, 2), (1, 3, 3), (2, 3, 4)])
def test_cov_of_squares_against_mc(ki, kj, seed):
    gen = np.random.default_rng(seed)
    fi, fj = K.random(ki, 2, gen), K.random(kj, 2, gen)
    Fi, Fj = CE.from_kernels(fi), CE.from_kernels(fj)
    vi, vj = Fi.variance(), Fj.variance()
    est = mc_reduce(lambda x: (evaluate(Fi, x) ** 2 - vi) * (evaluate(Fj, x) ** 2 - vj), 2, 10**6,
                    Rng(100 + seed))
    assert est.within(cov_of_squares(fi, fj)), est


# 0-1 law -------------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_zero_fraction_is_zero_or_one(seed):
    x = xs(3)
    families = [vec(x[0], x[0] ** 2 - 1), vec(x[0] + x[1], x[0] * x[1], x[0] ** 2 + x[1] ** 2),
                vec(x[0], x[1] * x[2]), vec(x[0] ** 2 - 1, x[0] * x[1])]
    for F in families:
        G = gamma_at(F, np.random.default_rng(seed).standard_normal((10**4, 3)))
        frac = is_det_zero(np.linalg.det(G), G).mean()
        assert frac <= 1e-3 or frac >= 0.999
