import math

import numpy as np
import pytest
import sympy

from chaoscalc.algebra import (Verdict, absolute_continuity_verdict, algebraic_dependence,
                               cross_check_dependence, find_annihilator, jacobian_rank, witness_degree_bound,
                               small_ball_exponent, verify_annihilator)
from chaoscalc.chaos_model import ChaosElement, ChaosVector
from chaoscalc.errors import CapTooLarge, Degenerate, MixedEvidence, RangeError
from chaoscalc.polynomial import Polynomial
from chaoscalc.rng import Rng
from chaoscalc.tensor_core import SymmetricKernel as K

from families import DEPENDENT, INDEPENDENT, max_degree, polys


def xs(n):
    return [Polynomial.variable(i, n) for i in range(n)]


def to_sympy(P: Polynomial, symbols):
    return sum(c * sympy.prod([s ** e for s, e in zip(symbols, exps)]) for exps, c in P.to_pairs())


def symbolic_residual(H: Polynomial, ps) -> float:
    """Largest coefficient of H(P_1, ..., P_d) expanded exactly in sympy."""
    x = sympy.symbols(f"x0:{ps[0].nvars}")
    t = sympy.symbols(f"t0:{len(ps)}")
    expr = to_sympy(H, t).subs({ti: to_sympy(p, x) for ti, p in zip(t, ps)}, simultaneous=True)
    poly = sympy.Poly(sympy.expand(expr), *x)
    return max((abs(float(c)) for c in poly.coeffs()), default=0.0)


def proportional(H: Polynomial, ref: Polynomial, tol=1e-8) -> bool:
    a, b = H.normalized(), ref.normalized()
    return a.almost_equal(b, tol) or a.almost_equal(-b, tol)


# Jacobian rank ----------------------------------------------------------------------

def test_jacobian_rank_examples():
    x = xs(2)
    rng = Rng(31)
    assert jacobian_rank([x[0], x[1]], 5, rng) == 2
    assert jacobian_rank([x[0], x[0] ** 2], 5, rng) == 1
    assert jacobian_rank([x[0] + x[1], x[0] * x[1], x[0] ** 2 + x[1] ** 2], 5, rng) == 2
    with pytest.raises(RangeError):
        jacobian_rank([x[0]], 0, rng)


@pytest.mark.parametrize("name,n,build", DEPENDENT, ids=[f[0] for f in DEPENDENT])
def test_dependent_families_rank_deficient(name, n, build):
    ps = polys(n, build)
    assert jacobian_rank(ps, 5, Rng(32)) < len(ps)


@pytest.mark.parametrize("name,n,build", INDEPENDENT, ids=[f[0] for f in INDEPENDENT])
def test_independent_families_full_rank(name, n, build):
    ps = polys(n, build)
    assert jacobian_rank(ps, 5, Rng(33)) == len(ps)


# annihilators ----------------------------------------------------------------------

def test_witness_degree_bound():
    assert witness_degree_bound(3, 2) == 12
    assert witness_degree_bound(2, 3) == 6
    assert witness_degree_bound(1, 5) == 1


def test_find_annihilator_examples():
    x = xs(2)
    t = xs(3)
    H = find_annihilator([x[0], x[0] ** 2], 4, Rng(34))
    assert H is not None and proportional(H, Polynomial.from_pairs(2, [((2, 0), 1.0), ((0, 1), -1.0)]))
    assert find_annihilator([x[0], x[1]], 4, Rng(35)) is None
    H = find_annihilator([x[0] + x[1], x[0] * x[1], x[0] ** 2 + x[1] ** 2], 12, Rng(36))
    assert H is not None and H.degree == 2 <= witness_degree_bound(3, 2)
    assert proportional(H, t[0] ** 2 - 2 * t[1] - t[2])
    assert abs(H.coefficient_norm() - 1.0) < 1e-12


@pytest.mark.parametrize("name,n,build", DEPENDENT, ids=[f[0] for f in DEPENDENT])
def test_dependent_families_have_verified_witness(name, n, build):
    ps = polys(n, build)
    cap = witness_degree_bound(len(ps), max_degree(ps))
    rng = Rng(37)
    H = find_annihilator(ps, cap, rng)
    assert H is not None
    assert 1 <= H.degree <= cap
    assert verify_annihilator(H, ps, rng) <= 1e-6 * (1 + H.coefficient_norm())
    assert symbolic_residual(H, ps) <= 1e-8


def test_h2_h3_witness_degree_three():
    x = xs(1)
    H = find_annihilator([x[0] ** 2 - 1, x[0] ** 3 - 3 * x[0]], None, Rng(38))
    assert H is not None and H.degree == 3
    assert symbolic_residual(H, [x[0] ** 2 - 1, x[0] ** 3 - 3 * x[0]]) <= 1e-8


def test_cap_too_large():
    x = xs(4)
    with pytest.raises(CapTooLarge):
        find_annihilator([x[0], x[1], x[2], x[3]], 30, Rng(39))


def test_algebraic_dependence_verdicts():
    x = xs(2)
    v = algebraic_dependence([x[0], x[0] * x[1]], Rng(40))
    assert v.independent and v.jacobian_rank == 2 and v.witness is None
    v = algebraic_dependence([x[0], x[0] ** 2 - 1], Rng(41))
    assert not v.independent and v.witness is not None


# absolute continuity ---------------------------------------------------------------------

def test_verdict_examples():
    x = xs(2)
    assert absolute_continuity_verdict(ChaosVector.from_polynomials([x[0], x[0] ** 2 - 1]), 10**4,
                                       Rng(42)).verdict is Verdict.NOT_AC
    v = absolute_continuity_verdict(ChaosVector.from_polynomials([x[0], x[1] ** 2 - 1]), 10**4, Rng(43))
    assert v.verdict is Verdict.AC and v.zero_fraction <= 1e-3
    f, g = K.basis(0, 0, dim=2), K.basis(1, 1, dim=2)
    F = ChaosVector.of(ChaosElement.from_kernels(f), ChaosElement.from_kernels(g))
    assert absolute_continuity_verdict(F, 10**4, Rng(44)).verdict is Verdict.AC
    with pytest.raises(RangeError):
        absolute_continuity_verdict(F, 100, Rng(44))


def test_mixed_evidence_is_reported():
    # (G0, G0 + 1e-6 G1^3) is absolutely continuous, but det Gamma / prod Gamma_ii
    # is about 9e-12 G1^4, so a sizeable fraction of samples looks singular
    x = xs(2)
    F = ChaosVector.from_polynomials([x[0], x[0] + 1e-6 * x[1] ** 3])
    with pytest.raises(MixedEvidence):
        absolute_continuity_verdict(F, 10**4, Rng(45))


def test_cross_check_examples():
    x = xs(2)
    r = cross_check_dependence(ChaosVector.from_polynomials([x[0], x[0] * x[1]]), Rng(46))
    assert r.verdict is Verdict.AC and r.jacobian_rank == 2 and r.witness is None
    r = cross_check_dependence(ChaosVector.from_polynomials([x[0] + x[1], x[0] * x[1],
                                                            x[0] ** 2 + x[1] ** 2 - 2]), Rng(47))
    assert r.verdict is Verdict.NOT_AC and r.jacobian_rank == 2 and r.witness_degree == 2
    r = cross_check_dependence(ChaosVector.from_polynomials([x[0], x[1]]), Rng(48))
    assert r.verdict is Verdict.AC and r.witness is None
    assert "AC" in r.summary()


def test_cross_check_limits():
    x = xs(2)
    with pytest.raises(RangeError):
        cross_check_dependence(ChaosVector.from_polynomials([x[0] ** 4, x[1]]), Rng(49))


@pytest.mark.parametrize("seed", range(5))
def test_verdict_invariant_under_linear_recombination(seed):
    gen = np.random.default_rng(seed)
    M = gen.standard_normal((2, 2))
    while abs(np.linalg.det(M)) < 0.1:
        M = gen.standard_normal((2, 2))
    x = xs(2)
    for F, want in [(ChaosVector.from_polynomials([x[0], x[0] * x[1]]), Verdict.AC),
                    (ChaosVector.from_polynomials([x[0], x[0] ** 2 - 1]), Verdict.NOT_AC)]:
        assert absolute_continuity_verdict(F.linear_map(M), 10**4, Rng(50 + seed)).verdict is want


# small balls -----------------------------------------------------------------------------

ALPHAS = np.logspace(-5, 0, 21)


def test_small_ball_gaussian_slopes():
    x = xs(2)
    fit = small_ball_exponent(x[0], ALPHAS, 10**6, Rng(51))
    assert abs(fit.slope - 1.0) <= 0.1
    fit = small_ball_exponent(x[0] ** 2, ALPHAS, 10**6, Rng(52))
    assert abs(fit.slope - 0.5) <= 0.1


def test_small_ball_det_gamma():
    x = xs(2)
    fit = small_ball_exponent(ChaosVector.from_polynomials([x[0], x[1] ** 2 - 1]), ALPHAS, 10**6, Rng(53))
    assert fit.degree == 4
    assert fit.slope >= 1 / 4 - 0.1


def test_small_ball_errors():
    x = xs(1)
    with pytest.raises(RangeError):
        small_ball_exponent(x[0], np.logspace(-2, 0, 5), 1000, Rng(54))
    with pytest.raises(Degenerate):
        small_ball_exponent(x[0] * 0.0, ALPHAS, 1000, Rng(55))


def test_small_ball_accepts_chaos_element():
    fit = small_ball_exponent(ChaosElement.gaussian(0, 1), ALPHAS, 10**5, Rng(56))
    assert fit.degree == 1 and fit.used.sum() >= 2
    assert math.isfinite(fit.slope)


def test_polynomial_format_uses_zero_based_names():
    t = xs(3)
    assert (t[0] ** 2 - 2 * t[1] - t[2]).format("t") == "+1*t0^2 -2*t1 -1*t2"
    assert str(Polynomial.from_pairs(2, [])) == "0"
