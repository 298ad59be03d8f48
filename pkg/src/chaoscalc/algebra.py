"""Algebraic dependence of polynomial families and absolute-continuity tests.

Three criteria are compared for a chaos vector F = (P_1(G), ..., P_d(G)):

* the expected Malliavin determinant (Monte Carlo, with a 0-1 zero test),
* the generic rank of the Jacobian of (P_1, ..., P_d), and
* existence of an annihilating polynomial H with H(P_1, ..., P_d) = 0 of
  degree at most d q^(d-1).

For a vector whose components live in chaoses 1..q, the three agree.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chaos_model import ChaosElement, ChaosVector
from .errors import CapTooLarge, Contradiction, Degenerate, MixedEvidence, RangeError
from .malliavin import gamma_at, gradient, is_det_zero
from .polynomial import Polynomial
from .rng import Moments, Rng

RANK_TOL = 1e-8
NULL_TOL = 1e-8
VERIFY_TOL = 1e-6
# a genuine null direction sits many orders of magnitude below the rest of
# the spectrum; ill-conditioning alone decays smoothly
NULL_GAP = 1e4
MAX_MONOMIALS = 20_000
# degrees are tried one at a time while the basis stays this small, then the
# search jumps to the cap
STEPWISE_MONOMIALS = 1_000


def witness_degree_bound(d: int, q: int) -> int:
    """Degree bound d q^(d-1) for an annihilating polynomial."""
    return d * q ** (d - 1)


def _stack(polys: Sequence[Polynomial], x: np.ndarray) -> np.ndarray:
    return np.column_stack([p.evaluate(x) for p in polys])


def jacobian_rank(polys: Sequence[Polynomial], trials: int, rng: Rng) -> int:
    """Generic rank of the d x n Jacobian, from ``trials`` Gaussian points."""
    if not polys or trials < 1:
        raise RangeError("need at least one polynomial and one trial")
    n = polys[0].nvars
    partials = [[p.partial(j) for j in range(n)] for p in polys]
    x = rng.gaussian(trials, n)
    J = np.zeros((trials, len(polys), n))
    for i, row in enumerate(partials):
        for j, p in enumerate(row):
            if not p.is_zero():
                J[:, i, j] = p.evaluate(x)
    best = 0
    for Jt in J:
        s = np.linalg.svd(Jt, compute_uv=False)
        if s.size and s[0] > 0:
            best = max(best, int((s > RANK_TOL * s[0]).sum()))
    return best


def monomial_exponents(d: int, degree: int) -> list[tuple[int, ...]]:
    """All exponents in d variables of total degree <= ``degree``, graded."""
    out = []
    for deg in range(degree + 1):
        for c in itertools.combinations_with_replacement(range(d), deg):
            e = [0] * d
            for i in c:
                e[i] += 1
            out.append(tuple(e))
    return out


def _evaluation_matrix(t: np.ndarray, exps: np.ndarray, degree: int) -> np.ndarray:
    # rows scaled by (1 + |t|^2)^(-degree/2): the nullspace is unchanged and
    # heavy-tailed rows no longer dominate high-degree columns
    w = 1.0 / np.sqrt(1.0 + (t * t).sum(axis=1))
    u = t * w[:, None]
    M = np.ones((t.shape[0], len(exps)))
    for i in range(t.shape[1]):
        M *= u[:, [i]] ** exps[:, i]
    M *= w[:, None] ** (degree - exps.sum(axis=1))
    return M


def verify_annihilator(H: Polynomial, polys: Sequence[Polynomial], rng: Rng,
                       points: int = 100) -> float:
    """Largest |H(P_1(x), ..., P_d(x))| over fresh Gaussian points."""
    x = rng.gaussian(points, polys[0].nvars)
    return float(np.abs(H.evaluate(_stack(polys, x))).max())


def _null_candidate(polys, degree, rng) -> Polynomial | None:
    d = len(polys)
    exps = np.array(monomial_exponents(d, degree))
    m = 2 * len(exps)
    t = _stack(polys, rng.gaussian(m, polys[0].nvars))
    scale = np.sqrt((t * t).mean(axis=0))
    scale[scale == 0] = 1.0
    M = _evaluation_matrix(t / scale, exps, degree)
    colnorm = np.linalg.norm(M, axis=0)
    colnorm[colnorm == 0] = 1.0
    M /= colnorm
    s = np.linalg.svd(M, compute_uv=False)
    null = s < NULL_TOL * s[0]
    if not null.any():
        return None
    k = int(np.argmax(null))
    if k > 0 and s[k - 1] < NULL_GAP * s[k]:
        return None
    vt = np.linalg.svd(M, full_matrices=False)[2]
    coef = vt[-1] / colnorm / np.prod(scale ** exps, axis=1)
    coef /= np.linalg.norm(coef)
    H = Polynomial(d, {tuple(int(a) for a in e): c for e, c in zip(exps, coef)})
    return H.prune(1e-12).normalized()


def find_annihilator(polys: Sequence[Polynomial], degree_cap: int | None = None,
                     rng: Rng | None = None) -> Polynomial | None:
    """Search for a nonzero H of degree <= ``degree_cap`` with H(P_1, ..., P_d) = 0.

    Returns a unit-norm H (coefficients in the monomial basis of t_1..t_d) or
    None. The default cap is d q^(d-1) with q the largest degree in ``polys``.
    Candidates come from the numerical nullspace of the monomial evaluation
    matrix at Gaussian points and must vanish at 100 fresh points.
    """
    rng = rng or Rng(0)
    d = len(polys)
    q = max(p.degree for p in polys)
    if degree_cap is None:
        degree_cap = witness_degree_bound(d, max(q, 1))
    if degree_cap < 1:
        raise RangeError("degree_cap must be >= 1")
    if math.comb(degree_cap + d, d) > MAX_MONOMIALS:
        raise CapTooLarge(f"{math.comb(degree_cap + d, d)} monomials exceed {MAX_MONOMIALS}")
    degrees = [D for D in range(1, degree_cap + 1) if math.comb(D + d, d) <= STEPWISE_MONOMIALS]
    if not degrees or degrees[-1] != degree_cap:
        degrees.append(degree_cap)
    for D in degrees:
        H = _null_candidate(polys, D, rng)
        if H is None:
            continue
        if verify_annihilator(H, polys, rng) <= VERIFY_TOL * (1.0 + H.coefficient_norm()):
            return H
    return None


@dataclass(frozen=True)
class DependenceVerdict:
    independent: bool
    jacobian_rank: int
    witness: Polynomial | None = None


def algebraic_dependence(polys: Sequence[Polynomial], rng: Rng, trials: int = 5,
                         degree_cap: int | None = None) -> DependenceVerdict:
    rank = jacobian_rank(polys, trials, rng)
    H = find_annihilator(polys, degree_cap, rng)
    independent = rank == len(polys)
    if independent == (H is not None):
        raise Contradiction(f"Jacobian rank {rank} of {len(polys)} but witness "
                            f"{'found' if H is not None else 'missing'}")
    return DependenceVerdict(independent, rank, H)


class Verdict(str, enum.Enum):
    AC = "AC"
    NOT_AC = "NOT_AC"


@dataclass(frozen=True)
class ACVerdict:
    verdict: Verdict
    det_mean: float
    det_stderr: float
    zero_fraction: float
    samples: int


def absolute_continuity_verdict(F: ChaosVector, m: int, rng: Rng) -> ACVerdict:
    """Decide absolute continuity of the law of F from samples of det Gamma.

    NOT_AC when every sampled determinant vanishes (scale-free test); AC when
    almost none vanish and the mean exceeds three standard errors. Anything
    in between raises :class:`MixedEvidence`.
    """
    if m < 10_000:
        raise RangeError("absolute_continuity_verdict needs m >= 10^4")
    grad = gradient(F)
    moments = Moments()
    zeros = 0
    for _, size, gen in rng.chunks(m):
        g = gamma_at(F, gen.standard_normal((size, F.dim)), grad)
        det = np.linalg.det(g)
        zeros += int(is_det_zero(det, g).sum())
        moments = moments.merge(Moments.of(det))
    est = moments.estimate()
    frac = zeros / m
    if zeros == m:
        return ACVerdict(Verdict.NOT_AC, est.mean, est.stderr, frac, m)
    if frac <= 1e-3 and est.mean > 3 * est.stderr:
        return ACVerdict(Verdict.AC, est.mean, est.stderr, frac, m)
    raise MixedEvidence(f"zero fraction {frac:.4g}, E[det]={est.mean:.4g} +/- {est.stderr:.3g}")


@dataclass(frozen=True)
class DependenceCrossCheck:
    d: int
    q: int
    degree_cap: int
    ac: ACVerdict
    jacobian_rank: int
    witness: Polynomial | None

    @property
    def verdict(self) -> Verdict:
        return self.ac.verdict

    @property
    def witness_degree(self) -> int | None:
        return None if self.witness is None else self.witness.degree

    def summary(self) -> str:
        w = "none" if self.witness is None else f"degree {self.witness.degree}: {self.witness}"
        return (f"{self.verdict.value}: E[det Gamma]={self.ac.det_mean:.6g} "
                f"(+/- {self.ac.det_stderr:.3g}), Jacobian rank {self.jacobian_rank}/{self.d}, "
                f"witness {w} (cap {self.degree_cap})")


def cross_check_dependence(F: ChaosVector, rng: Rng, m: int = 10_000, trials: int = 5) -> DependenceCrossCheck:
    """Run all three criteria on F and require them to agree.

    Raises :class:`Contradiction` naming the disagreeing pair.
    """
    polys = F.polynomials()
    q = max(p.degree for p in polys)
    if F.d > 3 or q > 3 or F.dim > 6:
        raise RangeError("cross-check limited to d <= 3, q <= 3, n <= 6")
    cap = witness_degree_bound(F.d, max(q, 1))
    ac = absolute_continuity_verdict(F, m, rng)
    rank = jacobian_rank(polys, trials, rng)
    H = find_annihilator(polys, cap, rng)
    not_ac = ac.verdict is Verdict.NOT_AC
    deficient = rank < F.d
    found = H is not None
    if not (not_ac == deficient == found):
        raise Contradiction(f"verdict {ac.verdict.value}, Jacobian rank {rank}/{F.d}, "
                            f"witness {'found' if found else 'absent'}")
    if H is not None and H.degree > cap:
        raise Contradiction(f"witness degree {H.degree} exceeds bound {cap}")
    return DependenceCrossCheck(F.d, q, cap, ac, rank, H)


@dataclass(frozen=True)
class SmallBallFit:
    slope: float
    degree: int
    alphas: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    used: np.ndarray = field(repr=False)


def _small_ball_functional(Q):
    if isinstance(Q, ChaosVector):
        grad = gradient(Q)
        polys = Q.polynomials()
        q = max(p.degree for p in polys)
        return Q.dim, 2 * Q.d * (q - 1), lambda x: np.abs(np.linalg.det(gamma_at(Q, x, grad)))
    if isinstance(Q, ChaosElement):
        Q = Q.to_polynomial()
    if isinstance(Q, Polynomial):
        return Q.nvars, Q.degree, lambda x: np.abs(Q.evaluate(x))
    raise TypeError(f"unsupported small-ball target {type(Q).__name__}")


def small_ball_exponent(Q, alphas: Sequence[float], m: int, rng: Rng) -> SmallBallFit:
    """Fit the exponent of P(|Q| <= alpha) against alpha on a log-log scale.

    ``Q`` is a polynomial, a chaos element, or a chaos vector (meaning its
    Malliavin determinant, with degree bound 2 d (q - 1)). Only grid points
    with 10/m <= P <= 0.5 enter the least-squares fit.
    """
    alphas = np.sort(np.asarray(alphas, dtype=float))
    if alphas[0] <= 0 or alphas[-1] / alphas[0] < 1e3:
        raise RangeError("alpha grid must be positive and span at least 3 decades")
    n, degree, fn = _small_ball_functional(Q)
    counts = np.zeros(alphas.size, dtype=np.int64)
    nonzero = 0
    for _, size, gen in rng.chunks(m):
        v = np.sort(fn(gen.standard_normal((size, n))))
        counts += np.searchsorted(v, alphas, side="right")
        nonzero += int((v > 0).sum())
    if nonzero == 0:
        raise Degenerate("Q vanishes on every sample")
    p = counts / m
    used = (p >= 10.0 / m) & (p <= 0.5)
    if used.sum() < 2:
        raise RangeError("fewer than two grid points inside the fit window")
    slope = float(np.polyfit(np.log(alphas[used]), np.log(p[used]), 1)[0])
    return SmallBallFit(slope, degree, alphas, p, used)
