"""Malliavin derivatives and Malliavin matrices of chaos vectors.

In a finite basis, F_i = P_i(G_0, ..., G_{n-1}) and DF_i is the gradient of
P_i evaluated at G. The Malliavin matrix is Gamma = A A^T with
A_{ij} = dP_i/dx_j(G).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .chaos_model import ChaosElement, ChaosVector, _as_samples, from_polynomial
from .errors import OrderMismatch, RangeError
from .polynomial import Polynomial
from .rng import MCEstimate, Rng, mc_reduce
from .tensor_core import SymmetricKernel, contract, contract_sym, inner

# det Gamma / prod Gamma_ii lies in [0, 1] and carries rounding noise of order d * eps
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class MalliavinGradient:
    """Partials dP_i/dx_j, indexed ``partials[i][j]``."""

    partials: tuple[tuple[Polynomial, ...], ...]

    @property
    def d(self) -> int:
        return len(self.partials)

    @property
    def dim(self) -> int:
        return len(self.partials[0])

    def evaluate(self, samples) -> np.ndarray:
        """The matrix A at each sample: shape (m, d, n), or (d, n) for one sample."""
        x, single = _as_samples(samples, self.dim)
        A = np.zeros((x.shape[0], self.d, self.dim))
        for i, row in enumerate(self.partials):
            for j, p in enumerate(row):
                if not p.is_zero():
                    A[:, i, j] = p.evaluate(x)
        return A[0] if single else A

    def as_chaos(self) -> tuple[tuple[ChaosElement, ...], ...]:
        """Each partial re-expanded as a chaos element."""
        return tuple(tuple(from_polynomial(p) for p in row) for row in self.partials)


def gradient(F: ChaosVector) -> MalliavinGradient:
    polys = F.polynomials()
    return MalliavinGradient(tuple(tuple(p.partial(j) for j in range(F.dim)) for p in polys))


def gamma_from_jacobian(A: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...kj->...ik", A, A)


def gamma_at(F: ChaosVector, samples, grad: MalliavinGradient | None = None) -> np.ndarray:
    """Malliavin matrix at one sample (d, d) or a batch (m, d, d)."""
    grad = grad or gradient(F)
    return gamma_from_jacobian(grad.evaluate(samples))


def is_det_zero(det, gamma) -> np.ndarray | bool:
    """Scale-free zero test |det Gamma| <= ZERO_TOL * prod_i Gamma_ii.

    The ratio is the squared volume of the gradient rows after normalizing
    them, so it is invariant under rescaling each component.
    """
    gamma = np.asarray(gamma)
    diag = np.prod(np.diagonal(gamma, axis1=-2, axis2=-1), axis=-1)
    return np.abs(det) <= ZERO_TOL * diag


def det_gamma(F: ChaosVector, samples, grad: MalliavinGradient | None = None) -> np.ndarray:
    return np.linalg.det(gamma_at(F, samples, grad))


def expected_det_gamma_mc(F: ChaosVector, m: int, rng: Rng) -> MCEstimate:
    """Monte Carlo mean and standard error of det Gamma(F)."""
    grad = gradient(F)
    return mc_reduce(lambda x: np.linalg.det(gamma_at(F, x, grad)), F.dim, m, rng)


def _require_order(f: SymmetricKernel, order: int, name: str):
    if f.order != order:
        raise OrderMismatch(f"{name} must have order {order}, got {f.order}")


def expected_det_gamma_order1(f: SymmetricKernel, g: SymmetricKernel) -> float:
    """E[det Gamma] for (I_1(f), I_k(g)): k k! (|f|^2 |g|^2 - |f (x)_1 g|^2)."""
    _require_order(f, 1, "f")
    k = g.order
    if k < 1:
        raise OrderMismatch("g must have order >= 1")
    c = contract(f, g, 1)
    return k * math.factorial(k) * (inner(f, f) * inner(g, g) - c.norm() ** 2)


def expected_det_gamma_order2(f: SymmetricKernel, g: SymmetricKernel) -> float:
    """E[det Gamma] for (I_2(f), I_k(g)), k >= 2, from norms and contractions."""
    _require_order(f, 2, "f")
    k = g.order
    if k < 2:
        raise OrderMismatch("g must have order >= 2")
    kf = math.factorial(k)
    c1 = contract(f, g, 1).norm() ** 2
    c1s = contract_sym(f, g, 1).norm() ** 2
    c2 = contract(f, g, 2).norm() ** 2
    return (4 * k * kf * inner(f, f) * inner(g, g)
            + 8 * (k - 1) * k * kf * c1
            - 4 * k * k * kf * c1s
            - 4 * k * (k - 1) * kf * c2)


def expected_det_gamma_second_chaos(f: SymmetricKernel, g: SymmetricKernel) -> float:
    """The k = 2 form: 16(|f|^2|g|^2 - <f,g>^2) + 32(|f (x)_1 g|^2 - |f (x)~_1 g|^2)."""
    _require_order(f, 2, "f")
    _require_order(g, 2, "g")
    c1 = contract(f, g, 1).norm() ** 2
    c1s = contract_sym(f, g, 1).norm() ** 2
    fg = inner(f, g)
    return 16 * (inner(f, f) * inner(g, g) - fg * fg) + 32 * (c1 - c1s)


def covariance_matrix(F: ChaosVector) -> np.ndarray:
    """Exact covariance from the kernels: C_ij = sum_k k! <f_ik, f_jk>."""
    d = F.d
    C = np.zeros((d, d))
    for i in range(d):
        for j in range(i, d):
            a, b = F[i], F[j]
            q = min(a.max_order, b.max_order)
            C[i, j] = C[j, i] = sum(math.factorial(k) * inner(a.kernel(k), b.kernel(k))
                                    for k in range(1, q + 1))
    return C


def gamma_limit_matrix(F: ChaosVector) -> np.ndarray:
    """E[Gamma] for a vector whose components each sit in one chaos.

    For F_i in the k_i-th chaos, E<DF_i, DF_j> = k_i C_ij when k_i = k_j and 0
    otherwise, i.e. K^{1/2} C K^{1/2} with K = diag(k_i). This is the L^2 limit
    of Gamma along sequences converging to a Gaussian with covariance C.
    """
    orders = []
    for c in F:
        live = [k for k, f in enumerate(c.kernels) if k and not f.is_zero()]
        if len(live) != 1 or c.mean != 0.0:
            raise OrderMismatch("each component must lie in a single chaos")
        orders.append(live[0])
    r = np.sqrt(np.asarray(orders, dtype=float))
    return covariance_matrix(F) * np.outer(r, r)


def truncated_gamma_det(F: ChaosVector, sample, n_trunc: int,
                        grad: MalliavinGradient | None = None) -> float:
    """det of A_n A_n^T where A_n keeps the first n_trunc columns of A."""
    if not 1 <= n_trunc <= F.dim:
        raise RangeError(f"n_trunc must lie in [1, {F.dim}]")
    A = (grad or gradient(F)).evaluate(np.asarray(sample, dtype=float))
    if n_trunc < F.d:
        return 0.0  # rank of A_n is below d; LAPACK would return roundoff instead
    An = A[:, :n_trunc]
    return float(np.linalg.det(An @ An.T))


def cauchy_binet_det(A: np.ndarray) -> float:
    """det(A A^T) as the sum of squared d x d minors of the (d, n) matrix A."""
    d, n = A.shape
    if d > n:
        return 0.0
    return float(sum(np.linalg.det(A[:, list(J)]) ** 2 for J in itertools.combinations(range(n), d)))


def cov_of_squares(fi: SymmetricKernel, fj: SymmetricKernel) -> float:
    """Cov(I_ki(fi)^2, I_kj(fj)^2) expanded in contraction norms."""
    ki, kj = fi.order, fj.order
    if ki < 1 or kj < 1:
        raise OrderMismatch("orders must be >= 1")
    first = 0.0
    second = 0.0
    for r in range(1, min(ki, kj) + 1):
        first += math.comb(ki, r) * math.comb(kj, r) * contract(fi, fj, r).norm() ** 2
        second += (math.factorial(r) ** 2 * math.comb(ki, r) ** 2 * math.comb(kj, r) ** 2
                   * math.factorial(ki + kj - 2 * r) * contract_sym(fi, fj, r).norm() ** 2)
    return math.factorial(ki) * math.factorial(kj) * first + second
