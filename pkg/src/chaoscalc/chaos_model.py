"""Finite Wiener chaos expansions as functions of G_j = I_1(e_j).

A :class:`ChaosElement` is F = f_0 + sum_k I_k(f_k) over a basis of size n.
It is evaluated at Gaussian samples g = (G_0, ..., G_{n-1}) via

    I_k(e_{l_1} (x) ... (x) e_{l_k}) = prod_l H_{k_l}(G_l),

where k_l counts how often l occurs in the multi-index.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, RangeError
from .polynomial import Polynomial
from .rng import MCEstimate, Rng, mc_reduce
from .tensor_core import (SymmetricKernel, hermite_coefficients, hermite_table, inner,
                          orbit_size)


def _as_samples(samples, n: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(samples, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != n:
        raise DimensionMismatch(f"sample has {x.shape[-1]} coordinates, basis has {n}")
    return x, single


def _orbit_terms(f: SymmetricKernel, htab: np.ndarray) -> np.ndarray:
    out = np.zeros(htab.shape[0])
    for idx, c in f.coeffs.items():
        term = np.full(htab.shape[0], c * orbit_size(idx))
        for l, mult in Counter(idx).items():
            term *= htab[:, l, mult]
        out += term
    return out


def eval_multiple_integral(f: SymmetricKernel, samples) -> np.ndarray | float:
    """I_k(f) at one sample (shape (n,)) or a batch (shape (m, n))."""
    x, single = _as_samples(samples, f.dim)
    if f.order == 0:
        out = np.full(x.shape[0], f.value)
    else:
        out = _orbit_terms(f, hermite_table(x, f.order))
    return float(out[0]) if single else out


@lru_cache(maxsize=None)
def _hermite_poly_1d(k: int) -> tuple[float, ...]:
    return tuple(hermite_coefficients(k))


@lru_cache(maxsize=None)
def _monomial_in_hermite(p: int) -> tuple[tuple[int, float], ...]:
    # x^p = sum_j p! / (j! 2^i i!) H_j(x), with p - j = 2i
    return tuple((p - 2 * i, math.factorial(p) / (math.factorial(p - 2 * i) * 2 ** i * math.factorial(i)))
                 for i in range(p // 2 + 1))


@dataclass(frozen=True)
class ChaosElement:
    """F = f_0 + sum_{k=1}^q I_k(f_k); ``kernels[k]`` has order k."""

    dim: int
    kernels: tuple[SymmetricKernel, ...]

    def __post_init__(self):
        ks = tuple(self.kernels)
        if not ks:
            ks = (SymmetricKernel.scalar(0.0, self.dim),)
        for k, f in enumerate(ks):
            if f.order != k:
                raise RangeError(f"kernel at position {k} has order {f.order}")
            if f.dim != self.dim:
                raise DimensionMismatch(f"kernel of order {k} has dim {f.dim}, expected {self.dim}")
        while len(ks) > 1 and ks[-1].is_zero():
            ks = ks[:-1]
        object.__setattr__(self, "kernels", ks)

    @classmethod
    def from_kernels(cls, *kernels: SymmetricKernel, constant: float = 0.0,
                     dim: int | None = None) -> "ChaosElement":
        """Sum of I_k(f) over the given kernels (orders may repeat) plus a constant."""
        if dim is None:
            if not kernels:
                raise ValueError("dim is required without kernels")
            dim = kernels[0].dim
        q = max((f.order for f in kernels), default=0)
        slots = [SymmetricKernel.zero(k, dim) for k in range(q + 1)]
        slots[0] = SymmetricKernel.scalar(constant, dim)
        for f in kernels:
            slots[f.order] = slots[f.order] + f
        return cls(dim, tuple(slots))

    @classmethod
    def constant(cls, c: float, dim: int) -> "ChaosElement":
        return cls(dim, (SymmetricKernel.scalar(c, dim),))

    @classmethod
    def gaussian(cls, j: int, dim: int, coef: float = 1.0) -> "ChaosElement":
        """coef * G_j = I_1(coef * e_j)."""
        return cls.from_kernels(SymmetricKernel.basis(j, dim=dim, coef=coef))

    @property
    def max_order(self) -> int:
        return len(self.kernels) - 1

    @property
    def mean(self) -> float:
        return self.kernels[0].value

    def kernel(self, k: int) -> SymmetricKernel:
        if k < len(self.kernels):
            return self.kernels[k]
        return SymmetricKernel.zero(k, self.dim)

    def __add__(self, other) -> "ChaosElement":
        if not isinstance(other, ChaosElement):
            return self + ChaosElement.constant(float(other), self.dim)
        if other.dim != self.dim:
            raise DimensionMismatch("chaos elements over different bases")
        q = max(self.max_order, other.max_order)
        return ChaosElement(self.dim, tuple(self.kernel(k) + other.kernel(k) for k in range(q + 1)))

    __radd__ = __add__

    def __mul__(self, c: float) -> "ChaosElement":
        return ChaosElement(self.dim, tuple(f * float(c) for f in self.kernels))

    __rmul__ = __mul__

    def __neg__(self) -> "ChaosElement":
        return self * -1.0

    def __sub__(self, other) -> "ChaosElement":
        return self + (-other)

    def variance(self) -> float:
        """Exact variance, sum_k k! ||f_k||^2."""
        return sum(math.factorial(k) * inner(f, f) for k, f in enumerate(self.kernels) if k)

    def eval(self, samples) -> np.ndarray | float:
        return evaluate(self, samples)

    def to_polynomial(self) -> Polynomial:
        return to_polynomial(self)


def evaluate(F: ChaosElement, samples) -> np.ndarray | float:
    """f_0 + sum_k I_k(f_k) at one sample or a batch."""
    x, single = _as_samples(samples, F.dim)
    out = np.full(x.shape[0], F.mean)
    if F.max_order >= 1:
        htab = hermite_table(x, F.max_order)
        for f in F.kernels[1:]:
            if f.coeffs:
                out += _orbit_terms(f, htab)
    return float(out[0]) if single else out


def to_polynomial(F: ChaosElement) -> Polynomial:
    """Explicit polynomial P with F = P(G_0, ..., G_{n-1})."""
    n = F.dim
    terms: dict[tuple[int, ...], float] = defaultdict(float)
    terms[(0,) * n] += F.mean
    for f in F.kernels[1:]:
        for idx, c in f.coeffs.items():
            partial = {(0,) * n: c * orbit_size(idx)}
            for l, mult in Counter(idx).items():
                hc = _hermite_poly_1d(mult)
                nxt: dict[tuple[int, ...], float] = defaultdict(float)
                for e, v in partial.items():
                    for p, a in enumerate(hc):
                        if a:
                            e2 = list(e)
                            e2[l] += p
                            nxt[tuple(e2)] += v * a
                partial = nxt
            for e, v in partial.items():
                terms[e] += v
    return Polynomial(n, terms)


def from_polynomial(P: Polynomial) -> ChaosElement:
    """Chaos expansion of P(G_0, ..., G_{n-1}) by Hermite re-expansion."""
    n = P.nvars
    by_order: dict[int, dict[tuple[int, ...], float]] = defaultdict(lambda: defaultdict(float))
    for e, c in P.terms.items():
        combos = [((), c)]
        for l, p in enumerate(e):
            if p == 0:
                continue
            combos = [(mults + ((l, j),), v * a)
                      for mults, v in combos for j, a in _monomial_in_hermite(p)]
        for mults, v in combos:
            idx = tuple(sorted(l for l, j in mults for _ in range(j)))
            by_order[len(idx)][idx] += v / orbit_size(idx)
    q = max(by_order, default=0)
    kernels = [SymmetricKernel(k, n, by_order.get(k, {})) for k in range(q + 1)]
    if not kernels[0].coeffs:
        kernels[0] = SymmetricKernel.scalar(0.0, n)
    return ChaosElement(n, tuple(kernels))


def ou_generator(F: ChaosElement) -> ChaosElement:
    """Ornstein-Uhlenbeck generator L: multiplies the k-th chaos by -k."""
    return ChaosElement(F.dim, tuple(f * (-float(k)) for k, f in enumerate(F.kernels)))


def delta_of_D(F: ChaosElement) -> ChaosElement:
    """delta(DF) = -LF."""
    return -ou_generator(F)


def sample_moments(F: ChaosElement, p: int, m: int, rng: Rng, absolute: bool = False) -> MCEstimate:
    """Empirical E[F^p] (or E|F|^p) over m draws, with its standard error."""
    if p < 1 or m < 1:
        raise RangeError("need p >= 1 and m >= 1")

    def fn(x):
        v = evaluate(F, x)
        return np.abs(v) ** p if absolute else v ** p

    return mc_reduce(fn, F.dim, m, rng)


@dataclass(frozen=True)
class ChaosVector:
    components: tuple[ChaosElement, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise RangeError("a chaos vector needs d >= 1 components")
        if len({c.dim for c in comps}) != 1:
            raise DimensionMismatch("components must share one basis")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *components: ChaosElement) -> "ChaosVector":
        return cls(tuple(components))

    @classmethod
    def from_polynomials(cls, polys: Iterable[Polynomial]) -> "ChaosVector":
        return cls(tuple(from_polynomial(p) for p in polys))

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def max_order(self) -> int:
        return max(c.max_order for c in self.components)

    def __getitem__(self, i: int) -> ChaosElement:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return self.d

    def eval(self, samples) -> np.ndarray:
        """(m, d) array of component values (or (d,) for one sample)."""
        x, single = _as_samples(samples, self.dim)
        out = np.column_stack([evaluate(c, x) for c in self.components])
        return out[0] if single else out

    def polynomials(self) -> list[Polynomial]:
        return [to_polynomial(c) for c in self.components]

    def linear_map(self, M: Sequence[Sequence[float]]) -> "ChaosVector":
        """The vector M F, mixing components linearly."""
        M = np.asarray(M, dtype=float)
        if M.shape[1] != self.d:
            raise DimensionMismatch("matrix width must equal d")
        comps = []
        for row in M:
            acc = ChaosElement.constant(0.0, self.dim)
            for a, c in zip(row, self.components):
                acc = acc + c * a
            comps.append(acc)
        return ChaosVector(tuple(comps))

    def sample(self, m: int, rng: Rng) -> np.ndarray:
        """m i.i.d. draws of F as an (m, d) array."""
        out = np.empty((m, self.d))
        for start, size, gen in rng.chunks(m):
            out[start:start + size] = self.eval(gen.standard_normal((size, self.dim)))
        return out
