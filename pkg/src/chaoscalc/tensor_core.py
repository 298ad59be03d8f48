"""Symmetric tensors over a finite orthonormal basis e_0, ..., e_{n-1}.

A :class:`SymmetricKernel` stores one coefficient per permutation orbit,
keyed by the sorted multi-index. The stored value is the entry of the full
tensor at every index of that orbit, so ``e_0 (x)~ e_1`` is ``{(0, 1): 0.5}``.
Indices are 0-based throughout.

Contractions produce :class:`RawTensor` objects, which hold a sparse map over
unsorted multi-indices and need not be symmetric.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch, OrderMismatch, RangeError

Index = tuple[int, ...]


def hermite(k: int, x):
    """Probabilists' Hermite polynomial H_k evaluated at ``x`` (scalar or array).

    Uses H_{k+1} = x H_k - k H_{k-1}.
    """
    if k < 0:
        raise RangeError("Hermite degree must be >= 0")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if k == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for j in range(1, k):
        h_prev, h = h, x * h - j * h_prev
    return h if h.ndim else float(h)


def hermite_table(x: np.ndarray, kmax: int) -> np.ndarray:
    """Stack H_0(x), ..., H_kmax(x) along a new trailing axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (kmax + 1,))
    out[..., 0] = 1.0
    if kmax >= 1:
        out[..., 1] = x
    for j in range(1, kmax):
        out[..., j + 1] = x * out[..., j] - j * out[..., j - 1]
    return out


def hermite_coefficients(k: int) -> np.ndarray:
    """Monomial coefficients c_0..c_k of H_k, lowest degree first."""
    prev = np.zeros(k + 1)
    prev[0] = 1.0
    if k == 0:
        return prev
    cur = np.zeros(k + 1)
    cur[1] = 1.0
    for j in range(1, k):
        nxt = np.zeros(k + 1)
        nxt[1:] = cur[:-1]
        nxt -= j * prev
        prev, cur = cur, nxt
    return cur


def orbit_size(idx: Index) -> int:
    """Number of distinct rearrangements of a multi-index."""
    size = math.factorial(len(idx))
    for mult in Counter(idx).values():
        size //= math.factorial(mult)
    return size


def _orbit(idx: Index) -> set[Index]:
    return set(itertools.permutations(idx))


@dataclass(frozen=True)
class RawTensor:
    order: int
    dim: int
    entries: Mapping[Index, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.entries) > self.dim ** self.order:
            raise RangeError("more entries than n**order")
        for idx in self.entries:
            if len(idx) != self.order or any(not 0 <= i < self.dim for i in idx):
                raise RangeError(f"bad index {idx} for order {self.order}, dim {self.dim}")

    def inner(self, other: "RawTensor") -> float:
        _check_same(self, other)
        small, big = sorted((self.entries, other.entries), key=len)
        return float(sum(v * big.get(idx, 0.0) for idx, v in small.items()))

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.entries.values()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim,) * self.order)
        for idx, v in self.entries.items():
            out[idx] += v
        return out

    @classmethod
    def from_dense(cls, arr: np.ndarray, tol: float = 0.0, dim: int | None = None) -> "RawTensor":
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 0:
            return cls(0, dim or 1, {(): float(arr)} if abs(arr) > tol else {})
        entries = {tuple(int(i) for i in idx): float(arr[idx])
                   for idx in zip(*np.nonzero(np.abs(arr) > tol))}
        return cls(arr.ndim, arr.shape[0], entries)

    def __sub__(self, other: "RawTensor") -> "RawTensor":
        _check_same(self, other)
        out = dict(self.entries)
        for idx, v in other.entries.items():
            out[idx] = out.get(idx, 0.0) - v
        return RawTensor(self.order, self.dim, {k: v for k, v in out.items() if v != 0.0})


@dataclass(frozen=True)
class SymmetricKernel:
    order: int
    dim: int
    coeffs: Mapping[Index, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise RangeError("basis dimension must be >= 1")
        if self.order < 0:
            raise RangeError("order must be >= 0")
        canon: dict[Index, float] = {}
        for idx, v in dict(self.coeffs).items():
            idx = tuple(sorted(int(i) for i in idx))
            if len(idx) != self.order or any(not 0 <= i < self.dim for i in idx):
                raise RangeError(f"bad index {idx} for order {self.order}, dim {self.dim}")
            canon[idx] = canon.get(idx, 0.0) + float(v)
        object.__setattr__(self, "coeffs", {k: v for k, v in canon.items() if v != 0.0})

    # construction helpers

    @classmethod
    def scalar(cls, value: float, dim: int) -> "SymmetricKernel":
        return cls(0, dim, {(): value})

    @classmethod
    def zero(cls, order: int, dim: int) -> "SymmetricKernel":
        return cls(order, dim, {})

    @classmethod
    def basis(cls, *idx: int, dim: int, coef: float = 1.0) -> "SymmetricKernel":
        """``coef`` times the symmetrization of e_{i1} (x) ... (x) e_{ik}."""
        return cls(len(idx), dim, {tuple(sorted(idx)): coef / orbit_size(tuple(idx))})

    @classmethod
    def from_dense(cls, arr: np.ndarray, dim: int | None = None) -> "SymmetricKernel":
        """Symmetrize a dense array and store it canonically.

        ``dim`` is only needed for 0-d arrays, which carry no basis size.
        """
        return symmetrize(RawTensor.from_dense(arr, dim=dim))

    @classmethod
    def random(cls, order: int, dim: int, gen: np.random.Generator,
               density: float = 1.0) -> "SymmetricKernel":
        coeffs = {}
        for idx in itertools.combinations_with_replacement(range(dim), order):
            if density >= 1.0 or gen.random() < density:
                coeffs[idx] = gen.standard_normal()
        return cls(order, dim, coeffs)

    # algebra

    def __add__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        _check_same(self, other)
        out = dict(self.coeffs)
        for idx, v in other.coeffs.items():
            out[idx] = out.get(idx, 0.0) + v
        return SymmetricKernel(self.order, self.dim, out)

    def __mul__(self, c: float) -> "SymmetricKernel":
        return SymmetricKernel(self.order, self.dim, {k: c * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "SymmetricKernel":
        return self * -1.0

    def __sub__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        return self + (-other)

    @property
    def value(self) -> float:
        """The scalar held by an order-0 kernel."""
        if self.order != 0:
            raise OrderMismatch("value is only defined for order-0 kernels")
        return self.coeffs.get((), 0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in self.coeffs.values())

    def expand(self) -> RawTensor:
        """Full sparse tensor with every orbit member written out."""
        entries = {}
        for idx, v in self.coeffs.items():
            for p in _orbit(idx):
                entries[p] = v
        return RawTensor(self.order, self.dim, entries)

    def to_dense(self) -> np.ndarray:
        return self.expand().to_dense()

    def norm(self) -> float:
        return math.sqrt(inner(self, self))

    def with_dim(self, dim: int) -> "SymmetricKernel":
        """Same kernel viewed in a basis of size ``dim`` (>= used indices)."""
        return SymmetricKernel(self.order, dim, self.coeffs)


def _check_same(a, b):
    if a.order != b.order:
        raise OrderMismatch(f"orders differ: {a.order} vs {b.order}")
    if a.dim != b.dim:
        raise DimensionMismatch(f"basis dimensions differ: {a.dim} vs {b.dim}")


def inner(f: SymmetricKernel, g: SymmetricKernel) -> float:
    """Full-tensor inner product <f, g> on H^{(x)k} (no k! factor)."""
    _check_same(f, g)
    small, big = sorted((f.coeffs, g.coeffs), key=len)
    return float(sum(orbit_size(idx) * v * big.get(idx, 0.0) for idx, v in small.items()))


def _split(t: RawTensor, r: int) -> dict[Index, list[tuple[Index, float]]]:
    groups: dict[Index, list[tuple[Index, float]]] = defaultdict(list)
    for idx, v in t.entries.items():
        groups[idx[:r]].append((idx[r:], v))
    return groups


def contract(f: SymmetricKernel | RawTensor, g: SymmetricKernel | RawTensor, r: int) -> RawTensor:
    """Contraction f (x)_r g over r shared slots.

    The leading r slots of each argument are summed against each other; the
    result lists f's remaining slots first, then g's. ``r = 0`` is the plain
    tensor product.
    """
    if f.dim != g.dim:
        raise DimensionMismatch(f"basis dimensions differ: {f.dim} vs {g.dim}")
    if not 0 <= r <= min(f.order, g.order):
        raise RangeError(f"contraction order {r} outside [0, {min(f.order, g.order)}]")
    ft = f.expand() if isinstance(f, SymmetricKernel) else f
    gt = g.expand() if isinstance(g, SymmetricKernel) else g
    gf, gg = _split(ft, r), _split(gt, r)
    out: dict[Index, float] = defaultdict(float)
    for key, f_rest in gf.items():
        g_rest = gg.get(key)
        if not g_rest:
            continue
        for a, va in f_rest:
            for b, vb in g_rest:
                out[a + b] += va * vb
    order = f.order + g.order - 2 * r
    return RawTensor(order, f.dim, {k: v for k, v in out.items() if v != 0.0})


def symmetrize(t: RawTensor) -> SymmetricKernel:
    """(1/k!) sum over permutations of t, in canonical storage."""
    groups: dict[Index, list[float]] = defaultdict(list)
    for idx, v in t.entries.items():
        groups[tuple(sorted(idx))].append(v)
    out = {}
    for idx, vals in groups.items():
        size = orbit_size(idx)
        if len(vals) == size and all(v == vals[0] for v in vals):
            out[idx] = vals[0]  # already symmetric on this orbit: keep it bit-exact
        else:
            out[idx] = math.fsum(vals) / size
    return SymmetricKernel(t.order, t.dim, out)


def contract_sym(f: SymmetricKernel, g: SymmetricKernel, r: int) -> SymmetricKernel:
    """Symmetrized contraction f (x)~_r g."""
    return symmetrize(contract(f, g, r))


def kernel_from_pairs(order: int, dim: int, pairs: Iterable) -> SymmetricKernel:
    """Build a kernel from ``(multi_index, coefficient)`` pairs.

    Each pair sets the full-tensor entry of the orbit of ``multi_index``;
    repeated orbits accumulate.
    """
    coeffs: dict[Index, float] = {}
    for idx, c in pairs:
        key = tuple(sorted(int(i) for i in idx))
        coeffs[key] = coeffs.get(key, 0.0) + float(c)
    return SymmetricKernel(order, dim, coeffs)
