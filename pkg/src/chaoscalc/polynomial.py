"""Sparse real multivariate polynomials.

Terms map exponent tuples to coefficients. Evaluation is vectorized over a
batch of points given as an (m, nvars) array.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class Polynomial:
    nvars: int
    terms: Mapping[Exponent, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for e, c in dict(self.terms).items():
            e = tuple(int(k) for k in e)
            if len(e) != self.nvars or any(k < 0 for k in e):
                raise ValueError(f"bad exponent {e} for {self.nvars} variables")
            c = float(c)
            if c != 0.0:
                clean[e] = clean.get(e, 0.0) + c
        object.__setattr__(self, "terms", {e: c for e, c in clean.items() if c != 0.0})

    @classmethod
    def constant(cls, c: float, nvars: int) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, i: int, nvars: int) -> "Polynomial":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def from_pairs(cls, nvars: int, pairs: Iterable) -> "Polynomial":
        acc: dict[Exponent, float] = defaultdict(float)
        for e, c in pairs:
            acc[tuple(e)] += float(c)
        return cls(nvars, acc)

    def to_pairs(self) -> list[tuple[list[int], float]]:
        return [(list(e), c) for e, c in sorted(self.terms.items())]

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient_norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.terms.values()))

    def prune(self, tol: float) -> "Polynomial":
        return Polynomial(self.nvars, {e: c for e, c in self.terms.items() if abs(c) > tol})

    def normalized(self) -> "Polynomial":
        nrm = self.coefficient_norm()
        return self if nrm == 0 else self * (1.0 / nrm)

    # arithmetic

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise DimensionMismatch("polynomials live in different rings")
            return other
        return Polynomial.constant(float(other), self.nvars)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = defaultdict(float, self.terms)
        for e, c in other.terms.items():
            out[e] += c
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return self * -1.0

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = float(other)
            return Polynomial(self.nvars, {e: c * v for e, v in self.terms.items()})
        other = self._coerce(other)
        out: dict[Exponent, float] = defaultdict(float)
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                out[tuple(a + b for a, b in zip(e1, e2))] += c1 * c2
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        result = Polynomial.constant(1.0, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def partial(self, j: int) -> "Polynomial":
        out = {}
        for e, c in self.terms.items():
            if e[j]:
                e2 = list(e)
                e2[j] -= 1
                out[tuple(e2)] = c * e[j]
        return Polynomial(self.nvars, out)

    def compose(self, polys: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute ``polys[i]`` for variable i."""
        if len(polys) != self.nvars:
            raise DimensionMismatch("need one polynomial per variable")
        nv = polys[0].nvars
        result = Polynomial(nv, {})
        powers = [[Polynomial.constant(1.0, nv)] for _ in polys]
        for e, c in self.terms.items():
            term = Polynomial.constant(c, nv)
            for i, k in enumerate(e):
                while len(powers[i]) <= k:
                    powers[i].append(powers[i][-1] * polys[i])
                term = term * powers[i][k]
            result = result + term
        return result

    def almost_equal(self, other: "Polynomial", tol: float = 1e-9) -> bool:
        diff = self - other
        return all(abs(c) <= tol for c in diff.terms.values())

    # evaluation

    def __call__(self, points) -> np.ndarray | float:
        return self.evaluate(points)

    def evaluate(self, points) -> np.ndarray | float:
        x = np.asarray(points, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.nvars:
            raise DimensionMismatch(f"expected {self.nvars} coordinates, got {x.shape[1]}")
        out = np.zeros(x.shape[0])
        if self.terms:
            maxdeg = [max(e[j] for e in self.terms) for j in range(self.nvars)]
            pw = [np.cumprod(np.hstack([np.ones((x.shape[0], 1)),
                                        np.repeat(x[:, [j]], maxdeg[j], axis=1)]), axis=1)
                  for j in range(self.nvars)]
            for e, c in self.terms.items():
                term = np.full(x.shape[0], c)
                for j, k in enumerate(e):
                    if k:
                        term *= pw[j][:, k]
                out += term
        return float(out[0]) if single else out

    def __str__(self) -> str:
        return self.format()

    def format(self, var: str = "x") -> str:
        """Human-readable form with 0-based variable names var0, var1, ... (matching the exponent order)."""
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), key=lambda t: (-sum(t[0]), [-k for k in t[0]])):
            mono = "*".join(f"{var}{j}" + (f"^{k}" if k > 1 else "") for j, k in enumerate(e) if k)
            parts.append(f"{c:+.12g}" + (f"*{mono}" if mono else ""))
        return " ".join(parts)
