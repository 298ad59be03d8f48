"""Config files for the CLI.

Files are YAML (JSON is accepted as-is). Grammar, by example::

    n: 3                      # basis size
    seed: 7
    samples: 20000
    components:               # a chaos vector, one entry per component
      - constant: 0.0         # optional mean f_0
        kernels:
          - order: 1
            entries: [[[0], 1.0]]          # (multi-index, coefficient) pairs
      - polynomial: [[[2, 0, 0], 1.0], [[0, 0, 0], -1.0]]   # x0^2 - 1

Kernel entries give the full-tensor value on the orbit of the multi-index
(indices 0-based). A component may instead be a ``polynomial`` in the
Gaussians, listed as (exponent vector, coefficient) pairs.

Polynomial families for ``annihilate``::

    nvars: 2
    degree_cap: 12            # optional
    polynomials:
      - [[[1, 0], 1.0], [[0, 1], 1.0]]
      - [[[1, 1], 1.0]]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .chaos_model import ChaosElement, ChaosVector, from_polynomial
from .errors import ChaosCalcError, ConfigError
from .polynomial import Polynomial
from .tensor_core import SymmetricKernel, kernel_from_pairs


def load(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _require(d: Mapping, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing '{key}'")
    return d[key]


def parse_kernel(spec: Mapping, n: int) -> SymmetricKernel:
    try:
        order = int(_require(spec, "order", "kernel"))
        return kernel_from_pairs(order, int(spec.get("n", n)), spec.get("entries", []))
    except ChaosCalcError as exc:
        raise ConfigError(f"bad kernel {spec!r}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad kernel {spec!r}: {exc}") from exc


def parse_polynomial(pairs, nvars: int) -> Polynomial:
    try:
        return Polynomial.from_pairs(nvars, [(tuple(e), c) for e, c in pairs])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad polynomial {pairs!r}: {exc}") from exc


def parse_component(spec: Mapping, n: int) -> ChaosElement:
    if "polynomial" in spec:
        return from_polynomial(parse_polynomial(spec["polynomial"], n))
    kernels = [parse_kernel(k, n) for k in spec.get("kernels", [])]
    return ChaosElement.from_kernels(*kernels, constant=float(spec.get("constant", 0.0)), dim=n)


def parse_vector(data: Mapping) -> ChaosVector:
    n = int(_require(data, "n", "config"))
    comps = _require(data, "components", "config")
    if not comps:
        raise ConfigError("config: 'components' is empty")
    return ChaosVector(tuple(parse_component(c, n) for c in comps))


def parse_polynomials(data: Mapping) -> list[Polynomial]:
    nvars = int(_require(data, "nvars", "config"))
    polys = [parse_polynomial(p, nvars) for p in _require(data, "polynomials", "config")]
    if not polys:
        raise ConfigError("config: 'polynomials' is empty")
    return polys


@dataclass
class ScenarioConfig:
    """Settings for one scenario run; every field is echoed in the outputs."""

    scenario: str
    seed: int = 1
    samples: int = 100_000
    t_max: int = 64
    gamma: float = 1.0 / 35.0
    bins: int | None = None
    support_cap: int = 400
    repetitions: int = 5
    kernels: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.t_max < 1:
            raise ConfigError("t_max must be >= 1")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma must lie in (0, 1)")
        if self.bins is not None and self.bins < 2:
            raise ConfigError("bins must be >= 2")
        if self.support_cap < 2 or self.repetitions < 1:
            raise ConfigError("support_cap must be >= 2 and repetitions >= 1")

    _TYPES = {"scenario": str, "seed": int, "samples": int, "t_max": int, "gamma": float,
              "bins": int, "support_cap": int, "repetitions": int, "kernels": dict}

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ScenarioConfig":
        extra = set(data) - set(cls._TYPES)
        if extra:
            raise ConfigError(f"unknown scenario keys: {sorted(extra)}")
        kwargs = {}
        for key, val in data.items():
            if val is None:
                continue
            typ = cls._TYPES[key]
            if typ is dict:
                if not isinstance(val, dict):
                    raise ConfigError(f"'{key}' must be a mapping")
                kwargs[key] = val
                continue
            try:
                kwargs[key] = typ(val)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"'{key}': cannot read {val!r} as {typ.__name__}") from exc
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}
