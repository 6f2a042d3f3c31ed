"""Holomorphic curves into P^n, hyperplanes and N-subgeneral position.

N-subgeneral position is taken in the usual Nochka/Cartan sense: any N+1 of
the q hyperplanes have coefficient vectors spanning C^{n+1}.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import linalg
from .expr import EntireExpr, parse_expr
from .gaussian import GaussianRational
from .poly import poly_gcd


class DimensionMismatch(ValueError):
    pass


class PositionViolated(ValueError):
    pass


@dataclass(frozen=True)
class HolomorphicCurve:
    """Reduced representation [f_0 : ... : f_n] with a base point o."""

    components: tuple[EntireExpr, ...]
    base_point: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if all(c.is_zero() for c in self.components):
            raise ValueError("a holomorphic curve needs a non-zero component")

    @property
    def n(self) -> int:
        return len(self.components) - 1

    def is_reduced(self) -> bool:
        """Common-zero check for components sharing one exponential direction.

        Components in several directions are reported reduced only when no
        two share a direction (the common zero set is then not decidable by
        polynomial gcd and is assumed empty).
        """
        polys = []
        dirs = set()
        for c in self.components:
            if c.is_zero():
                continue
            sd = c.single_direction()
            if sd is None:
                return True
            dirs.add(sd[0])
            polys.append(sd[1])
        if len(dirs) > 1:
            return True
        g = polys[0]
        for p in polys[1:]:
            g = poly_gcd(g, p)
        return g.degree <= 0

    def norm_log(self, z) -> np.ndarray:
        """log ||f(z)|| in log space, elementwise."""
        z = np.asarray(z, dtype=complex)
        mants, scales = zip(*(c.evaluate_scaled(z) for c in self.components))
        scales = np.stack(scales)
        top = np.max(scales, axis=0)
        acc = np.zeros(z.shape)
        for m, s in zip(mants, scales):
            acc = acc + np.abs(m) ** 2 * np.exp(2 * (s - top))
        return 0.5 * np.log(acc) + top

    def values(self, z) -> np.ndarray:
        """(n+1, ...) array of component values (may overflow for huge exponents)."""
        return np.stack([np.asarray(c.evaluate(z)) for c in self.components])

    def to_json(self) -> dict:
        b = complex(self.base_point)
        return {"components": [c.to_json() for c in self.components],
                "base_point": [b.real, b.imag]}

    @classmethod
    def from_json(cls, obj: dict) -> HolomorphicCurve:
        bp = obj.get("base_point", [0.0, 0.0])
        return cls(tuple(parse_expr(c) for c in obj["components"]),
                   complex(float(bp[0]), float(bp[1])))


@dataclass(frozen=True)
class Hyperplane:
    coefficients: tuple[GaussianRational, ...]

    def __post_init__(self):
        cs = tuple(GaussianRational.coerce(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", cs)
        if not any(cs):
            raise ValueError("hyperplane coefficients are all zero")

    @property
    def norm_sq(self) -> Fraction:
        return sum((c.norm_sq() for c in self.coefficients), Fraction(0))

    @property
    def norm(self) -> float:
        return float(self.norm_sq) ** 0.5

    def __len__(self):
        return len(self.coefficients)

    def apply(self, w: Sequence) -> Any:
        return sum((c * x for c, x in zip(self.coefficients, w)), GaussianRational(0))

    def numeric(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coefficients])


def hyperplane(*coeffs) -> Hyperplane:
    return Hyperplane(tuple(GaussianRational.coerce(c) if not isinstance(c, str)
                            else GaussianRational.from_json(c) for c in coeffs))


@dataclass(frozen=True)
class HyperplaneFamily:
    hyperplanes: tuple[Hyperplane, ...]
    n: int
    N: int
    _ranks: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "hyperplanes", tuple(self.hyperplanes))
        for h in self.hyperplanes:
            if len(h) != self.n + 1:
                raise DimensionMismatch(
                    f"hyperplane has {len(h)} coefficients, expected {self.n + 1}")
        if self.N < self.n:
            raise ValueError("N-subgeneral position needs N >= n")

    @property
    def q(self) -> int:
        return len(self.hyperplanes)

    def rank(self, Q: Iterable[int]) -> int:
        key = tuple(sorted(set(Q)))
        if key not in self._ranks:
            self._ranks[key] = rank_of_subset(self, key)
        return self._ranks[key]

    @property
    def general_position(self) -> bool:
        return self.N == self.n

    def to_json(self) -> dict:
        return {"n": self.n, "N": self.N,
                "list": [[c.to_json() for c in h.coefficients] for h in self.hyperplanes]}

    @classmethod
    def from_json(cls, obj: dict) -> HyperplaneFamily:
        hs = tuple(Hyperplane(tuple(GaussianRational.from_json(c) for c in row))
                   for row in obj["list"])
        n = int(obj["n"])
        return cls(hs, n, int(obj.get("N", n)))


def compose(H: Hyperplane, f: HolomorphicCurve) -> EntireExpr:
    """The entire function sum_k h_k f_k."""
    if len(H) != len(f.components):
        raise DimensionMismatch(
            f"hyperplane in P^{len(H) - 1} applied to a curve in P^{f.n}")
    out = EntireExpr()
    for c, fk in zip(H.coefficients, f.components):
        if c:
            out = out + fk * c
    return out


def rank_of_subset(F: HyperplaneFamily, Q: Iterable[int]) -> int:
    """Exact rank of the coefficient matrix of the hyperplanes indexed by Q
    (0-based indices)."""
    Q = list(Q)
    if not Q:
        raise ValueError("rank of an empty subset")
    return linalg.rank([F.hyperplanes[j].coefficients for j in Q])


def check_position(F: HyperplaneFamily) -> bool:
    """True iff every N+1 of the hyperplanes have rank n+1."""
    if F.q < F.N + 1:
        raise ValueError(f"need q >= N+1 hyperplanes, got q={F.q}, N={F.N}")
    return all(F.rank(Q) == F.n + 1
               for Q in itertools.combinations(range(F.q), F.N + 1))


def load_problem(path: str | Path) -> tuple[HolomorphicCurve | None, HyperplaneFamily | None]:
    """Read the curve/hyperplane JSON document; either part may be absent."""
    obj = json.loads(Path(path).read_text())
    curve = HolomorphicCurve.from_json(obj["curve"]) if "curve" in obj else None
    fam = HyperplaneFamily.from_json(obj["hyperplanes"]) if "hyperplanes" in obj else None
    return curve, fam
