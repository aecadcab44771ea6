"""Finite-dimensional normed spaces, vectors, and linear maps.

Norm evaluation is exact and overflow-safe: p-power sums are computed after
rescaling by the largest coordinate, so norms of vectors with entries near
the float range remain finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatch

Vector = np.ndarray


def as_vector(coords, dim: int | None = None) -> Vector:
    """Coerce input to a read-only float64 vector with finite entries."""
    x = np.asarray(coords, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionMismatch(f"expected length {dim}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite coordinates")
    x = x.copy()
    x.flags.writeable = False
    return x


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Lp:
    """The p-norm with p in [1, inf]; use math.inf for the sup norm."""

    p: float = 2.0

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise ValueError(f"p must be >= 1, got {self.p!r}")


@dataclass(frozen=True, eq=False)
class WeightedLp:
    """(sum_i w_i |x_i|^p)^(1/p) with strictly positive weights.

    For p = inf the norm is max_i w_i |x_i|.
    """

    p: float
    weights: np.ndarray

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise ValueError(f"p must be >= 1, got {self.p!r}")
        w = _freeze(self.weights)
        if w.ndim != 1 or w.size == 0 or not np.all(w > 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a non-empty vector of finite positive reals")
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        return (
            isinstance(other, WeightedLp)
            and self.p == other.p
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class MaxAbsFunctionals:
    """max_k |<f_k, x>| over a family of functionals whose span is full-dimensional."""

    functionals: np.ndarray

    def __post_init__(self):
        f = _freeze(self.functionals)
        if f.ndim != 2 or f.size == 0 or not np.all(np.isfinite(f)):
            raise ValueError("functionals must be a non-empty finite 2-d array")
        object.__setattr__(self, "functionals", f)

    def __eq__(self, other):
        return isinstance(other, MaxAbsFunctionals) and np.array_equal(
            self.functionals, other.functionals
        )


NormSpec = Union[Lp, WeightedLp, MaxAbsFunctionals]


@dataclass(frozen=True)
class Space:
    """A finite-dimensional real vector space with a computable norm."""

    dim: int
    norm: NormSpec = Lp(2.0)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        spec = self.norm
        if isinstance(spec, WeightedLp) and spec.weights.shape[0] != self.dim:
            raise DimensionMismatch(
                f"weights length {spec.weights.shape[0]} != dim {self.dim}"
            )
        if isinstance(spec, MaxAbsFunctionals):
            f = spec.functionals
            if f.shape[1] != self.dim:
                raise DimensionMismatch(f"functionals width {f.shape[1]} != dim {self.dim}")
            if np.linalg.matrix_rank(f) < self.dim:
                raise ValueError("functionals do not span the space")


def _lp_value(a: np.ndarray, p: float) -> float:
    # a is already elementwise non-negative
    if p == math.inf:
        return float(a.max()) if a.size else 0.0
    if p == 1.0:
        return float(a.sum())
    m = float(a.max(initial=0.0))
    if m == 0.0:
        return 0.0
    a = a / m
    if p == 2.0:
        return m * float(math.sqrt(np.dot(a, a)))
    return m * float(np.sum(a**p) ** (1.0 / p))


def norm(space: Space, x) -> float:
    """Evaluate the norm of x in the given space; zero iff x is the zero vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (space.dim,):
        raise DimensionMismatch(f"vector shape {x.shape} != ({space.dim},)")
    spec = space.norm
    if isinstance(spec, Lp):
        return _lp_value(np.abs(x), spec.p)
    if isinstance(spec, WeightedLp):
        a = np.abs(x)
        if spec.p == math.inf:
            return float((spec.weights * a).max())
        m = float(a.max(initial=0.0))
        if m == 0.0:
            return 0.0
        return m * float(np.sum(spec.weights * (a / m) ** spec.p) ** (1.0 / spec.p))
    return float(np.max(np.abs(spec.functionals @ x)))


@dataclass(frozen=True, eq=False)
class LinearMap:
    """A dense linear map between two spaces, stored as a (target.dim, source.dim) matrix."""

    matrix: np.ndarray
    source: Space
    target: Space

    def __post_init__(self):
        m = _freeze(self.matrix)
        if m.shape != (self.target.dim, self.source.dim):
            raise DimensionMismatch(
                f"matrix shape {m.shape} != ({self.target.dim}, {self.source.dim})"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix has non-finite entries")
        object.__setattr__(self, "matrix", m)


def apply(m: LinearMap, x) -> Vector:
    """Matrix-vector product, landing in the map's target space."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.source.dim,):
        raise DimensionMismatch(f"vector shape {x.shape} != ({m.source.dim},)")
    return m.matrix @ x


def blend_apply(c: float, s: float, first: LinearMap, second: LinearMap, x) -> Vector:
    """c*(first x) + s*(second x).

    Every code path that interpolates two maps goes through this function so
    that results agree bit-for-bit across modules.
    """
    return c * apply(first, x) + s * apply(second, x)


def combine(theta: float, first: LinearMap, second: LinearMap) -> LinearMap:
    """cos(theta)*first + sin(theta)*second as an explicit map."""
    if not (-1e-9 <= theta <= math.pi + 1e-9):
        raise ValueError(f"theta must lie in [0, pi], got {theta!r}")
    if first.source != second.source or first.target != second.target:
        raise DimensionMismatch("maps must share source and target spaces")
    mat = math.cos(theta) * first.matrix + math.sin(theta) * second.matrix
    return LinearMap(mat, first.source, first.target)


def norm_axioms_max_violation(space: Space, samples: int = 200, seed: int = 0) -> float:
    """Worst violation of the triangle inequality and absolute homogeneity
    over random unit-scale samples. Used by the test suite."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = rng.standard_normal(space.dim)
        y = rng.standard_normal(space.dim)
        a = rng.uniform(-3.0, 3.0)
        nx, ny = norm(space, x), norm(space, y)
        worst = max(worst, norm(space, x + y) - nx - ny)
        if nx > 0:
            worst = max(worst, abs(norm(space, a * x) - abs(a) * nx) / nx)
    return worst


def norm_to_dict(spec: NormSpec) -> dict:
    if isinstance(spec, Lp):
        return {"norm": "lp", "p": "inf" if spec.p == math.inf else spec.p}
    if isinstance(spec, WeightedLp):
        return {
            "norm": "weighted_lp",
            "p": "inf" if spec.p == math.inf else spec.p,
            "weights": spec.weights.tolist(),
        }
    return {"norm": "max_abs", "functionals": spec.functionals.tolist()}


def _parse_p(raw) -> float:
    if raw == "inf":
        return math.inf
    return float(raw)


def norm_from_dict(d: dict) -> NormSpec:
    kind = d.get("norm")
    if kind == "lp":
        return Lp(_parse_p(d["p"]))
    if kind == "weighted_lp":
        return WeightedLp(_parse_p(d["p"]), np.asarray(d["weights"], dtype=float))
    if kind == "max_abs":
        return MaxAbsFunctionals(np.asarray(d["functionals"], dtype=float))
    raise ValueError(f"unknown norm spec {d!r}")


def space_to_dict(space: Space) -> dict:
    return {"dim": space.dim, "norm": norm_to_dict(space.norm)}


def space_from_dict(d: dict) -> Space:
    return Space(int(d["dim"]), norm_from_dict(d["norm"]))
