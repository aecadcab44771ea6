"""Finite point sets, their shell decomposition, and pair classification.

The shell at level i collects the points whose norm lies in (R_{i-1}, r_{i+1}]
(with R_0 = 0), plus the origin. Consecutive shells overlap, so any pair of
points either shares a shell, or is separated by at least a full level, in
which case the smaller norm is at most delta times the larger one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .schedule import RadiiSchedule, _check_log_t, _ramp_angle_log
from .spaces import Lp, NormSpec, Space, Vector, norm, norm_from_dict, norm_to_dict

_DIR_TOL = 1e-12  # unit directions matching coordinatewise within this are identified


@dataclass(frozen=True, eq=False)
class LocallyFiniteSet:
    """A finite batch of distinct points in a source space."""

    space: Space
    ids: tuple[int, ...]
    coords: np.ndarray  # (n, dim)
    includes_origin: bool

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)
        n = len(self.ids)
        if c.shape != (n, self.space.dim):
            raise ValueError(f"coords shape {c.shape} != ({n}, {self.space.dim})")
        if len(set(self.ids)) != n:
            raise ValueError("point ids must be distinct")
        seen = {tuple(row) for row in c}
        if len(seen) != n:
            raise ValueError("points must be distinct")

    def __len__(self) -> int:
        return len(self.ids)


def make_point_set(space: Space, coords, ids=None) -> LocallyFiniteSet:
    c = np.asarray(coords, dtype=float)
    if c.ndim != 2:
        raise ValueError(f"coords must be 2-d, got shape {c.shape}")
    if ids is None:
        ids = tuple(range(c.shape[0]))
    has_origin = bool(np.any(np.all(c == 0.0, axis=1)))
    return LocallyFiniteSet(space, tuple(int(i) for i in ids), c, has_origin)


def point_norms(pts: LocallyFiniteSet) -> np.ndarray:
    return np.array([norm(pts.space, row) for row in pts.coords])


def log_norms(pts: LocallyFiniteSet) -> np.ndarray:
    n = point_norms(pts)
    with np.errstate(divide="ignore"):
        return np.where(n > 0.0, np.log(n, where=n > 0.0), -math.inf)


@dataclass(frozen=True)
class SameLevel:
    """Both points share shell `level`."""

    level: int


@dataclass(frozen=True)
class Far:
    """The smaller norm sits in (R_{y_level-1}, R_{y_level}], the larger in
    (r_{x_level+1}, r_{x_level+2}]; at least one full level separates them."""

    y_level: int
    x_level: int


Classification = Union[SameLevel, Far]


def _level_interval(sched: RadiiSchedule, log_t: float) -> tuple[int, int]:
    """Contiguous 1-based range of shells containing a point of log norm log_t."""
    _check_log_t(sched, log_t)
    m = sched.levels
    if log_t == -math.inf:
        return 1, m
    lo = 1 + int(np.searchsorted(sched.log_r[1:], log_t, side="left"))
    hi = 1 + int(np.searchsorted(sched.log_R[: m - 1], log_t, side="left"))
    return lo, hi


def classify_lognorms(sched: RadiiSchedule, log_nx: float, log_ny: float) -> Classification:
    """Classify an ordered pair by its log norms (log_nx >= log_ny)."""
    if log_ny > log_nx:
        raise ValueError("caller must order the pair so the first norm is the larger")
    lo_x, hi_x = _level_interval(sched, log_nx)
    lo_y, hi_y = _level_interval(sched, log_ny)
    if max(lo_x, lo_y) <= min(hi_x, hi_y):
        return SameLevel(max(lo_x, lo_y))
    return Far(y_level=hi_y, x_level=lo_x - 1)


def classify_pair(x, y, sched: RadiiSchedule, space: Space) -> Classification:
    """Classify a point pair with norm(x) >= norm(y)."""
    nx, ny = norm(space, x), norm(space, y)
    lx = math.log(nx) if nx > 0 else -math.inf
    ly = math.log(ny) if ny > 0 else -math.inf
    return classify_lognorms(sched, lx, ly)


@dataclass(frozen=True, eq=False)
class DirectionAngles:
    """A unit difference direction with the ramp angles recorded against it."""

    u: Vector
    angles: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class AnnulusDecomposition:
    """Per-level shell membership and the direction/angle bookkeeping.

    member_ids lists input points only; the origin is adjoined to every shell
    implicitly (and explicitly when the input contains it).
    """

    levels: int
    member_ids: tuple[tuple[int, ...], ...]
    directions: tuple[tuple[DirectionAngles, ...], ...]


def decompose(pts: LocallyFiniteSet, sched: RadiiSchedule) -> AnnulusDecomposition:
    """Build the shells, unit difference directions, and recorded ramp angles.

    A direction enters level i for every ordered pair (x, y) of shell members
    with norm(x) > r_i, norm(y) <= R_i, norm(x) >= norm(y), x != y; the origin
    participates as y at every level whether or not the input contains it.
    """
    m = sched.levels
    logs = log_norms(pts)
    for ln in logs:
        _check_log_t(sched, ln)
    order = np.argsort(np.asarray(pts.ids))
    members: list[tuple[int, ...]] = []
    dirs: list[tuple[DirectionAngles, ...]] = []
    for level in range(1, m + 1):
        shell_lo = sched.log_R[level - 2] if level >= 2 else -math.inf
        shell_hi = sched.log_r[level] if level < m else sched.log_coverage
        ids_here = []
        rows_here = []
        logs_here = []
        for k in order:
            ln = logs[k]
            in_shell = (shell_lo < ln <= shell_hi) if ln != -math.inf else False
            if in_shell or ln == -math.inf:
                ids_here.append(int(pts.ids[k]))
                rows_here.append(pts.coords[k])
                logs_here.append(ln)
        if not pts.includes_origin:
            rows_here.append(np.zeros(pts.space.dim))
            logs_here.append(-math.inf)
        found: list[tuple[Vector, list[float]]] = []
        log_ri = sched.log_r[level - 1]
        log_Ri = sched.log_R[level - 1]
        for a, xa in enumerate(rows_here):
            if not logs_here[a] > log_ri:
                continue
            angle = _ramp_angle_log(sched, level, logs_here[a])
            for b, yb in enumerate(rows_here):
                if a == b:
                    continue
                if logs_here[b] > log_Ri or logs_here[b] > logs_here[a]:
                    continue
                diff = xa - yb
                u = diff / norm(pts.space, diff)
                for vec, angles in found:
                    if np.max(np.abs(vec - u)) <= _DIR_TOL:
                        angles.append(angle)
                        break
                else:
                    found.append((u, [angle]))
        packed = tuple(
            DirectionAngles(u, tuple(np.unique(np.asarray(angles)).tolist()))
            for u, angles in found
        )
        members.append(tuple(ids_here))
        dirs.append(packed)
    return AnnulusDecomposition(m, tuple(members), tuple(dirs))


def generate_annular(
    seed: int,
    sched: RadiiSchedule,
    per_level: int,
    dim: int,
    placement: str,
    norm_spec: NormSpec = Lp(2.0),
) -> LocallyFiniteSet:
    """Deterministic pseudo-random points with norms in chosen schedule regions.

    placement selects the norm sub-region per level: "plateau" lands in
    [R_{i-1}, r_i], "ramp" in (r_i, R_i), "mixed" alternates. The origin is
    always included, as point id 0.
    """
    if per_level < 1:
        raise ValueError("per_level must be >= 1")
    if placement not in ("plateau", "ramp", "mixed"):
        raise ValueError(f"unknown placement {placement!r}")
    space = Space(dim, norm_spec)
    rng = np.random.default_rng(seed)
    rows = [np.zeros(dim)]
    for level in range(1, sched.levels + 1):
        plateau_lo = sched.log_R[level - 2] if level >= 2 else sched.log_r[0] - math.log(4.0)
        plateau_hi = sched.log_r[level - 1]
        ramp_lo = sched.log_r[level - 1]
        ramp_hi = sched.log_R[level - 1]
        for k in range(per_level):
            if placement == "plateau" or (placement == "mixed" and k % 2 == 0):
                lo, hi = plateau_lo, plateau_hi
            else:
                lo, hi = ramp_lo, ramp_hi
            pad = 0.05 * (hi - lo)
            log_target = rng.uniform(lo + pad, hi - pad)
            if log_target > math.log(np.finfo(float).max) - 1.0:
                raise OverflowError("requested norms exceed the floating range")
            d = rng.standard_normal(dim)
            nd = norm(space, d)
            while nd == 0.0:  # pragma: no cover - probability zero
                d = rng.standard_normal(dim)
                nd = norm(space, d)
            rows.append(d * math.exp(log_target - math.log(nd)))
    return make_point_set(space, np.asarray(rows))


def points_to_dict(pts: LocallyFiniteSet) -> dict:
    return {
        "dim": pts.space.dim,
        "norm": norm_to_dict(pts.space.norm),
        "points": pts.coords.tolist(),
    }


def points_from_dict(d: dict) -> LocallyFiniteSet:
    space = Space(int(d["dim"]), norm_from_dict(d["norm"]))
    return make_point_set(space, np.asarray(d["points"], dtype=float))


def save_points(pts: LocallyFiniteSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(points_to_dict(pts), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_points(path: str) -> LocallyFiniteSet:
    with open(path, encoding="utf-8") as fh:
        return points_from_dict(json.load(fh))
