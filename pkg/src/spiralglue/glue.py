"""Assembly and evaluation of the glued embedding.

At any radius at most two gluing weights are active, so the full weighted sum
collapses to a two-term blend of consecutive selected maps. Evaluation and the
per-level interpolated map share one code path (the same floating operations),
which makes their agreement on a shared shell exact rather than approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bank import EmbeddingBank, SelectionResult
from .schedule import WeightSystem, _check_log_t, _cos_sin, _ramp_angle_log, active_weights_log
from .spaces import LinearMap, Space, Vector, blend_apply, norm


@dataclass(frozen=True, eq=False)
class GlueEmbedding:
    """The assembled embedding: weight system, bank, and chosen subsequence."""

    ws: WeightSystem
    bank: EmbeddingBank
    selection: SelectionResult

    def __post_init__(self):
        need = self.ws.levels + 1
        if len(self.selection.chosen_indices) != need:
            raise ValueError(
                f"selection must cover {need} levels, got {len(self.selection.chosen_indices)}"
            )
        if max(self.selection.chosen_indices) >= self.bank.size:
            raise ValueError("selection indices exceed the bank size")
        if list(self.selection.chosen_indices) != sorted(set(self.selection.chosen_indices)):
            raise ValueError("selection indices must be strictly increasing")

    @property
    def source(self) -> Space:
        return self.bank.source

    @property
    def target(self) -> Space:
        return self.bank.target

    def map_at(self, level: int) -> LinearMap:
        """The selected map used by 1-based level (1..levels+1)."""
        return self.bank.maps[self.selection.chosen_indices[level - 1]]


def level_map(g: GlueEmbedding, level: int, x) -> Vector:
    """The level's interpolated map: blend of maps `level` and `level+1` at the
    ramp angle of norm(x). Agrees with embed() on the level's shell exactly."""
    sched = g.ws.schedule
    if not (1 <= level <= sched.levels):
        raise ValueError(f"level must be in 1..{sched.levels}, got {level}")
    t = norm(g.source, x)
    log_t = math.log(t) if t > 0.0 else -math.inf
    _check_log_t(sched, log_t)
    c, s = _cos_sin(_ramp_angle_log(sched, level, log_t))
    return blend_apply(c, s, g.map_at(level), g.map_at(level + 1), x)


def embed(g: GlueEmbedding, x) -> Vector:
    """Evaluate the glued embedding at x; the origin maps to the origin."""
    t = norm(g.source, x)
    log_t = math.log(t) if t > 0.0 else -math.inf
    level, c, s = active_weights_log(g.ws.schedule, log_t)
    return blend_apply(c, s, g.map_at(level), g.map_at(level + 1), x)


def direction_gain(theta: float, u, first: LinearMap, second: LinearMap) -> float:
    """Target norm of cos(theta)*first(u) + sin(theta)*second(u) for unit u."""
    nu = norm(first.source, u)
    if abs(nu - 1.0) > 1e-12:
        raise ValueError(f"u must be a unit vector, got norm {nu!r}")
    return norm(first.target, blend_apply(math.cos(theta), math.sin(theta), first, second, u))


def embed_all(g: GlueEmbedding, pts) -> dict[int, Vector]:
    """Images of a whole point set, keyed by point id."""
    return {pid: embed(g, row) for pid, row in zip(pts.ids, pts.coords)}


def blend_decomposition_residual(g: GlueEmbedding, level: int, x, y) -> float:
    """Relative residual of the exact two-term difference decomposition.

    For norm(x) >= norm(y) > 0 the level map T satisfies

        T(x) - T(y) = G_sigma(x - y) + 2 sin((ax - ay)/2) G_theta(y),

    with sigma the ramp angle at norm(x), theta = pi/2 + (ax + ay)/2, and
    G_phi the cos/sin blend at angle phi. Returns the floating-point defect
    of this identity scaled by norm(x) + norm(y).
    """
    sched = g.ws.schedule
    nx, ny = norm(g.source, x), norm(g.source, y)
    if not (nx >= ny > 0.0):
        raise ValueError("need norm(x) >= norm(y) > 0")
    ax = _ramp_angle_log(sched, level, math.log(nx))
    ay = _ramp_angle_log(sched, level, math.log(ny))
    theta = 0.5 * math.pi + 0.5 * (ax + ay)
    first, second = g.map_at(level), g.map_at(level + 1)
    lhs = level_map(g, level, x) - level_map(g, level, y)
    rhs = blend_apply(math.cos(ax), math.sin(ax), first, second, np.asarray(x) - np.asarray(y))
    rhs = rhs + 2.0 * math.sin(0.5 * (ax - ay)) * blend_apply(
        math.cos(theta), math.sin(theta), first, second, y
    )
    return norm(g.target, lhs - rhs) / (nx + ny)
