"""Radii schedules and the spiral weight system.

A schedule is a strictly interleaved sequence r_1 < R_1 < r_2 < R_2 < ... held
in log-domain, because r_i grows like (e^(pi/(2 eps)) / delta)^i and overflows
64-bit floats already for moderate eps. All range tests compare logs.

On each ramp (r_i, R_i) the turning angle is the clamped logarithmic ramp

    angle_i(t) = clamp(eps * ln(t / r_i), 0, pi/2),

which meets the slope cap eps/t with equality and minimizes R_i/r_i. The two
active gluing weights at radius t are cos/sin of this angle; at the clamp
endpoints they are snapped to exact 0.0/1.0 so supports and plateaus hold
exactly in floating point.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .errors import OutOfScheduleRange

HALF_PI = math.pi / 2.0
_MAX_LOG = math.log(sys.float_info.max)  # ~709.78; beyond this, no linear-domain export
_REL_TOL = 1e-12


@dataclass(frozen=True)
class Params:
    """Construction parameters, each strictly inside (0, 1).

    eps: spiral speed (slope cap of the ramp angle is eps/t)
    delta: gap between consecutive levels (r_{i+1} > R_i / delta)
    gamma: total near-isometry budget of the map bank
    zeta: slack accepted in the subsequence selection threshold
    """

    eps: float
    delta: float
    gamma: float
    zeta: float

    def __post_init__(self):
        for name in ("eps", "delta", "gamma", "zeta"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie strictly in (0, 1), got {v!r}")

    def scaled(self, factor: float) -> "Params":
        return Params(
            self.eps * factor, self.delta * factor, self.gamma * factor, self.zeta * factor
        )


@dataclass(frozen=True, eq=False)
class RadiiSchedule:
    """Log-domain radii r_i, R_i plus the covered range.

    Points with norm up to exp(log_coverage) = r_{m+1} are covered; evaluating
    the weight system beyond that is an error, never a silent truncation.
    """

    levels: int
    log_r: np.ndarray
    log_R: np.ndarray
    log_coverage: float
    params: Params

    def __post_init__(self):
        lr = np.asarray(self.log_r, dtype=float)
        lR = np.asarray(self.log_R, dtype=float)
        lr.flags.writeable = False
        lR.flags.writeable = False
        object.__setattr__(self, "log_r", lr)
        object.__setattr__(self, "log_R", lR)
        m = self.levels
        if m < 1 or lr.shape != (m,) or lR.shape != (m,):
            raise ValueError("log_r and log_R must both have length levels >= 1")
        eps, delta = self.params.eps, self.params.delta
        gap = -math.log(delta)
        for i in range(m):
            if not lr[i] < lR[i]:
                raise ValueError(f"level {i + 1}: log_r must be < log_R")
            width = lR[i] - lr[i]
            if eps * width < HALF_PI * (1.0 - _REL_TOL):
                raise ValueError(f"level {i + 1}: ramp too short for a feasible angle")
            if i > 0 and lr[i] - lR[i - 1] < gap - _REL_TOL:
                raise ValueError(f"level {i + 1}: radius gap below 1/delta")
        if self.log_coverage - lR[m - 1] < gap - _REL_TOL:
            raise ValueError("coverage must extend at least R_m/delta past the last ramp")


def build_schedule(params: Params, r1: float, levels: int, margin: float = 0.01) -> RadiiSchedule:
    """Minimal-feasible schedule: R_i = r_i e^(pi/(2 eps)), r_{i+1} = (R_i/delta)(1+margin)."""
    if r1 <= 0.0 or not math.isfinite(r1):
        raise ValueError(f"r1 must be a positive real, got {r1!r}")
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if margin < 0.0:
        raise ValueError(f"margin must be >= 0, got {margin!r}")
    ramp = HALF_PI / params.eps
    step = math.log((1.0 + margin) / params.delta)
    log_r = np.empty(levels)
    log_R = np.empty(levels)
    log_r[0] = math.log(r1)
    for i in range(levels):
        log_R[i] = log_r[i] + ramp
        if i + 1 < levels:
            log_r[i + 1] = log_R[i] + step
    return RadiiSchedule(levels, log_r, log_R, float(log_R[-1] + step), params)


def radii(sched: RadiiSchedule) -> tuple[np.ndarray, np.ndarray]:
    """Linear-domain (r_i, R_i); raises OverflowError when outside float range."""
    if sched.log_R[-1] > _MAX_LOG:
        raise OverflowError("schedule radii exceed the floating range; use the log-domain fields")
    return np.exp(sched.log_r), np.exp(sched.log_R)


@dataclass(frozen=True)
class WeightSystem:
    """Evaluators for the ramp angles and gluing weights of a schedule."""

    schedule: RadiiSchedule

    @property
    def levels(self) -> int:
        return self.schedule.levels

    @property
    def weight_count(self) -> int:
        return self.schedule.levels + 1


def _check_log_t(sched: RadiiSchedule, log_t: float) -> None:
    if log_t > sched.log_coverage + 1e-12 * max(1.0, abs(sched.log_coverage)):
        raise OutOfScheduleRange(
            f"log norm {log_t!r} exceeds schedule coverage {sched.log_coverage!r}"
        )


def _ramp_angle_log(sched: RadiiSchedule, level: int, log_t: float) -> float:
    a = sched.params.eps * (log_t - sched.log_r[level - 1])
    if a <= 0.0:
        return 0.0
    return min(a, HALF_PI)


def _cos_sin(angle: float) -> tuple[float, float]:
    # Exact endpoints: the clamped angle must yield weights exactly 0/1 there,
    # otherwise supports and plateaus would only hold approximately.
    if angle <= 0.0:
        return 1.0, 0.0
    if angle >= HALF_PI:
        return 0.0, 1.0
    return math.cos(angle), math.sin(angle)


def _log_of(t: float) -> float:
    if t < 0.0 or not (t < math.inf):
        raise ValueError(f"radius must be a finite non-negative real, got {t!r}")
    return math.log(t) if t > 0.0 else -math.inf


def ramp_angle(ws: WeightSystem, level: int, t: float) -> float:
    """Turning angle of the given level at radius t, clamped to [0, pi/2]."""
    sched = ws.schedule
    if not (1 <= level <= sched.levels):
        raise ValueError(f"level must be in 1..{sched.levels}, got {level}")
    return _ramp_angle_log(sched, level, _log_of(t))


def _weight_log(sched: RadiiSchedule, index: int, log_t: float) -> float:
    m = sched.levels
    if index == 1:
        if log_t > sched.log_R[0]:
            return 0.0
        return _cos_sin(_ramp_angle_log(sched, 1, log_t))[0]
    if log_t < sched.log_r[index - 2]:
        return 0.0
    if index <= m:
        if log_t < sched.log_R[index - 2]:
            return _cos_sin(_ramp_angle_log(sched, index - 1, log_t))[1]
        if log_t <= sched.log_r[index - 1]:
            return 1.0
        if log_t <= sched.log_R[index - 1]:
            return _cos_sin(_ramp_angle_log(sched, index, log_t))[0]
        return 0.0
    # terminal weight: rises on the last ramp, then stays 1 up to coverage
    return _cos_sin(_ramp_angle_log(sched, m, log_t))[1]


def weight(ws: WeightSystem, index: int, t: float) -> float:
    """Gluing weight mu_index at radius t; index runs in 1..levels+1."""
    sched = ws.schedule
    if not (1 <= index <= sched.levels + 1):
        raise ValueError(f"weight index must be in 1..{sched.levels + 1}, got {index}")
    log_t = _log_of(t)
    _check_log_t(sched, log_t)
    return _weight_log(sched, index, log_t)


def active_weights_log(sched: RadiiSchedule, log_t: float) -> tuple[int, float, float]:
    """Level i and the weight pair (mu_i, mu_{i+1}) at log radius log_t.

    The returned pair is cos/sin of the level's clamped angle, so a plateau
    yields exactly (1.0, 0.0) or (0.0, 1.0). All other weights vanish.
    """
    _check_log_t(sched, log_t)
    i = int(np.searchsorted(sched.log_r, log_t, side="left"))
    i = min(max(i, 1), sched.levels)
    c, s = _cos_sin(_ramp_angle_log(sched, i, log_t))
    return i, c, s


@dataclass(frozen=True)
class WeightConditionReport:
    """Worst finite-difference slacks of the slope conditions over a sampled grid.

    Slopes are measured against the log radius, which turns the cap eps/t into
    the scale-free cap eps and keeps the check overflow-safe on wide schedules.
    """

    angle_slope_min: float
    angle_slope_max_violation: float
    weight_slope_max_violation: float
    partition_max_defect: float
    samples: int


def check_weight_conditions(ws: WeightSystem, samples_per_interval: int) -> WeightConditionReport:
    """Finite-difference check of the angle slope cap and the paired-weight slope cap."""
    if samples_per_interval < 2:
        raise ValueError("samples_per_interval must be >= 2")
    sched = ws.schedule
    eps = sched.params.eps
    h = 1e-6  # step in log radius
    slope_min = math.inf
    angle_viol = -math.inf
    weight_viol = -math.inf
    total = 0
    for i in range(1, sched.levels + 1):
        lo = sched.log_r[i - 1]
        hi = sched.log_R[i - 1]
        pad = 10.0 * h
        grid = np.linspace(lo + pad, hi - pad, samples_per_interval)
        for lt in grid:
            a_plus = _ramp_angle_log(sched, i, lt + h)
            a_minus = _ramp_angle_log(sched, i, lt - h)
            slope = (a_plus - a_minus) / (2.0 * h)
            slope_min = min(slope_min, slope)
            angle_viol = max(angle_viol, slope - eps)
            d_lo = (_weight_log(sched, i, lt + h) - _weight_log(sched, i, lt - h)) / (2.0 * h)
            d_hi = (_weight_log(sched, i + 1, lt + h) - _weight_log(sched, i + 1, lt - h)) / (
                2.0 * h
            )
            weight_viol = max(weight_viol, math.hypot(d_lo, d_hi) - eps)
            total += 1
    defect = -math.inf
    span = np.linspace(sched.log_r[0] - 2.0, sched.log_coverage, samples_per_interval)
    for lt in span:
        sq = sum(_weight_log(sched, k, lt) ** 2 for k in range(1, sched.levels + 2))
        defect = max(defect, abs(sq - 1.0))
    return WeightConditionReport(
        float(slope_min), float(angle_viol), float(weight_viol), float(defect), total
    )


def schedule_to_dict(sched: RadiiSchedule) -> dict:
    return {
        "levels": sched.levels,
        "eps": sched.params.eps,
        "delta": sched.params.delta,
        "gamma": sched.params.gamma,
        "zeta": sched.params.zeta,
        "log_r": sched.log_r.tolist(),
        "log_R": sched.log_R.tolist(),
        "log_coverage": sched.log_coverage,
    }


def schedule_from_dict(d: dict) -> RadiiSchedule:
    params = Params(float(d["eps"]), float(d["delta"]), float(d["gamma"]), float(d["zeta"]))
    return RadiiSchedule(
        int(d["levels"]),
        np.asarray(d["log_r"], dtype=float),
        np.asarray(d["log_R"], dtype=float),
        float(d["log_coverage"]),
        params,
    )


def weight_grid(
    ws: WeightSystem, grid_size: int, log_lo: float | None = None, log_hi: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced grid of radii and the full weight table, for plotting/export."""
    sched = ws.schedule
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    lo = sched.log_r[0] - math.log(100.0) if log_lo is None else float(log_lo)
    hi = sched.log_coverage if log_hi is None else float(log_hi)
    _check_log_t(sched, hi)
    if hi > _MAX_LOG:
        raise OverflowError("grid radii exceed the floating range")
    logs = np.linspace(lo, hi, grid_size)
    table = np.empty((grid_size, sched.levels + 1))
    for row, lt in enumerate(logs):
        for k in range(1, sched.levels + 2):
            table[row, k - 1] = _weight_log(sched, k, lt)
    return np.exp(logs), table
