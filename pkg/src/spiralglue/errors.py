"""Exception types shared across the package."""

from __future__ import annotations


class SpiralGlueError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(SpiralGlueError):
    """A vector or matrix has a shape inconsistent with its space."""


class OutOfScheduleRange(SpiralGlueError):
    """A norm falls outside the range covered by a finite schedule."""


class CertificationFailed(SpiralGlueError):
    """A candidate map violates the near-isometry sandwich on the certification set."""

    def __init__(self, map_index: int, vector_index: int, ratio: float):
        self.map_index = map_index
        self.vector_index = vector_index
        self.ratio = ratio
        super().__init__(
            f"map {map_index} failed certification on vector {vector_index}: "
            f"ratio {ratio!r} outside the allowed sandwich"
        )


class NotStabilized(SpiralGlueError):
    """A spreading estimate did not settle within the requested tolerance."""


class BankExhausted(SpiralGlueError):
    """No admissible map index exists at some level of the subsequence search."""

    def __init__(self, level: int, direction, angle: float, achieved: float, threshold: float):
        self.level = level
        self.direction = direction
        self.angle = angle
        self.achieved = achieved
        self.threshold = threshold
        super().__init__(
            f"no admissible pair at level {level}: best achieved norm {achieved!r} "
            f"< threshold {threshold!r} (worst angle {angle!r})"
        )


class BoundViolated(SpiralGlueError):
    """A verified inequality failed beyond tolerance."""

    def __init__(self, name: str, slack: float, detail: str = ""):
        self.name = name
        self.slack = slack
        msg = f"inequality '{name}' violated with slack {slack!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NonPositiveLowerBound(SpiralGlueError):
    """Parameters are too large for the two-sided bounds to be meaningful."""
