"""Shared structures for the concrete space implementations."""
from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class SpaceError(ValueError):
    """Malformed space description or invalid point."""


@dataclass(frozen=True)
class SigmaDesc:
    """Space of directions at a point: a circle or an arc with a length."""

    length: float
    is_arc: bool = False

    def wrap(self, angle: float) -> float:
        if self.is_arc:
            return angle
        a = math.fmod(angle, self.length)
        return a + self.length if a < 0.0 else a

    def dist(self, a: float, b: float) -> float:
        """Angle metric between two directions (capped at pi by construction)."""
        if self.is_arc:
            return abs(a - b)
        d = abs(self.wrap(a) - self.wrap(b))
        return min(d, self.length - d)

    def valid(self, angle: float, tol: float = 1e-9) -> bool:
        if self.is_arc:
            return -tol <= angle <= self.length + tol
        return True

    def forward_of_back(self, back: float) -> float:
        """Direction continuing the incoming motion whose back angle is given.

        On a circle this is the antipode; on a boundary arc it is the
        mirrored coordinate, which continues boundary slides.
        """
        if self.is_arc:
            return min(max(self.length - back, 0.0), self.length)
        return self.wrap(back + math.pi)


@dataclass
class WalkResult:
    """Outcome of a geodesic walk.

    `end` is where the walk stopped; `traveled` <= requested length with
    equality when no event fired.  `event` is None or one of "vertex",
    "boundary", "corner".  `back_angle` is the direction at `end`, in the
    sigma chart of `end`, pointing back along the incoming segment.
    """

    end: object
    traveled: float
    back_angle: float
    sigma: SigmaDesc
    event: str | None = None
    event_ref: object = None


def wrap_angle(a: float, period: float) -> float:
    x = math.fmod(a, period)
    return x + period if x < 0.0 else x


def angle_of(vx: float, vy: float) -> float:
    return wrap_angle(math.atan2(vy, vx), TWO_PI)
