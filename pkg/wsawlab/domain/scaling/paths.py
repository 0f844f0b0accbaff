"""Rescaled walks as continuous piecewise-linear paths, and the path lift.

A path is stored by its knots. On R^d values between knots are linear
interpolations; on the torus [-1/2, 1/2)^d a segment runs along the shortest
displacement between its knots. After the last knot the path is constant.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from wsawlab.domain.errors import PreconditionError
from wsawlab.domain.walk import Walk

#: Radius of the stopping-time construction used to lift torus paths.
LIFT_THRESHOLD = 1.0 / 8.0
_HALF_TOL = 1e-12

TimeLike = Union[float, np.ndarray]


def unit_rep(x: TimeLike) -> np.ndarray:
    """Representative of ``x`` modulo 1 in [-1/2, 1/2)."""
    x = np.asarray(x, dtype=float)
    return x - np.floor(x + 0.5)


@dataclass(frozen=True)
class RescaledPath:
    """Knots of a rescaled walk.

    Attributes
    ----------
    times : np.ndarray
        Strictly increasing knot times starting at 0.
    points : np.ndarray
        ``(len(times), d)`` knot values; representatives when ``torus``.
    horizon : float
        Time horizon T; ``inf`` for the whole half-line.
    scale : Optional[int]
        The r used by :func:`rescale`, if any.
    """

    times: np.ndarray
    points: np.ndarray
    torus: bool = False
    horizon: float = math.inf
    scale: Optional[int] = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if times.ndim != 1 or len(times) == 0 or len(times) != len(points):
            raise PreconditionError("times and points must be non-empty and of equal length")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise PreconditionError("knot times must start at 0 and strictly increase")
        if np.any(points[0] != 0.0):
            raise PreconditionError("a rescaled path starts at the origin")
        if self.torus and (np.any(points < -0.5) or np.any(points >= 0.5)):
            raise PreconditionError("torus knots must lie in [-1/2, 1/2)")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    def _segment(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if len(self.times) == 1:
            return np.zeros(t.shape, dtype=int), np.zeros(t.shape)
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        span = self.times[idx + 1] - self.times[idx]
        frac = np.clip((t - self.times[idx]) / span, 0.0, 1.0)
        return idx, frac

    def evaluate(self, t: TimeLike) -> np.ndarray:
        """Path value at time(s) ``t``: shape ``(d,)`` for a scalar, else ``(len(t), d)``."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(ts < 0):
            raise PreconditionError("paths are defined for t >= 0")
        idx, frac = self._segment(ts)
        if len(self.times) == 1:
            values = np.repeat(self.points[:1], len(ts), axis=0)
        else:
            start = self.points[idx]
            delta = self.points[idx + 1] - start
            if self.torus:
                values = unit_rep(start + frac[:, None] * unit_rep(delta))
            else:
                values = start + frac[:, None] * delta
        return values[0] if scalar else values


def rescale(w: Walk, r: int, horizon: float = math.inf) -> RescaledPath:
    """Knots ``(k / r^2, w(k) / r)``; torus walks give torus paths (mod 1).

    A torus walk must be rescaled by its own side.
    """
    if r < 1:
        raise PreconditionError(f"scale must be positive, got {r}")
    if w.is_torus and w.r != r:
        raise PreconditionError(f"torus walk of side {w.r} rescaled by r={r}")
    times = np.arange(w.n + 1, dtype=float) / r**2
    points = w.positions.astype(float) / r
    if w.is_torus:
        points = unit_rep(points)
    return RescaledPath(times=times, points=points, torus=w.is_torus, horizon=horizon, scale=r)


def knot_floor(t: float, r: int) -> float:
    """The knot time t_r = floor(t r^2) / r^2 at or before t."""
    return math.floor(t * r**2) / r**2


def _check_segments(path: RescaledPath) -> np.ndarray:
    raw = np.diff(path.points, axis=0)
    delta = unit_rep(raw)
    if np.any(delta <= -0.5 + _HALF_TOL):
        raise PreconditionError("a segment moves half the torus; the lift is ill-defined")
    return delta


def _first_exit(offset: np.ndarray, delta: np.ndarray, s0: float) -> Optional[float]:
    """Smallest s in (s0, 1] with |offset + s delta| = threshold, if any.

    Returns ``s0`` itself when the path is already at or past the threshold.
    """
    current = offset + s0 * delta
    if float(current @ current) >= LIFT_THRESHOLD**2:
        return s0
    a = float(delta @ delta)
    if a == 0.0:
        return None
    b = 2.0 * float(offset @ delta)
    c = float(offset @ offset) - LIFT_THRESHOLD**2
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    root = (-b + math.sqrt(disc)) / (2 * a)
    return root if s0 < root <= 1.0 else None


def lift_with_stopping_times(x: RescaledPath) -> Tuple[RescaledPath, List[float]]:
    """Lift a torus path to R^d and report the stopping times used.

    The anchor moves to the first time the path is at distance 1/8 from it;
    between anchors the lift is the anchor value plus the representative of
    the displacement.
    """
    if not x.torus:
        raise PreconditionError("lift_path expects a torus path")
    delta = _check_segments(x)
    lifted = np.zeros_like(x.points)
    anchor_y = np.zeros(x.d)
    anchor_x = x.points[0]
    stopping = [0.0]
    for j in range(len(delta)):
        start_offset = lifted[j] - anchor_y
        s = 0.0
        while True:
            exit_at = _first_exit(start_offset, delta[j], s)
            if exit_at is None:
                break
            s = exit_at
            anchor_y = lifted[j] + s * delta[j]
            anchor_x = unit_rep(x.points[j] + s * delta[j])
            start_offset = lifted[j] - anchor_y
            stopping.append(float(x.times[j] + s * (x.times[j + 1] - x.times[j])))
        lifted[j + 1] = anchor_y + unit_rep(x.points[j + 1] - anchor_x)
    path = RescaledPath(times=x.times, points=lifted, torus=False, horizon=x.horizon, scale=x.scale)
    return path, stopping


def lift_path(x: RescaledPath) -> RescaledPath:
    """The continuous R^d path y with y(0) = 0 and y = x mod 1."""
    return lift_with_stopping_times(x)[0]


def project_path(y: RescaledPath) -> RescaledPath:
    """Reduce an R^d path mod 1, refining segments so each moves less than 1/2."""
    if y.torus:
        raise PreconditionError("project_path expects an R^d path")
    times: List[float] = [0.0]
    points: List[np.ndarray] = [unit_rep(y.points[0])]
    for j in range(len(y.times) - 1):
        delta = y.points[j + 1] - y.points[j]
        pieces = int(math.floor(2.0 * float(np.max(np.abs(delta))))) + 1
        for i in range(1, pieces + 1):
            frac = i / pieces
            times.append(float(y.times[j] + frac * (y.times[j + 1] - y.times[j])))
            points.append(unit_rep(y.points[j] + frac * delta))
    return RescaledPath(
        times=np.array(times), points=np.array(points), torus=True, horizon=y.horizon, scale=y.scale
    )
