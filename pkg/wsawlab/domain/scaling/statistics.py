"""Statistics of rescaled walks: diffusion fits, characteristic functions, tightness."""

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from wsawlab.domain.errors import PreconditionError
from wsawlab.domain.walk import Walk, lift_walk

Frequency = Tuple[float, ...]
FrequencyTuple = Tuple[Frequency, ...]
PathSample = Union[np.ndarray, Sequence[Walk]]


def as_lifted_positions(paths: PathSample) -> np.ndarray:
    """``(S, n + 1, d)`` Z^d positions; torus walks are lifted first."""
    if isinstance(paths, np.ndarray):
        if paths.ndim != 3:
            raise PreconditionError("position samples must have shape (S, n + 1, d)")
        return paths
    walks = list(paths)
    if not walks:
        raise PreconditionError("empty path sample")
    return np.stack([(lift_walk(w) if w.is_torus else w).positions for w in walks])


@dataclass(frozen=True)
class DiffusionFit:
    """Slope of E|w(n)|^2 against n through the origin."""

    d_hat: float
    window: Tuple[int, int]
    residual: float
    points: int


def diffusion_fit(msd_by_n: Mapping[int, float], window: Tuple[int, int]) -> DiffusionFit:
    """Least-squares D_hat for ``msd ~ D n`` over lengths in ``window``.

    ``residual`` is the largest relative deviation of the data from D_hat n.
    """
    lo, hi = window
    if lo > hi:
        raise PreconditionError(f"empty window {window}")
    pairs = sorted((n, m) for n, m in msd_by_n.items() if lo <= n <= hi and n > 0)
    if len(pairs) < 2:
        raise PreconditionError(f"need at least two lengths in window {window}, got {len(pairs)}")
    ns = np.array([p[0] for p in pairs], dtype=float)
    ms = np.array([p[1] for p in pairs], dtype=float)
    d_hat = float(np.dot(ns, ms) / np.dot(ns, ns))
    if d_hat <= 0:
        raise PreconditionError(f"non-positive diffusion constant {d_hat}")
    residual = float(np.max(np.abs(ms - d_hat * ns) / (d_hat * ns)))
    return DiffusionFit(d_hat=d_hat, window=(lo, hi), residual=residual, points=len(pairs))


@dataclass(frozen=True)
class IncrementSpec:
    """Block times 0 = t_0 < ... < t_N and scale k (the role of r^2 or k_n)."""

    times: Tuple[float, ...]
    k: float
    frequencies: Optional[FrequencyTuple] = None

    def __post_init__(self) -> None:
        times = tuple(float(t) for t in self.times)
        if len(times) < 2 or times[0] != 0.0:
            raise PreconditionError("need times 0 = t_0 < t_1 < ... with at least one block")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise PreconditionError("block times must strictly increase")
        if self.k <= 0:
            raise PreconditionError(f"scale k must be positive, got {self.k}")
        object.__setattr__(self, "times", times)
        if self.frequencies is not None and len(self.frequencies) != self.blocks:
            raise PreconditionError("one frequency vector per block is required")

    @property
    def blocks(self) -> int:
        return len(self.times) - 1

    def indices(self) -> List[int]:
        return [int(math.floor(t * self.k)) for t in self.times]

    @classmethod
    def uniform(cls, blocks: int, horizon: float, k: float) -> "IncrementSpec":
        return cls(times=tuple(horizon * j / blocks for j in range(blocks + 1)), k=k)


def gaussian_reference(frequencies: FrequencyTuple, times: Sequence[float], d: int) -> float:
    """exp(-(1/2d) sum_j |u_j|^2 (t_j - t_{j-1}))."""
    total = 0.0
    for j, u in enumerate(frequencies):
        total += float(np.dot(u, u)) * (times[j + 1] - times[j])
    return math.exp(-total / (2.0 * d))


def random_walk_characteristic(u: Sequence[float], steps: int, scale: float, d: int) -> float:
    """E exp(i u . S_m / scale) for simple random walk: ((1/d) sum_i cos(u_i / scale))^m."""
    base = sum(math.cos(c / scale) for c in u) / d
    return base**steps


def standard_frequency_grid(d: int, blocks: int) -> List[FrequencyTuple]:
    """Axis and diagonal frequencies with |u| in {0.5, 1, 2}.

    For each direction and magnitude: one tuple per single active block, one
    with every block active, and finally the all-zero tuple.
    """
    zero = (0.0,) * d
    axis = (1.0,) + (0.0,) * (d - 1)
    diagonal = tuple(1.0 / math.sqrt(d) for _ in range(d))
    grid: List[FrequencyTuple] = []
    for direction in (axis, diagonal) if d > 1 else (axis,):
        for magnitude in (0.5, 1.0, 2.0):
            u = tuple(magnitude * c for c in direction)
            for j in range(blocks):
                grid.append(tuple(u if i == j else zero for i in range(blocks)))
            if blocks > 1:
                grid.append(tuple(u for _ in range(blocks)))
    grid.append(tuple(zero for _ in range(blocks)))
    return grid


@dataclass(frozen=True)
class FddPoint:
    frequencies: FrequencyTuple
    mean: complex
    std_error: float
    reference: float

    @property
    def deviation(self) -> float:
        return abs(self.mean - self.reference)


@dataclass(frozen=True)
class FddResult:
    """Empirical characteristic functions of block increments on a frequency grid."""

    spec: IncrementSpec
    d_hat: float
    samples: int
    points: Tuple[FddPoint, ...]

    @property
    def deviation(self) -> float:
        return max(p.deviation for p in self.points)


def fdd_statistic(
    paths: PathSample,
    spec: IncrementSpec,
    d_hat: float,
    grid: Optional[Iterable[FrequencyTuple]] = None,
) -> FddResult:
    """Compare E exp(i sum_j u_j . X_j / sqrt(D k)) with the Gaussian limit.

    ``X_j = w(floor(t_j k)) - w(floor(t_{j-1} k))``; torus walks are lifted.
    ``grid`` defaults to ``spec.frequencies``.
    """
    if d_hat <= 0:
        raise PreconditionError(f"D_hat must be positive, got {d_hat}")
    positions = as_lifted_positions(paths)
    samples, length, d = positions.shape
    idx = spec.indices()
    if idx[-1] > length - 1:
        raise PreconditionError(f"floor(t_N k) = {idx[-1]} exceeds walk length {length - 1}")
    if grid is None:
        if spec.frequencies is None:
            raise PreconditionError("no frequencies supplied")
        grid = [spec.frequencies]
    increments = np.stack(
        [positions[:, idx[j + 1]] - positions[:, idx[j]] for j in range(spec.blocks)], axis=1
    ).astype(float)
    norm = math.sqrt(d_hat * spec.k)

    points = []
    for freqs in grid:
        u = np.asarray(freqs, dtype=float)
        if u.shape != (spec.blocks, d):
            raise PreconditionError(f"frequency tuple has shape {u.shape}, expected {(spec.blocks, d)}")
        phase = np.einsum("sjd,jd->s", increments, u) / norm
        cos, sin = np.cos(phase), np.sin(phase)
        mean = complex(cos.mean(), sin.mean())
        se = math.sqrt((cos.var() + sin.var()) / samples) if samples > 1 else 0.0
        points.append(
            FddPoint(
                frequencies=tuple(tuple(float(c) for c in row) for row in u),
                mean=mean,
                std_error=se,
                reference=gaussian_reference(freqs, spec.times, d),
            )
        )
    return FddResult(spec=spec, d_hat=d_hat, samples=samples, points=tuple(points))


def rescaled_values(positions: np.ndarray, r: int, t: float) -> np.ndarray:
    """Y_t for every sample: linear interpolation of w(k)/r at k = t r^2."""
    n = positions.shape[1] - 1
    x = t * r**2
    if x >= n:
        return positions[:, n].astype(float) / r
    k = int(math.floor(x))
    frac = x - k
    return ((1.0 - frac) * positions[:, k] + frac * positions[:, k + 1]) / r


@dataclass(frozen=True)
class TightnessResult:
    a_hat: float
    ratios: Tuple[Tuple[float, float, float], ...]
    r: int


def tightness_check(paths: PathSample, r: int, grid: Iterable[Tuple[float, float]]) -> TightnessResult:
    """A_hat = max over pairs of E|Y_t - Y_s|^2 / |t - s|; pairs with s == t are skipped."""
    positions = as_lifted_positions(paths)
    n = positions.shape[1] - 1
    limit = n / r**2
    ratios = []
    for s, t in grid:
        if s == t:
            continue
        if not (0 <= s <= limit + 1e-12 and 0 <= t <= limit + 1e-12):
            raise PreconditionError(f"pair ({s}, {t}) outside [0, {limit}]")
        diff = rescaled_values(positions, r, t) - rescaled_values(positions, r, s)
        moment = float(np.mean(np.sum(diff**2, axis=1)))
        ratios.append((float(s), float(t), moment / abs(t - s)))
    if not ratios:
        raise PreconditionError("no pair with s != t in the grid")
    return TightnessResult(a_hat=max(x[2] for x in ratios), ratios=tuple(ratios), r=r)


def default_tightness_grid(horizon: float, points: int = 6) -> List[Tuple[float, float]]:
    """All pairs s < t from an evenly spaced grid on [0, horizon]."""
    ts = [horizon * i / (points - 1) for i in range(points)]
    return list(itertools.combinations(ts, 2))
