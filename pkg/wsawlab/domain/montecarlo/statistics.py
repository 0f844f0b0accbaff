"""Batch-means error bars and estimate pooling."""

import math
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from wsawlab.domain.errors import PreconditionError

MAX_BATCHES = 64


class EstimateWithError(BaseModel):
    """A Monte Carlo mean with its standard error.

    Attributes
    ----------
    n_effective : float
        Effective number of independent samples implied by the batch means.
    """

    model_config = ConfigDict(frozen=True)

    mean: float
    std_error: float = Field(..., ge=0.0)
    n_effective: float = Field(..., ge=1.0)

    def covers(self, value: float, sigmas: float = 3.0) -> bool:
        """True when ``value`` lies within ``sigmas`` standard errors of the mean."""
        return abs(self.mean - value) <= sigmas * self.std_error


def batch_size_for(length: int, max_batches: int = MAX_BATCHES) -> int:
    """Smallest power-of-two batch size leaving at most ``max_batches`` batches."""
    size = 1
    while length // size > max_batches:
        size *= 2
    return size


def batch_variance(samples: Sequence[float], max_batches: int = MAX_BATCHES) -> float:
    """Asymptotic variance ``b * var(batch means)``; 0 when the series is constant."""
    x = np.asarray(samples, dtype=float)
    size = batch_size_for(len(x), max_batches)
    count = len(x) // size
    means = x[: count * size].reshape(count, size).mean(axis=1)
    if count < 2:
        return 0.0
    return float(size * means.var(ddof=1))


def batch_means(samples: Sequence[float], max_batches: int = MAX_BATCHES) -> EstimateWithError:
    """Mean of a (possibly correlated) series with a batch-means error bar.

    The batch size doubles until there are at most ``max_batches`` batches.
    """
    x = np.asarray(samples, dtype=float)
    length = len(x)
    if length < 2:
        raise PreconditionError(f"need at least two samples, got {length}")
    mean = float(x.mean())
    variance = float(x.var(ddof=1))
    if variance == 0.0:
        return EstimateWithError(mean=mean, std_error=0.0, n_effective=float(length))
    var_bm = batch_variance(x, max_batches)
    if var_bm == 0.0:
        return EstimateWithError(mean=mean, std_error=0.0, n_effective=float(length))
    n_eff = min(max(length * variance / var_bm, 1.0), float(length))
    return EstimateWithError(
        mean=mean, std_error=math.sqrt(var_bm / length), n_effective=n_eff
    )


def integrated_autocorrelation_time(samples: Sequence[float]) -> float:
    """tau_int from batch means; 0.5 for an uncorrelated series."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        return 0.5
    variance = float(x.var(ddof=1))
    if variance == 0.0:
        return 0.5
    return max(batch_variance(x) / (2.0 * variance), 0.5)


def ratio_estimate(
    numerators: Sequence[float], denominators: Sequence[float]
) -> EstimateWithError:
    """Estimate ``E[num] / E[den]`` with a linearised batch-means error."""
    num = np.asarray(numerators, dtype=float)
    den = np.asarray(denominators, dtype=float)
    if num.shape != den.shape:
        raise PreconditionError("numerator and denominator series differ in length")
    den_mean = float(den.mean())
    if den_mean == 0.0:
        raise PreconditionError("denominator has zero mean")
    ratio = float(num.mean()) / den_mean
    residual = batch_means((num - ratio * den) / den_mean)
    return EstimateWithError(
        mean=ratio, std_error=residual.std_error, n_effective=residual.n_effective
    )


def pool(estimates: Sequence[EstimateWithError]) -> EstimateWithError:
    """Average equally sized independent estimates."""
    if not estimates:
        raise PreconditionError("nothing to pool")
    count = len(estimates)
    mean = math.fsum(e.mean for e in estimates) / count
    std_error = math.sqrt(math.fsum(e.std_error**2 for e in estimates)) / count
    return EstimateWithError(
        mean=mean,
        std_error=std_error,
        n_effective=math.fsum(e.n_effective for e in estimates),
    )
