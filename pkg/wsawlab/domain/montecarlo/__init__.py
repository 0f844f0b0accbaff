"""Monte Carlo estimators: PERM chain growth and fixed-length Metropolis."""

from wsawlab.domain.montecarlo.metropolis import (
    MetropolisChain,
    MetropolisConfig,
    MetropolisResult,
    metropolis_run,
    metropolis_sample,
    sample_paths,
    sample_positions,
)
from wsawlab.domain.montecarlo.perm import (
    ChainGrowthConfig,
    PermResult,
    perm_partition_estimate,
    perm_run,
)
from wsawlab.domain.montecarlo.statistics import (
    EstimateWithError,
    batch_means,
    integrated_autocorrelation_time,
    pool,
    ratio_estimate,
)

__all__ = [
    "ChainGrowthConfig",
    "EstimateWithError",
    "MetropolisChain",
    "MetropolisConfig",
    "MetropolisResult",
    "PermResult",
    "batch_means",
    "integrated_autocorrelation_time",
    "metropolis_run",
    "metropolis_sample",
    "perm_partition_estimate",
    "perm_run",
    "pool",
    "ratio_estimate",
    "sample_paths",
    "sample_positions",
]
