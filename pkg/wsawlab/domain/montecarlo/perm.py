"""Pruned-enriched chain growth (PERM) for c_n and c_n^T.

Walks grow one uniformly chosen step at a time, so the Rosenbluth factor is
the constant ``2d`` per step and the weight of a length-k prefix splits as
``W_k = (2d)^k * K~_k`` with ``log K~_k = contacts * log(1 - beta)``. A pilot
run of plain random-walk tours fixes per-length reference levels; PERM tours
compare ``K~_k / ref_k`` (times the copy factor) with the enrich/prune
thresholds. Every tour is a pure function of (seed, tour index).
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from wsawlab.domain.errors import BudgetExceededError, DegenerateSamplerError, PreconditionError
from wsawlab.domain.montecarlo.sites import SiteCodec, occurrences_before
from wsawlab.domain.montecarlo.statistics import EstimateWithError, batch_means, ratio_estimate
from wsawlab.domain.montecarlo.streams import PILOT, TOUR, BufferedDraws, stream
from wsawlab.domain.parallel import map_ordered
from wsawlab.domain.walk import ModelParams, step_vectors, torus_representative

logger = structlog.get_logger()


class ChainGrowthConfig(BaseModel):
    """PERM controls."""

    model_config = ConfigDict(frozen=True)

    tours: int = Field(200, ge=2, description="Independent PERM tours")
    enrich_threshold: float = Field(3.0, gt=0.0)
    prune_threshold: float = Field(0.3, gt=0.0)
    seed: int = Field(0, ge=0, lt=2**64)
    pilot_tours: int = Field(100, ge=1, description="Plain random walks fixing reference levels")
    max_nodes: int = Field(20_000_000, ge=1, description="Cap on grown nodes over all tours")

    @model_validator(mode="after")
    def _thresholds_ordered(self) -> "ChainGrowthConfig":
        if not self.prune_threshold < self.enrich_threshold:
            raise ValueError(
                f"prune_threshold {self.prune_threshold} must be below "
                f"enrich_threshold {self.enrich_threshold}"
            )
        return self


def _log_contact_factor(contacts: np.ndarray, beta: float) -> np.ndarray:
    if beta >= 1.0:
        return np.where(contacts > 0, -np.inf, 0.0)
    return contacts * math.log1p(-beta)


def pilot_log_references(params: ModelParams, n: int, tours: int, seed: int) -> np.ndarray:
    """Per-length ``log mean K~_k`` from plain random walks.

    Lengths where every pilot walk has weight zero reuse the previous level.
    """
    d, r = params.d, params.r
    rng = stream(seed, PILOT)
    steps = rng.integers(0, 2 * d, size=(tours, n))
    positions = np.zeros((tours, n + 1, d), dtype=np.int64)
    positions[:, 1:] = np.cumsum(step_vectors(d)[steps], axis=1)
    keys = SiteCodec.for_walks(d, n, r).encode(positions)
    contacts = np.cumsum(occurrences_before(keys), axis=1)
    log_k = _log_contact_factor(contacts, params.beta)

    top = np.max(log_k, axis=0)
    refs = np.zeros(n + 1)
    for k in range(n + 1):
        if np.isfinite(top[k]):
            refs[k] = top[k] + math.log(np.mean(np.exp(log_k[:, k] - top[k])))
        else:
            refs[k] = refs[k - 1] if k else 0.0
    return refs


@dataclass
class TourResult:
    """Per-length sums of scaled weights for one tour."""

    weights: np.ndarray
    weighted_sq: np.ndarray
    nodes: int
    depth: int


def run_tour(
    params: ModelParams,
    n: int,
    cfg: ChainGrowthConfig,
    log_refs: np.ndarray,
    index: int,
    node_cap: int,
) -> TourResult:
    """Grow one PERM tour depth first with an explicit stack.

    A stack entry ``(k, factor)`` means: extend the current prefix of length
    ``k`` by one random step, giving the child the copy factor ``factor``.
    """
    d, r, beta = params.d, params.r, params.beta
    log_q = math.log1p(-beta) if beta < 1.0 else -math.inf
    vectors = [tuple(int(c) for c in v) for v in step_vectors(d)]
    draws = BufferedDraws(stream(cfg.seed, TOUR, index), 2 * d)
    enrich, prune = cfg.enrich_threshold, cfg.prune_threshold
    half = r // 2 if r is not None else 0

    weights = np.zeros(n + 1)
    weighted_sq = np.zeros(n + 1)
    weights[0] = 1.0

    origin = (0,) * d
    path: List[Tuple[int, ...]] = [origin]
    keys: List[Tuple[int, ...]] = [origin]
    contacts_at: List[int] = [0]
    occupancy: Dict[Tuple[int, ...], int] = {origin: 1}
    stack: List[Tuple[int, float]] = [(0, 1.0)]
    nodes = 1
    depth = 0

    while stack:
        k, factor = stack.pop()
        while len(path) > k + 1:
            key = keys.pop()
            path.pop()
            contacts_at.pop()
            m = occupancy[key] - 1
            if m:
                occupancy[key] = m
            else:
                del occupancy[key]

        step = vectors[draws.integer()]
        site = tuple(a + b for a, b in zip(path[-1], step))
        key = site if r is None else tuple(c % r for c in site)
        m = occupancy.get(key, 0)
        occupancy[key] = m + 1
        contacts = contacts_at[-1] + m
        path.append(site)
        keys.append(key)
        contacts_at.append(contacts)
        k += 1
        nodes += 1
        depth = max(depth, k)
        if nodes > node_cap:
            raise BudgetExceededError("chain growth nodes", node_cap, nodes)

        log_k = contacts * log_q if contacts else 0.0
        if log_k == -math.inf:
            continue
        w = factor * math.exp(log_k - log_refs[k])
        weights[k] += w
        if r is None:
            weighted_sq[k] += w * sum(c * c for c in site)
        else:
            weighted_sq[k] += w * sum(((c + half) % r - half) ** 2 for c in site)
        if k == n:
            continue
        if w > enrich:
            stack.append((k, factor / 2.0))
            stack.append((k, factor / 2.0))
        elif w < prune:
            if draws.uniform() < 0.5:
                stack.append((k, factor * 2.0))
        else:
            stack.append((k, factor))

    return TourResult(weights=weights, weighted_sq=weighted_sq, nodes=nodes, depth=depth)


def _run_tour_batch(args: Tuple) -> List[TourResult]:
    params, n, cfg, log_refs, indices, node_cap = args
    return [run_tour(params, n, cfg, log_refs, i, node_cap) for i in indices]


@dataclass(frozen=True)
class PermResult:
    """Per-length PERM estimates.

    ``log_c[k]`` is log c_k with a delta-method error; ``c[k]`` is the linear
    scale estimate (``inf`` once c_k overflows a float). ``msd[k]`` is the
    weighted mean of |w(k)|^2 (torus: representative norm).
    """

    d: int
    beta: float
    r: Optional[int]
    n: int
    log_c: Tuple[EstimateWithError, ...]
    c: Tuple[EstimateWithError, ...]
    msd: Tuple[Optional[EstimateWithError], ...]
    tours: int
    nodes: int
    max_depth: int

    @property
    def c_n(self) -> EstimateWithError:
        return self.c[self.n]

    @property
    def log_c_n(self) -> EstimateWithError:
        return self.log_c[self.n]

    def msd_table(self, lengths: Sequence[int]) -> Dict[int, float]:
        return {k: self.msd[k].mean for k in lengths if self.msd[k] is not None}


def perm_run(
    params: ModelParams,
    cfg: ChainGrowthConfig,
    n: Optional[int] = None,
    *,
    workers: int = 1,
) -> PermResult:
    """Run the pilot and ``cfg.tours`` PERM tours; estimate every length up to n."""
    n = params.n if n is None else n
    if n < 1:
        raise PreconditionError(f"chain growth needs n >= 1, got {n}")
    log_refs = pilot_log_references(params, n, cfg.pilot_tours, cfg.seed)

    chunks = max(1, workers)
    indices = list(range(cfg.tours))
    batches = [indices[i::chunks] for i in range(chunks)]
    node_cap = cfg.max_nodes
    tasks = [(params, n, cfg, log_refs, batch, node_cap) for batch in batches if batch]
    by_index: Dict[int, TourResult] = {}
    for batch, results in zip([b for b in batches if b], map_ordered(_run_tour_batch, tasks, workers)):
        by_index.update(zip(batch, results))
    tours = [by_index[i] for i in indices]

    total_nodes = sum(t.nodes for t in tours)
    if total_nodes > node_cap:
        raise BudgetExceededError("chain growth nodes", node_cap, total_nodes)
    weights = np.array([t.weights for t in tours])
    weighted_sq = np.array([t.weighted_sq for t in tours])
    if not np.any(weights[:, n] > 0):
        stats = {
            "tours": cfg.tours,
            "nodes": total_nodes,
            "max_depth": max(t.depth for t in tours),
            "target_length": n,
        }
        raise DegenerateSamplerError("every chain-growth tour died before the target length", stats)

    log_c: List[EstimateWithError] = []
    c: List[EstimateWithError] = []
    msd: List[Optional[EstimateWithError]] = []
    log_2d = math.log(2 * params.d)
    for k in range(n + 1):
        est = batch_means(weights[:, k])
        scale_log = k * log_2d + log_refs[k]
        if est.mean > 0:
            log_mean = scale_log + math.log(est.mean)
            log_c.append(
                EstimateWithError(
                    mean=log_mean, std_error=est.std_error / est.mean, n_effective=est.n_effective
                )
            )
        else:
            log_c.append(EstimateWithError(mean=-math.inf, std_error=0.0, n_effective=1.0))
        scale = float((2 * params.d) ** k) * math.exp(log_refs[k]) if scale_log < 700 else math.inf
        c.append(
            EstimateWithError(
                mean=scale * est.mean,
                std_error=scale * est.std_error if est.std_error else 0.0,
                n_effective=est.n_effective,
            )
        )
        msd.append(ratio_estimate(weighted_sq[:, k], weights[:, k]) if est.mean > 0 else None)

    logger.info(
        "perm_completed",
        d=params.d,
        beta=params.beta,
        r=params.r,
        n=n,
        tours=cfg.tours,
        nodes=total_nodes,
        log_c_n=log_c[n].mean,
    )
    return PermResult(
        d=params.d,
        beta=params.beta,
        r=params.r,
        n=n,
        log_c=tuple(log_c),
        c=tuple(c),
        msd=tuple(msd),
        tours=cfg.tours,
        nodes=total_nodes,
        max_depth=max(t.depth for t in tours),
    )


def perm_partition_estimate(
    params: ModelParams, cfg: ChainGrowthConfig, *, workers: int = 1
) -> EstimateWithError:
    """Estimate of c_n (c_n^T when ``params.r`` is set) with a batch-means error."""
    return perm_run(params, cfg, workers=workers).c_n
