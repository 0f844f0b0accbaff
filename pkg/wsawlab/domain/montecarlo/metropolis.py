"""Fixed-length Metropolis sampler for P_{beta,n} and its torus analogue.

The state is always a Z^d walk. On the torus, contacts are counted between
sites that agree modulo r, which by the lift bijection samples
P^T_{beta,n,r}; returned walks are projected back to the torus.

Moves (all proposals symmetric):

- pivot: a uniform non-identity signed permutation applied to the part of
  the walk after a uniform pivot time
- kink: ``p_k -> p_{k-1} + p_{k+1} - p_k``
- end: resample the last step
- crankshaft: rotate a U-shaped pair of sites about its middle bond
"""

import math
from dataclasses import dataclass
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from wsawlab.domain.errors import PreconditionError
from wsawlab.domain.montecarlo.observables import parse_observables
from wsawlab.domain.montecarlo.sites import SiteCodec, contacts_from_keys
from wsawlab.domain.montecarlo.statistics import (
    EstimateWithError,
    batch_means,
    integrated_autocorrelation_time,
    pool,
)
from wsawlab.domain.montecarlo.streams import CHAIN, SAMPLE, stream
from wsawlab.domain.parallel import map_ordered
from wsawlab.domain.walk import ModelParams, Walk, step_vectors, torus_representative

logger = structlog.get_logger()

PIVOT, KINK, END, CRANKSHAFT = "pivot", "kink", "end", "crankshaft"


class MetropolisConfig(BaseModel):
    """Metropolis controls; ``sweeps`` includes the thermalisation sweeps."""

    model_config = ConfigDict(frozen=True)

    sweeps: int = Field(2000, ge=1)
    pivot_fraction: float = Field(0.5, ge=0.0, le=1.0)
    thermalization: int = Field(200, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    moves_per_sweep: Optional[int] = Field(None, ge=1, description="Defaults to n")
    local_moves: bool = True
    chains: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "MetropolisConfig":
        if self.thermalization >= self.sweeps:
            raise ValueError(
                f"thermalization ({self.thermalization}) must be below sweeps ({self.sweeps})"
            )
        if self.pivot_fraction == 0.0 and not self.local_moves:
            raise ValueError("pivot_fraction=0 with local moves disabled cannot move the walk")
        return self


class MetropolisChain:
    """One Markov chain over n-step walks.

    Attributes
    ----------
    positions : np.ndarray
        Current ``(n + 1, d)`` Z^d positions.
    contacts : int
        Intersecting pairs of the current state (mod r on the torus).
    """

    def __init__(
        self,
        params: ModelParams,
        cfg: MetropolisConfig,
        rng: np.random.Generator,
        positions: Optional[np.ndarray] = None,
    ) -> None:
        if params.n < 1:
            raise PreconditionError(f"Metropolis sampling needs n >= 1, got {params.n}")
        self.params = params
        self.cfg = cfg
        self.rng = rng
        self.n, self.d, self.r = params.n, params.d, params.r
        self.codec = SiteCodec.for_walks(self.d, self.n, self.r)
        self.moves_per_sweep = cfg.moves_per_sweep or self.n
        self._vectors = step_vectors(self.d)
        self._local = self._local_kinds() if cfg.local_moves else []
        self.proposed: Dict[str, int] = {}
        self.accepted: Dict[str, int] = {}
        start = positions if positions is not None else Walk.straight(self.n, self.d).positions
        self.set_positions(start)

    def _local_kinds(self) -> List[str]:
        kinds = [END]
        if self.n >= 2:
            kinds.append(KINK)
        if self.n >= 3 and self.d >= 2:
            kinds.append(CRANKSHAFT)
        return kinds

    def set_positions(self, positions: np.ndarray) -> None:
        pos = np.array(positions, dtype=np.int64)
        if pos.shape != (self.n + 1, self.d):
            raise PreconditionError(f"expected positions of shape {(self.n + 1, self.d)}")
        Walk.from_positions(pos)
        self.positions = pos
        self.contacts = self.count_contacts(pos)

    def count_contacts(self, positions: np.ndarray) -> int:
        return contacts_from_keys(self.codec.encode(positions))

    def _residue(self, x: np.ndarray) -> np.ndarray:
        return x if self.r is None else np.mod(x, self.r)

    def acceptance_probability(self, delta: int) -> float:
        """min(1, (1 - beta)^delta) for a change of ``delta`` contacts."""
        if delta <= 0:
            return 1.0
        return (1.0 - self.params.beta) ** delta

    def _accept(self, delta: int) -> bool:
        p = self.acceptance_probability(delta)
        if p >= 1.0:
            return True
        if p == 0.0:
            return False
        return bool(self.rng.random() < p)

    def _local_delta(self, indices: Sequence[int], new_sites: np.ndarray) -> int:
        mask = np.ones(self.n + 1, dtype=bool)
        mask[list(indices)] = False
        others = self._residue(self.positions[mask])
        old = self._residue(self.positions[list(indices)])
        new = self._residue(new_sites)
        delta = 0
        for o, w in zip(old, new):
            delta += int(np.all(others == w, axis=1).sum()) - int(np.all(others == o, axis=1).sum())
        for i in range(len(indices)):
            for j in range(i + 1, len(indices)):
                delta += int(np.array_equal(new[i], new[j])) - int(np.array_equal(old[i], old[j]))
        return delta

    def _try_local(self, indices: Sequence[int], new_sites: np.ndarray) -> bool:
        delta = self._local_delta(indices, new_sites)
        if not self._accept(delta):
            return False
        self.positions[list(indices)] = new_sites
        self.contacts += delta
        return True

    def _random_symmetry(self) -> Tuple[np.ndarray, np.ndarray]:
        while True:
            perm = self.rng.permutation(self.d)
            signs = self.rng.choice(np.array([1, -1]), size=self.d)
            if np.any(perm != np.arange(self.d)) or np.any(signs != 1):
                return perm, signs

    def pivot(self) -> bool:
        i = int(self.rng.integers(0, self.n))
        perm, signs = self._random_symmetry()
        anchor = self.positions[i]
        tail = self.positions[i + 1 :] - anchor
        proposal = self.positions.copy()
        proposal[i + 1 :] = anchor + signs * tail[:, perm]
        new_contacts = self.count_contacts(proposal)
        if not self._accept(new_contacts - self.contacts):
            return False
        self.positions = proposal
        self.contacts = new_contacts
        return True

    def kink(self) -> bool:
        k = int(self.rng.integers(1, self.n))
        pos = self.positions
        site = pos[k - 1] + pos[k + 1] - pos[k]
        return self._try_local([k], site[None, :])

    def end_step(self) -> bool:
        step = self._vectors[int(self.rng.integers(0, 2 * self.d))]
        site = self.positions[self.n - 1] + step
        return self._try_local([self.n], site[None, :])

    def crankshaft(self) -> bool:
        k = int(self.rng.integers(1, self.n - 1))
        pos = self.positions
        a = pos[k] - pos[k - 1]
        b = pos[k + 1] - pos[k]
        # U shape only: steps a, b, -a with b perpendicular to a
        if np.dot(a, b) != 0 or not np.array_equal(pos[k + 2] - pos[k + 1], -a):
            return False
        axis_b = int(np.flatnonzero(b)[0])
        choices = [v for v in self._vectors if v[axis_b] == 0]
        a_new = choices[int(self.rng.integers(0, len(choices)))]
        first = pos[k - 1] + a_new
        sites = np.stack([first, first + b])
        return self._try_local([k, k + 1], sites)

    def move(self) -> str:
        """Propose and accept/reject one move; returns its kind."""
        use_pivot = not self._local or self.rng.random() < self.cfg.pivot_fraction
        if use_pivot:
            kind, ok = PIVOT, self.pivot()
        else:
            kind = self._local[int(self.rng.integers(0, len(self._local)))]
            ok = {KINK: self.kink, END: self.end_step, CRANKSHAFT: self.crankshaft}[kind]()
        self.proposed[kind] = self.proposed.get(kind, 0) + 1
        if ok:
            self.accepted[kind] = self.accepted.get(kind, 0) + 1
        return kind

    def sweep(self) -> None:
        for _ in range(self.moves_per_sweep):
            self.move()

    def acceptance_rates(self) -> Dict[str, float]:
        return {k: self.accepted.get(k, 0) / v for k, v in self.proposed.items() if v}


@dataclass(frozen=True)
class MetropolisResult:
    """Pooled estimates plus the per-chain traces they came from.

    ``traces[c]`` has shape ``(measured sweeps, len(observables))``.
    """

    observables: Tuple[str, ...]
    estimates: Dict[str, EstimateWithError]
    traces: Tuple[np.ndarray, ...]
    acceptance: Dict[str, float]
    thermalization: int

    def trace_rows(self) -> List[List[float]]:
        """``[chain, sweep, values...]`` rows in chain order."""
        rows = []
        for c, trace in enumerate(self.traces):
            for i, values in enumerate(trace):
                rows.append([c, self.thermalization + i + 1, *values.tolist()])
        return rows


def _run_chain(
    params: ModelParams, cfg: MetropolisConfig, names: Tuple[str, ...], index: int
) -> Tuple[np.ndarray, Dict[str, int], Dict[str, int]]:
    observables = parse_observables(names, params.n, params.d, params.r)
    chain = MetropolisChain(params, cfg, stream(cfg.seed, CHAIN, index))
    for _ in range(cfg.thermalization):
        chain.sweep()
    measured = cfg.sweeps - cfg.thermalization
    trace = np.empty((measured, len(observables)))
    for i in range(measured):
        chain.sweep()
        trace[i] = [obs.evaluate(chain.positions, chain.contacts) for obs in observables]
    return trace, chain.proposed, chain.accepted


def metropolis_run(
    params: ModelParams, cfg: MetropolisConfig, observables: Sequence[str], workers: int = 1
) -> MetropolisResult:
    """Run ``cfg.chains`` independent chains and pool their batch-means estimates.

    Chains fan out over ``workers`` processes; each draws from its own
    spawned stream, so the result does not depend on ``workers``.
    """
    parsed = parse_observables(observables, params.n, params.d, params.r)
    names = tuple(obs.name for obs in parsed)
    runs = map_ordered(partial(_run_chain, params, cfg, names), range(cfg.chains), workers)
    traces = []
    proposed: Dict[str, int] = {}
    accepted: Dict[str, int] = {}
    for trace, p, a in runs:
        traces.append(trace)
        for k, v in p.items():
            proposed[k] = proposed.get(k, 0) + v
        for k, v in a.items():
            accepted[k] = accepted.get(k, 0) + v

    estimates = {
        obs.name: pool([batch_means(trace[:, j]) for trace in traces])
        for j, obs in enumerate(parsed)
    }
    acceptance = {k: accepted.get(k, 0) / v for k, v in proposed.items() if v}
    logger.info(
        "metropolis_completed",
        d=params.d,
        beta=params.beta,
        r=params.r,
        n=params.n,
        chains=cfg.chains,
        sweeps=cfg.sweeps,
        acceptance=acceptance,
    )
    return MetropolisResult(
        observables=tuple(obs.name for obs in parsed),
        estimates=estimates,
        traces=tuple(traces),
        acceptance=acceptance,
        thermalization=cfg.thermalization,
    )


def metropolis_sample(
    params: ModelParams, cfg: MetropolisConfig, observables: Sequence[str], workers: int = 1
) -> Dict[str, EstimateWithError]:
    """Batch-means estimates of the named observables under P_{beta,n} (or P^T)."""
    return metropolis_run(params, cfg, observables, workers).estimates


def _chain_snapshots(
    params: ModelParams, cfg: MetropolisConfig, task: Tuple[int, int]
) -> Tuple[np.ndarray, int]:
    index, count = task
    chain = MetropolisChain(params, cfg, stream(cfg.seed, SAMPLE, index))
    for _ in range(cfg.thermalization):
        chain.sweep()
    norms = []
    for _ in range(cfg.sweeps - cfg.thermalization):
        chain.sweep()
        end = chain.positions[-1]
        if params.r is not None:
            end = torus_representative(end, params.r)
        norms.append(float(np.dot(end, end)))
    tau = integrated_autocorrelation_time(norms)
    spacing = max(1, math.ceil(2.0 * tau))
    snapshots = np.empty((count, params.n + 1, params.d), dtype=np.int64)
    for i in range(count):
        for _ in range(spacing):
            chain.sweep()
        snapshots[i] = chain.positions
    return snapshots, spacing


def sample_positions(
    params: ModelParams, cfg: MetropolisConfig, count: int, workers: int = 1
) -> np.ndarray:
    """Decorrelated Z^d position arrays, shape ``(count, n + 1, d)``.

    Each chain thermalises, estimates tau_int of |w(n)|^2 over the remaining
    sweeps and then records a snapshot every ceil(2 tau_int) sweeps. On the
    torus these are the lifted walks.
    """
    if count < 0:
        raise PreconditionError(f"count must be nonnegative, got {count}")
    if count == 0:
        return np.empty((0, params.n + 1, params.d), dtype=np.int64)
    per_chain = [count // cfg.chains + (1 if c < count % cfg.chains else 0) for c in range(cfg.chains)]
    tasks = [(index, share) for index, share in enumerate(per_chain) if share > 0]
    parts = map_ordered(partial(_chain_snapshots, params, cfg), tasks, workers)
    for (index, _), (_, spacing) in zip(tasks, parts):
        logger.debug("snapshot_spacing", chain=index, spacing=spacing)
    return np.concatenate([snapshots for snapshots, _ in parts], axis=0)


def sample_paths(
    params: ModelParams, cfg: MetropolisConfig, count: int, workers: int = 1
) -> List[Walk]:
    """Decorrelated walks from P_{beta,n}, or torus walks from P^T_{beta,n,r}."""
    positions = sample_positions(params, cfg, count, workers)
    if params.r is None:
        return [Walk.from_positions(p) for p in positions]
    return [Walk.from_positions(torus_representative(p, params.r), r=params.r) for p in positions]
