"""Exact enumeration of weighted walk sums.

The traversal visits one walk per lattice-symmetry class (see
:func:`wsawlab.domain.walk.canonical_extensions`) and records integer
*contact polynomials*: for each length, the number of walks with a given
number of intersecting pairs. Evaluating a polynomial at ``1 - beta`` gives
the partition function, so the stored state is exact and independent of
beta.
"""

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import structlog

from wsawlab.domain.errors import BudgetExceededError, PreconditionError
from wsawlab.domain.parallel import map_ordered
from wsawlab.domain.walk import (
    LatticePoint,
    ModelParams,
    Number,
    canonical_extensions,
    iter_walks,
    pair_interaction,
    torus_representative,
)

logger = structlog.get_logger()

DEFAULT_NODE_BUDGET = 50_000_000

#: ``"direct"`` walks the torus itself; ``"lift"`` walks Z^d and compares sites mod r.
TORUS_DIRECT = "direct"
TORUS_LIFT = "lift"

Polynomial = Dict[int, int]
CanonicalEnds = Dict[Tuple[LatticePoint, int], Polynomial]


def evaluate_polynomial(poly: Mapping[int, int], beta: Number) -> Number:
    """Return ``sum_c count * (1 - beta) ** c``."""
    q = 1 - beta
    return sum(count * q**contacts for contacts, count in poly.items())


@dataclass
class LengthTally:
    """Integer tallies for all walks of one length.

    ``walks`` and ``sq_disp`` are keyed by contact number and already
    multiplied by symmetry-class sizes; ``ends`` is keyed by
    (canonical endpoint, axes used) and holds per-class counts.
    """

    walks: Polynomial = field(default_factory=lambda: defaultdict(int))
    sq_disp: Polynomial = field(default_factory=lambda: defaultdict(int))
    ends: CanonicalEnds = field(default_factory=dict)

    def merge(self, other: "LengthTally") -> None:
        for c, v in other.walks.items():
            self.walks[c] += v
        for c, v in other.sq_disp.items():
            self.sq_disp[c] += v
        for key, poly in other.ends.items():
            mine = self.ends.setdefault(key, defaultdict(int))
            for c, v in poly.items():
                mine[c] += v


def _expand_endpoints(
    ends: CanonicalEnds, beta: float, d: int, r: Optional[int]
) -> Dict[LatticePoint, float]:
    table: Dict[LatticePoint, float] = defaultdict(float)
    for (point, k_used), poly in ends.items():
        weight = float(evaluate_polynomial(poly, beta))
        if weight == 0.0:
            continue
        for axes in itertools.permutations(range(d), k_used):
            for signs in itertools.product((1, -1), repeat=k_used):
                image = [0] * d
                for i in range(k_used):
                    image[axes[i]] = signs[i] * point[i]
                key = tuple(image) if r is None else torus_representative(tuple(image), r)
                table[key] += weight
    return dict(table)


@dataclass(frozen=True)
class EnumerationSummary:
    """Exact weighted sums over all walks of length ``n``.

    Attributes
    ----------
    c_n : float
        Partition function (torus partition function when ``r`` is set).
    sum_sq_disp : float
        Weighted sum of squared endpoint norms.
    contact_polynomial : Dict[int, int]
        Number of walks per contact count; None for the reference enumerator.
    nodes : int
        Tree nodes visited by the traversal that produced this summary.
    """

    n: int
    d: int
    beta: float
    r: Optional[int]
    c_n: float
    sum_sq_disp: float
    contact_polynomial: Optional[Dict[int, int]] = None
    nodes: int = 0
    _endpoints: Callable[[], Dict[LatticePoint, float]] = field(
        default=dict, repr=False, compare=False
    )

    @cached_property
    def endpoint_weights(self) -> Dict[LatticePoint, float]:
        """Weighted number of walks ending at each site."""
        return self._endpoints()

    @property
    def msd(self) -> float:
        """Mean-square displacement under the weighted measure."""
        return self.sum_sq_disp / self.c_n if self.c_n else math.nan

    def c_n_exact(self, beta: Fraction) -> Fraction:
        """Evaluate the partition function in exact rational arithmetic."""
        if self.contact_polynomial is None:
            raise PreconditionError("summary carries no contact polynomial")
        return Fraction(evaluate_polynomial(self.contact_polynomial, Fraction(beta)))


def _summary_from_tally(
    n: int, tally: LengthTally, params: ModelParams, nodes: int
) -> EnumerationSummary:
    beta, d, r = params.beta, params.d, params.r
    ends = tally.ends
    return EnumerationSummary(
        n=n,
        d=d,
        beta=beta,
        r=r,
        c_n=float(evaluate_polynomial(tally.walks, beta)),
        sum_sq_disp=float(evaluate_polynomial(tally.sq_disp, beta)),
        contact_polynomial=dict(tally.walks),
        nodes=nodes,
        _endpoints=lambda: _expand_endpoints(ends, beta, d, r),
    )


def canonical_prefixes(d: int, depth: int) -> List[Tuple[Tuple[int, ...], int, int]]:
    """Canonical step prefixes of a given length with (axes used, class size)."""
    out: List[Tuple[Tuple[int, ...], int, int]] = [((), 0, 1)]
    for _ in range(depth):
        out = [
            (prefix + (j,), new_k, mult * factor)
            for prefix, k_used, mult in out
            for j, new_k, factor in canonical_extensions(k_used, d)
        ]
    return out


def explore_subtree(
    d: int,
    r: Optional[int],
    mode: str,
    n_max: int,
    prefix: Tuple[int, ...],
    min_depth: int,
    node_budget: int,
) -> Tuple[List[LengthTally], int]:
    """Depth-first traversal of canonical walks extending ``prefix``.

    Nodes at depth ``>= min_depth`` are recorded. Returns the per-length
    tallies and the number of nodes visited (prefix replay not counted).
    """
    tallies = [LengthTally() for _ in range(n_max + 1)]
    torus = r is not None
    half = r // 2 if torus else 0
    direct = torus and mode == TORUS_DIRECT

    pos = [0] * d
    occupancy: Dict[LatticePoint, int] = {}
    state = {"contacts": 0, "k_used": 0, "mult": 1, "nodes": 0}

    def site_key() -> LatticePoint:
        if torus and not direct:
            return tuple(c % r for c in pos)
        return tuple(pos)

    def endpoint_key() -> LatticePoint:
        if torus and not direct:
            return tuple((c + half) % r - half for c in pos)
        return tuple(pos)

    def move(j: int) -> LatticePoint:
        axis, sign = j >> 1, (1 if j % 2 == 0 else -1)
        if direct:
            pos[axis] = (pos[axis] + sign + half) % r - half
        else:
            pos[axis] += sign
        return site_key()

    def unmove(j: int) -> None:
        axis, sign = j >> 1, (1 if j % 2 == 0 else -1)
        if direct:
            pos[axis] = (pos[axis] - sign + half) % r - half
        else:
            pos[axis] -= sign

    def record(depth: int) -> None:
        tally = tallies[depth]
        contacts = state["contacts"]
        tally.walks[contacts] += state["mult"]
        end = endpoint_key()
        tally.sq_disp[contacts] += state["mult"] * sum(c * c for c in end)
        poly = tally.ends.get((end, state["k_used"]))
        if poly is None:
            poly = tally.ends[(end, state["k_used"])] = defaultdict(int)
        poly[contacts] += 1

    occupancy[site_key()] = 1
    extensions_cache = {k: canonical_extensions(k, d) for k in range(d + 1)}
    for j in prefix:
        for step, new_k, factor in extensions_cache[state["k_used"]]:
            if step == j:
                break
        else:
            raise PreconditionError(f"prefix {prefix} is not canonical")
        key = move(j)
        m = occupancy.get(key, 0)
        occupancy[key] = m + 1
        state["contacts"] += m
        state["k_used"] = new_k
        state["mult"] *= factor

    def visit(depth: int) -> None:
        state["nodes"] += 1
        if state["nodes"] > node_budget:
            raise BudgetExceededError("enumeration", node_budget, state["nodes"])
        if depth >= min_depth:
            record(depth)
        if depth == n_max:
            return
        k_used, mult, contacts = state["k_used"], state["mult"], state["contacts"]
        for j, new_k, factor in extensions_cache[k_used]:
            key = move(j)
            m = occupancy.get(key, 0)
            occupancy[key] = m + 1
            state["contacts"] = contacts + m
            state["k_used"] = new_k
            state["mult"] = mult * factor
            visit(depth + 1)
            if m:
                occupancy[key] = m
            else:
                del occupancy[key]
            unmove(j)
        state["k_used"], state["mult"], state["contacts"] = k_used, mult, contacts

    visit(len(prefix))
    return tallies, state["nodes"]


def _explore_star(args: Tuple) -> Tuple[List[LengthTally], int]:
    return explore_subtree(*args)


def _tally_lengths(
    params: ModelParams,
    n_max: int,
    mode: str,
    workers: int,
    node_budget: int,
    split_depth: int,
) -> Tuple[List[LengthTally], int]:
    d, r = params.d, params.r
    split = min(split_depth, n_max) if workers > 1 else 0
    if split == 0:
        return explore_subtree(d, r, mode, n_max, (), 0, node_budget)

    # shallow part above the split, then one task per canonical prefix
    tallies, nodes = explore_subtree(d, r, mode, split - 1, (), 0, node_budget)
    tallies.extend(LengthTally() for _ in range(n_max - split + 1))
    tasks = [
        (d, r, mode, n_max, prefix, split, node_budget)
        for prefix, _, _ in canonical_prefixes(d, split)
    ]
    for sub_tallies, sub_nodes in map_ordered(_explore_star, tasks, workers):
        for mine, theirs in zip(tallies, sub_tallies):
            mine.merge(theirs)
        nodes += sub_nodes
    if nodes > node_budget:
        raise BudgetExceededError("enumeration", node_budget, nodes)
    return tallies, nodes


def enumerate_lengths(
    params: ModelParams,
    n_max: Optional[int] = None,
    *,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
    split_depth: int = 2,
    torus_mode: str = TORUS_DIRECT,
) -> List[EnumerationSummary]:
    """Exact summaries for every length ``0..n_max`` from one traversal.

    Parameters
    ----------
    params : ModelParams
        ``params.n`` is used when ``n_max`` is None.
    workers : int, optional
        Process count; canonical prefixes of length ``split_depth`` are
        distributed and merged in prefix order.
    node_budget : int, optional
        Abort with :class:`BudgetExceededError` beyond this many tree nodes.
    torus_mode : str, optional
        ``"direct"`` walks the torus, ``"lift"`` walks Z^d with K^T weights.
    """
    n_max = params.n if n_max is None else n_max
    if n_max < 0:
        raise PreconditionError(f"n_max must be nonnegative, got {n_max}")
    if torus_mode not in (TORUS_DIRECT, TORUS_LIFT):
        raise PreconditionError(f"unknown torus mode {torus_mode!r}")
    tallies, nodes = _tally_lengths(params, n_max, torus_mode, workers, node_budget, split_depth)
    logger.debug(
        "enumeration_completed",
        d=params.d,
        r=params.r,
        n_max=n_max,
        nodes=nodes,
        mode=torus_mode,
    )
    return [_summary_from_tally(k, tally, params, nodes) for k, tally in enumerate(tallies)]


def enumerate_walks(params: ModelParams, **kwargs) -> EnumerationSummary:
    """Exact c_n (or c_n^T), weighted second moment and endpoint table."""
    return enumerate_lengths(params, params.n, **kwargs)[-1]


def enumerate_torus_via_lift(params: ModelParams, **kwargs) -> EnumerationSummary:
    """c_n^T as a sum of K^T over Z^d walks, using the lift bijection."""
    if params.r is None:
        raise PreconditionError("enumerate_torus_via_lift needs a torus side r")
    kwargs["torus_mode"] = TORUS_LIFT
    return enumerate_lengths(params, params.n, **kwargs)[-1]


def enumerate_reference(params: ModelParams) -> EnumerationSummary:
    """Naive enumerator: literal product over all pairs, no incremental state.

    Only suitable for tiny cases; it is the oracle for :func:`enumerate_walks`.
    """
    beta, n = params.beta, params.n
    c_n = 0.0
    sum_sq = 0.0
    endpoints: Dict[LatticePoint, float] = defaultdict(float)
    for w in iter_walks(params.d, n, params.r):
        weight = 1.0
        for s in range(n + 1):
            for t in range(s + 1, n + 1):
                weight *= 1.0 + beta * pair_interaction(w, s, t)
        end = w.endpoint
        c_n += weight
        sum_sq += weight * sum(c * c for c in end)
        endpoints[end] += weight
    table = {k: v for k, v in endpoints.items() if v != 0.0}
    return EnumerationSummary(
        n=n,
        d=params.d,
        beta=beta,
        r=params.r,
        c_n=c_n,
        sum_sq_disp=sum_sq,
        _endpoints=lambda: table,
    )


def connective_ratio_sequence(params: ModelParams, n_max: int, **kwargs) -> List[float]:
    """Return ``c_{k+1} / c_k`` for ``k < n_max``."""
    summaries = enumerate_lengths(params, n_max, **kwargs)
    return [summaries[k + 1].c_n / summaries[k].c_n for k in range(n_max)]


@dataclass(frozen=True)
class AmplitudeFit:
    """Fit of ``log c_n = log A + n log mu`` over a window of lengths."""

    a_hat: float
    mu_hat: float
    window: Tuple[int, int]

    @property
    def z_c_hat(self) -> float:
        return 1.0 / self.mu_hat


def estimate_amplitude(
    summaries: Sequence[EnumerationSummary], window: Optional[Tuple[int, int]] = None
) -> AmplitudeFit:
    """Least-squares fit of the exponential growth of c_n."""
    lo, hi = window if window is not None else (max(1, len(summaries) // 2), len(summaries) - 1)
    points = [(s.n, s.c_n) for s in summaries if lo <= s.n <= hi and s.c_n > 0]
    if len(points) < 2:
        raise PreconditionError(f"need at least two lengths in window {(lo, hi)}")
    ns = np.array([p[0] for p in points], dtype=float)
    logs = np.log([p[1] for p in points])
    slope, intercept = np.polyfit(ns, logs, 1)
    return AmplitudeFit(a_hat=float(np.exp(intercept)), mu_hat=float(np.exp(slope)), window=(lo, hi))


@dataclass(frozen=True)
class TwoPointTable:
    """Truncated two-point function ``sum_{n <= n_max} z^n sum_{0 -> x} K``.

    Attributes
    ----------
    truncation_error : float
        Magnitude of the last included term, ``z^n_max c_n_max``.
    """

    z: float
    n_max: int
    values: Dict[LatticePoint, float]
    susceptibility_partial: float
    truncation_error: float
    r: Optional[int] = None


def two_point_series(params: ModelParams, z: float, n_max: int, **kwargs) -> TwoPointTable:
    """Truncated G_z (or G_z^T on the torus) per endpoint."""
    if z < 0:
        raise PreconditionError(f"activity must be nonnegative, got {z}")
    summaries = enumerate_lengths(params, n_max, **kwargs)
    values: Dict[LatticePoint, float] = defaultdict(float)
    chi = 0.0
    last = 0.0
    for s in summaries:
        coeff = z**s.n
        if coeff == 0.0:
            continue
        for x, weight in s.endpoint_weights.items():
            values[x] += coeff * weight
        last = coeff * s.c_n
        chi += last
    return TwoPointTable(
        z=z,
        n_max=n_max,
        values=dict(values),
        susceptibility_partial=chi,
        truncation_error=abs(last),
        r=params.r,
    )


def fold_table(values: Mapping[LatticePoint, float], r: int) -> Dict[LatticePoint, float]:
    """Sum a Z^d table over residue classes modulo ``r``."""
    folded: Dict[LatticePoint, float] = defaultdict(float)
    for x, v in values.items():
        folded[torus_representative(tuple(x), r)] += v
    return dict(folded)


def lattice_images(point: Iterable[int]) -> List[LatticePoint]:
    """All images of a point under coordinate permutations and sign flips."""
    coords = tuple(point)
    images = set()
    for perm in itertools.permutations(coords):
        for signs in itertools.product((1, -1), repeat=len(coords)):
            images.add(tuple(s * c for s, c in zip(signs, perm)))
    return sorted(images)
