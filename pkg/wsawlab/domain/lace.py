"""Lace-expansion terms J[a, b] and the K = sum K J K factorisation.

J[a, b] is the signed sum over connected graphs on [a, b] of
``prod (beta * U_st)``. Grouping graphs by their lace gives the form used
here::

    J[a, b] = sum_L  prod_{st in L} (beta U_st)  prod_{st in C(L)} (1 + beta U_st)

where C(L) are the edges compatible with L. Every factor ``beta U_st``
vanishes unless ``st`` is a contact pair, so only laces built from contact
pairs are generated.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple

import structlog

from wsawlab.domain.errors import BudgetExceededError, PreconditionError
from wsawlab.domain.walk import ModelParams, Number, Walk, iter_canonical_walks, iter_walks

logger = structlog.get_logger()

Edge = Tuple[int, int]

#: Longest interval for which the unrestricted lace catalogue is built.
LACE_LENGTH_LIMIT = 14
#: Most contact pairs the brute-force graph sum will accept.
GRAPH_ORACLE_MAX_EDGES = 20


@dataclass(frozen=True)
class Interval:
    """Closed time interval [a, b]."""

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a < 0 or self.a > self.b:
            raise PreconditionError(f"invalid interval [{self.a}, {self.b}]")

    @property
    def length(self) -> int:
        return self.b - self.a

    def marks(self, m: int) -> bool:
        """True when the interval enters the factorisation at marked time m."""
        return self.a < m < self.b or self.a == self.b == m


@dataclass(frozen=True)
class Lace:
    """A minimally connected graph on [a, b], edges in lace order."""

    edges: Tuple[Edge, ...]

    def __post_init__(self) -> None:
        edges = tuple(self.edges)
        if not edges:
            raise PreconditionError("a lace has at least one edge")
        for s, t in edges:
            if s >= t:
                raise PreconditionError(f"edge ({s}, {t}) is not increasing")
        for i in range(len(edges) - 1):
            if not edges[i + 1][0] < edges[i][1]:
                raise PreconditionError(f"edges {edges[i]} and {edges[i + 1]} do not overlap")
            if not (edges[i][0] < edges[i + 1][0] and edges[i][1] < edges[i + 1][1]):
                raise PreconditionError(f"edges {edges[i]} and {edges[i + 1]} out of order")
        for i in range(len(edges) - 2):
            if not edges[i][1] <= edges[i + 2][0]:
                raise PreconditionError(f"edges {edges[i]} and {edges[i + 2]} overlap")
        object.__setattr__(self, "edges", edges)

    @property
    def interval(self) -> Interval:
        return Interval(self.edges[0][0], self.edges[-1][1])

    def __len__(self) -> int:
        return len(self.edges)

    def shifted(self, offset: int) -> "Lace":
        return Lace(tuple((s + offset, t + offset) for s, t in self.edges))


@dataclass(frozen=True)
class LaceTerm:
    """J on one interval for one walk; zero whenever b = a + 1."""

    interval: Interval
    value: Number


def is_connected(edges: Sequence[Edge], a: int, b: int) -> bool:
    """True when the open edge intervals cover (a, b) and every edge lies in [a, b].

    The empty graph is connected only on a single point.
    """
    if any(s < a or t > b or s >= t for s, t in edges):
        return False
    if a == b:
        return not edges
    if not any(s == a for s, _ in edges):
        return False
    return all(any(s < c < t for s, t in edges) for c in range(a + 1, b))


def lace_of(edges: Sequence[Edge], a: int, b: int) -> Lace:
    """Select the lace L(G) of a connected graph on [a, b]."""
    graph = set(edges)
    if not is_connected(list(graph), a, b):
        raise PreconditionError(f"graph is not connected on [{a}, {b}]")
    t = max(t for s, t in graph if s == a)
    chosen: List[Edge] = [(a, t)]
    while t < b:
        t_next = max(tt for ss, tt in graph if ss < t)
        s_next = min(ss for ss, tt in graph if tt == t_next)
        chosen.append((s_next, t_next))
        t = t_next
    return Lace(tuple(chosen))


def _grow_laces(
    a: int,
    b: int,
    allowed: Optional[Set[Edge]],
    max_edges: Optional[int],
) -> Iterator[Tuple[Edge, ...]]:
    def ok(edge: Edge) -> bool:
        return allowed is None or edge in allowed

    def extend(prefix: Tuple[Edge, ...], prev_t: int) -> Iterator[Tuple[Edge, ...]]:
        s_i, t_i = prefix[-1]
        if t_i == b:
            yield prefix
            return
        if max_edges is not None and len(prefix) >= max_edges:
            return
        for s in range(max(prev_t, s_i + 1), t_i):
            for t in range(t_i + 1, b + 1):
                if ok((s, t)):
                    yield from extend(prefix + ((s, t),), t_i)

    if a == b:
        return
    for t1 in range(a + 1, b + 1):
        if ok((a, t1)):
            yield from extend(((a, t1),), a)


def enumerate_laces(
    interval: Interval,
    max_edges: Optional[int] = None,
    *,
    length_limit: int = LACE_LENGTH_LIMIT,
    budget: int = 5_000_000,
) -> List[Lace]:
    """All laces on ``interval`` with at most ``max_edges`` edges."""
    if interval.length > length_limit:
        raise BudgetExceededError("lace enumeration length", length_limit, interval.length)
    laces: List[Lace] = []
    for edges in _grow_laces(interval.a, interval.b, None, max_edges):
        laces.append(Lace(edges))
        if len(laces) > budget:
            raise BudgetExceededError("lace enumeration", budget, len(laces))
    return laces


def laces_by_graph_reduction(interval: Interval) -> Set[Lace]:
    """Distinct images of L(G) over every connected graph on ``interval``.

    Exponential in the number of pairs; meant for intervals of length <= 5.
    """
    a, b = interval.a, interval.b
    pairs = [(s, t) for s in range(a, b + 1) for t in range(s + 1, b + 1)]
    images: Set[Lace] = set()
    for mask in range(1, 1 << len(pairs)):
        graph = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        if is_connected(graph, a, b):
            images.add(lace_of(graph, a, b))
    return images


@lru_cache(maxsize=None)
def compatible_edges(lace_edges: Tuple[Edge, ...]) -> FrozenSet[Edge]:
    """Edges ``st`` not in the lace with L(L + st) = L.

    Cached on the lace translated to start at 0; callers shift.
    """
    a, b = lace_edges[0][0], lace_edges[-1][1]
    own = set(lace_edges)
    lace = Lace(lace_edges)
    out = set()
    for s in range(a, b + 1):
        for t in range(s + 1, b + 1):
            if (s, t) not in own and lace_of(list(own | {(s, t)}), a, b) == lace:
                out.add((s, t))
    return frozenset(out)


def contact_pairs(w: Walk, modulus: Optional[int] = None) -> FrozenSet[Edge]:
    """All pairs s < t with coinciding sites (mod ``modulus`` when given)."""
    positions = w.positions if modulus is None or w.is_torus else w.positions % modulus
    visits: Dict[Tuple[int, ...], List[int]] = {}
    for i, site in enumerate(map(tuple, positions.tolist())):
        visits.setdefault(site, []).append(i)
    pairs = set()
    for times in visits.values():
        pairs.update(itertools.combinations(times, 2))
    return frozenset(pairs)


def _beta_for(params: ModelParams, exact: bool) -> Number:
    return Fraction(str(params.beta)) if exact else params.beta


def _modulus(w: Walk, params: ModelParams) -> Optional[int]:
    if w.is_torus:
        if params.r is not None and params.r != w.r:
            raise PreconditionError(f"params.r={params.r} does not match walk side {w.r}")
        return None
    return params.r


def j_from_contacts(pairs: FrozenSet[Edge], a: int, b: int, beta: Number) -> Number:
    """J[a, b] for a walk given only its contact pairs."""
    if a == b:
        return 1 if isinstance(beta, Fraction) else 1.0
    inside = {(s, t) for s, t in pairs if a <= s and t <= b}
    if not any(s == a for s, _ in inside) or not any(t == b for _, t in inside):
        return 0 * beta
    q = 1 - beta
    total: Number = 0 * beta
    for edges in _grow_laces(a, b, inside, None):
        relative = tuple((s - a, t - a) for s, t in edges)
        live = sum(1 for s, t in compatible_edges(relative) if (s + a, t + a) in inside)
        total += (-beta) ** len(edges) * q**live
    return total


def j_value(w: Walk, interval: Interval, params: ModelParams, exact: bool = False) -> Number:
    """J[a, b](w); returns a Fraction when ``exact`` is set."""
    if interval.b > w.n:
        raise PreconditionError(f"interval [{interval.a}, {interval.b}] exceeds length {w.n}")
    pairs = contact_pairs(w, _modulus(w, params))
    return j_from_contacts(pairs, interval.a, interval.b, _beta_for(params, exact))


def j_value_by_graphs(w: Walk, interval: Interval, params: ModelParams, exact: bool = False) -> Number:
    """Brute-force J: signed sum over connected graphs of contact pairs."""
    beta = _beta_for(params, exact)
    a, b = interval.a, interval.b
    if a == b:
        return 1 if exact else 1.0
    pairs = sorted(
        (s, t) for s, t in contact_pairs(w, _modulus(w, params)) if a <= s and t <= b
    )
    if len(pairs) > GRAPH_ORACLE_MAX_EDGES:
        raise BudgetExceededError("graph oracle edges", GRAPH_ORACLE_MAX_EDGES, len(pairs))
    total: Number = 0 * beta
    for size in range(1, len(pairs) + 1):
        for graph in itertools.combinations(pairs, size):
            if is_connected(graph, a, b):
                total += (-beta) ** size
    return total


def _k_from_contacts(pairs: FrozenSet[Edge], a: int, b: int, beta: Number) -> Number:
    contacts = sum(1 for s, t in pairs if a <= s and t <= b)
    return (1 - beta) ** contacts


def marked_intervals(n: int, m: int) -> List[Interval]:
    """Intervals I with I_1 < m < I_2 inside [0, n], plus [m, m]."""
    if not 0 <= m <= n:
        raise PreconditionError(f"marked time {m} outside [0, {n}]")
    out = [Interval(m, m)]
    out.extend(Interval(a, b) for a in range(0, m) for b in range(m + 1, n + 1))
    return out


def _terms_from_contacts(
    pairs: FrozenSet[Edge], n: int, m: int, beta: Number
) -> List[LaceTerm]:
    terms = []
    for iv in marked_intervals(n, m):
        j = j_from_contacts(pairs, iv.a, iv.b, beta)
        if j:
            terms.append(LaceTerm(iv, j))
    return terms


def kjk_residual_from_contacts(
    pairs: FrozenSet[Edge], n: int, m: int, beta: Number
) -> Number:
    total = _k_from_contacts(pairs, 0, n, beta)
    for term in _terms_from_contacts(pairs, n, m, beta):
        a, b = term.interval.a, term.interval.b
        left, right = _k_from_contacts(pairs, 0, a, beta), _k_from_contacts(pairs, b, n, beta)
        total -= left * term.value * right
    return abs(total)


def lace_terms(w: Walk, m: int, params: ModelParams, exact: bool = False) -> List[LaceTerm]:
    """Nonzero J terms on the intervals marking ``m``, in interval order."""
    pairs = contact_pairs(w, _modulus(w, params))
    return _terms_from_contacts(pairs, w.n, m, _beta_for(params, exact))


def kjk_check(w: Walk, m: int, params: ModelParams, exact: bool = False) -> Number:
    """|K[0, n] - sum over I marking m of K[0, I_1] J[I_1, I_2] K[I_2, n]|."""
    pairs = contact_pairs(w, _modulus(w, params))
    return kjk_residual_from_contacts(pairs, w.n, m, _beta_for(params, exact))


@dataclass(frozen=True)
class KjkSweepRow:
    """Worst residual over all walks of one length at one beta."""

    n: int
    beta: float
    walks: int
    max_residual: float
    exact_zero: Optional[bool] = None


def kjk_sweep(
    d: int,
    n_max: int,
    betas: Sequence[float],
    *,
    exact: bool = False,
    canonical: bool = True,
    n_min: int = 0,
) -> List[KjkSweepRow]:
    """Exhaustive KJK check over walks of length n_min..n_max and every marked time.

    With ``canonical`` only one walk per lattice-symmetry class is checked;
    contact pairs, and hence every residual, are constant on a class.
    """
    rows: List[KjkSweepRow] = []
    for n in range(n_min, n_max + 1):
        walks = (w for w, _ in iter_canonical_walks(d, n)) if canonical else iter_walks(d, n)
        contact_sets = [contact_pairs(w) for w in walks]
        for beta in betas:
            b: Number = Fraction(str(beta)) if exact else float(beta)
            worst: Number = 0 * b
            for pairs in contact_sets:
                for m in range(n + 1):
                    worst = max(worst, kjk_residual_from_contacts(pairs, n, m, b))
            rows.append(
                KjkSweepRow(
                    n=n,
                    beta=float(beta),
                    walks=len(contact_sets),
                    max_residual=float(worst),
                    exact_zero=(worst == 0) if exact else None,
                )
            )
        logger.debug("kjk_sweep_length_done", d=d, n=n, walks=len(contact_sets))
    return rows


@dataclass(frozen=True)
class JSums:
    """Per-length sums of J[0, n] over all n-step walks.

    ``signed[n]`` is sum J and ``absolute[n]`` is sum |J|; index 0 holds 1.
    """

    d: int
    beta: float
    signed: Tuple[float, ...]
    absolute: Tuple[float, ...]


def j_sums(params: ModelParams, n_max: int) -> JSums:
    """Sum J[0, n] over Z^d walks of each length up to ``n_max``."""
    signed = [1.0]
    absolute = [1.0]
    for n in range(1, n_max + 1):
        s_total = 0.0
        a_total = 0.0
        for w, mult in iter_canonical_walks(params.d, n):
            pairs = contact_pairs(w)
            j = j_from_contacts(pairs, 0, n, params.beta)
            if j:
                s_total += mult * j
                a_total += mult * abs(j)
        signed.append(s_total)
        absolute.append(a_total)
    return JSums(d=params.d, beta=params.beta, signed=tuple(signed), absolute=tuple(absolute))


def factorized_partition(c: Sequence[float], signed_j: Sequence[float], n: int, m: int) -> float:
    """Rebuild c_n from the walk-summed KJK identity split at ``m``.

    Walk segments on disjoint time intervals are independent, so
    ``c_n = sum_I c_{I_1} * (sum J)_{|I|} * c_{n - I_2}``.
    """
    return sum(
        c[iv.a] * signed_j[iv.length] * c[n - iv.b] for iv in marked_intervals(n, m)
    )


@dataclass(frozen=True)
class PiSeries:
    """Partial sums of ``sum_n n z^n sum_w |J[0, n]|``."""

    z: float
    terms: Tuple[float, ...]
    partial_sums: Tuple[float, ...]

    def rows(self) -> List[Tuple[int, float, float]]:
        return [(n, t, s) for n, (t, s) in enumerate(zip(self.terms, self.partial_sums))]

    def decreasing_along(self, ns: Sequence[int]) -> bool:
        """True when the terms strictly decrease along ``ns``."""
        values = [self.terms[n] for n in ns]
        return all(x > y for x, y in zip(values, values[1:]))

    def same_parity_decreasing(self, n_min: int) -> bool:
        """Terms decrease along even lengths and along odd lengths from ``n_min`` on.

        Odd-length J sums start at second order in beta, so the two parities
        are compared separately.
        """
        n_max = len(self.terms) - 1
        for start in (n_min, n_min + 1):
            ns = list(range(start, n_max + 1, 2))
            if len(ns) >= 2 and not self.decreasing_along(ns):
                return False
        return True


def pi_series_partial(params: ModelParams, z: float, n_max: int) -> PiSeries:
    """Partial sums S_N = sum_{n <= N} n z^n sum_w |J[0, n]| for N = 0..n_max."""
    if z <= 0:
        raise PreconditionError(f"activity must be positive, got {z}")
    sums = j_sums(params, n_max)
    terms = [0.0] + [n * z**n * sums.absolute[n] for n in range(1, n_max + 1)]
    partial = list(itertools.accumulate(terms))
    return PiSeries(z=z, terms=tuple(terms), partial_sums=tuple(partial))
