"""Lattice geometry, walk values and interaction weights.

A walk is stored as its step sequence. Step ``j`` moves along axis ``j // 2``,
in the positive direction for even ``j`` and the negative direction for odd
``j``. Torus walks keep the same step sequence as their Z^d lift; their
positions are the representatives of the partial sums modulo ``r``.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from wsawlab.domain.errors import PreconditionError, UnsupportedParameterError

Number = Union[float, Fraction]
LatticePoint = Tuple[int, ...]


class ModelParams(BaseModel):
    """Knobs shared by every formula: dimension, interaction, torus side, length."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(..., ge=1, description="Lattice dimension")
    beta: float = Field(..., ge=0.0, le=1.0, description="Interaction strength")
    r: Optional[int] = Field(None, ge=3, description="Torus side; None means Z^d")
    n: int = Field(0, ge=0, description="Walk length")

    @property
    def is_torus(self) -> bool:
        return self.r is not None

    @property
    def volume(self) -> Optional[int]:
        return None if self.r is None else self.r**self.d

    def with_length(self, n: int) -> "ModelParams":
        return self.model_copy(update={"n": n})


def torus_representative(x, r: int):
    """Map integers (or integer arrays) to the representative set of Z/rZ.

    The representative set is ``[-floor(r/2), floor((r-1)/2)]``, i.e. the
    integers in ``[-r/2, r/2)``.
    """
    half = r // 2
    if isinstance(x, np.ndarray):
        return np.mod(x + half, r) - half
    if isinstance(x, tuple):
        return tuple((c + half) % r - half for c in x)
    return (x + half) % r - half


@lru_cache(maxsize=None)
def step_vectors(d: int) -> np.ndarray:
    """Return the ``(2d, d)`` array of unit steps in step-index order."""
    vectors = np.zeros((2 * d, d), dtype=np.int64)
    for axis in range(d):
        vectors[2 * axis, axis] = 1
        vectors[2 * axis + 1, axis] = -1
    vectors.setflags(write=False)
    return vectors


def direction_index(delta: Sequence[int]) -> int:
    """Return the step index of a unit vector, or raise if it is not one."""
    nonzero = [(axis, c) for axis, c in enumerate(delta) if c != 0]
    if len(nonzero) != 1 or abs(nonzero[0][1]) != 1:
        raise PreconditionError(f"not a nearest-neighbour step: {tuple(delta)}")
    axis, c = nonzero[0]
    return 2 * axis + (0 if c > 0 else 1)


@dataclass(frozen=True)
class Walk:
    """A finite nearest-neighbour walk from the origin on Z^d or T_r^d.

    Attributes
    ----------
    steps : Tuple[int, ...]
        Step indices in ``range(2 * d)``.
    d : int
        Lattice dimension.
    r : Optional[int]
        Torus side, or None for Z^d.
    positions : np.ndarray
        Read-only ``(n + 1, d)`` array; torus positions are representatives.
    """

    steps: Tuple[int, ...]
    d: int
    r: Optional[int] = None
    positions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.d < 1:
            raise PreconditionError(f"dimension must be positive, got {self.d}")
        if self.r is not None and self.r < 2:
            raise PreconditionError(f"torus side must be at least 2, got {self.r}")
        steps = tuple(int(j) for j in self.steps)
        if any(j < 0 or j >= 2 * self.d for j in steps):
            raise PreconditionError(f"step index out of range for d={self.d}")
        object.__setattr__(self, "steps", steps)

        positions = np.zeros((len(steps) + 1, self.d), dtype=np.int64)
        if steps:
            positions[1:] = np.cumsum(step_vectors(self.d)[list(steps)], axis=0)
        if self.r is not None:
            positions = torus_representative(positions, self.r)
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    @classmethod
    def from_positions(
        cls,
        positions: Union[np.ndarray, Sequence[Sequence[int]]],
        r: Optional[int] = None,
    ) -> "Walk":
        """Build a walk from its positions, validating the step constraint.

        Torus positions may be given in any residue class; consecutive
        differences are reduced modulo ``r`` before the unit-step check.
        """
        pts = np.asarray(positions, dtype=np.int64)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise PreconditionError("positions must be a non-empty (n + 1, d) array")
        origin = pts[0] if r is None else torus_representative(pts[0], r)
        if np.any(origin != 0):
            raise PreconditionError("walk must start at the origin")
        diffs = np.diff(pts, axis=0)
        if r is not None:
            diffs = torus_representative(diffs, r)
        steps = tuple(direction_index(row) for row in diffs.tolist())
        return cls(steps=steps, d=pts.shape[1], r=r)

    @classmethod
    def straight(cls, n: int, d: int, r: Optional[int] = None, axis: int = 0) -> "Walk":
        return cls(steps=(2 * axis,) * n, d=d, r=r)

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def is_torus(self) -> bool:
        return self.r is not None

    @property
    def endpoint(self) -> LatticePoint:
        return tuple(int(c) for c in self.positions[-1])

    def site(self, i: int) -> LatticePoint:
        return tuple(int(c) for c in self.positions[i])


def _check_interval(w: Walk, a: int, b: int, strict: bool) -> None:
    ok = 0 <= a < b <= w.n if strict else 0 <= a <= b <= w.n
    if not ok:
        relation = "<" if strict else "<="
        raise PreconditionError(
            f"need 0 <= {a} {relation} {b} <= {w.n} for a walk of length {w.n}"
        )


def _modulus_for(w: Walk, modulus: Optional[int]) -> Optional[int]:
    if w.r is not None:
        if modulus is not None and modulus != w.r:
            raise PreconditionError(
                f"torus walk of side {w.r} cannot be read modulo {modulus}"
            )
        return None  # positions are already representatives
    return modulus


def pair_interaction(w: Walk, s: int, t: int, modulus: Optional[int] = None) -> int:
    """Return -1 if the walk visits the same site at times s and t, else 0.

    On a torus walk (or with ``modulus`` on a Z^d walk) equality is taken
    modulo r in every coordinate.
    """
    _check_interval(w, s, t, strict=True)
    mod = _modulus_for(w, modulus)
    x, y = w.positions[s], w.positions[t]
    if mod is not None:
        x, y = np.mod(x, mod), np.mod(y, mod)
    return -1 if np.array_equal(x, y) else 0


def contact_count(w: Walk, a: int, b: int, modulus: Optional[int] = None) -> int:
    """Count pairs ``a <= s < t <= b`` with coinciding sites.

    Uses a site-multiplicity table: each visit adds the number of earlier
    visits to the same site.
    """
    _check_interval(w, a, b, strict=False)
    mod = _modulus_for(w, modulus)
    segment = w.positions[a : b + 1]
    if mod is not None:
        segment = np.mod(segment, mod)
    seen: dict = {}
    contacts = 0
    for site in map(tuple, segment.tolist()):
        m = seen.get(site, 0)
        contacts += m
        seen[site] = m + 1
    return contacts


def weight_from_contacts(beta: Number, contacts: int) -> Number:
    """``(1 - beta) ** contacts``; exact when ``beta`` is a Fraction."""
    return (1 - beta) ** contacts


def _contacts_for(w: Walk, params: ModelParams, a: int, b: int) -> int:
    modulus = params.r if w.r is None else None
    if w.r is not None and params.r is not None and params.r != w.r:
        raise PreconditionError(f"params.r={params.r} does not match walk side {w.r}")
    return contact_count(w, a, b, modulus=modulus)


def interaction_weight(
    w: Walk,
    params: ModelParams,
    a: int = 0,
    b: Optional[int] = None,
) -> float:
    """Return K[a, b] for the walk.

    A Z^d walk evaluated with ``params.r`` set gets the torus weight K^T
    (coincidence modulo r), which is how torus partition functions are
    written over lifted walks.
    """
    b = w.n if b is None else b
    return float(weight_from_contacts(params.beta, _contacts_for(w, params, a, b)))


def log_interaction_weight(
    w: Walk,
    params: ModelParams,
    a: int = 0,
    b: Optional[int] = None,
) -> float:
    """Return log K[a, b]; ``-inf`` when beta is 1 and the segment intersects."""
    b = w.n if b is None else b
    contacts = _contacts_for(w, params, a, b)
    if contacts == 0:
        return 0.0
    if params.beta >= 1.0:
        return -math.inf
    return contacts * math.log1p(-params.beta)


def lift_walk(w: Walk) -> Walk:
    """Unwrap a torus walk to the Z^d walk with the same steps.

    Each increment is the representative of the torus increment; for
    ``r >= 3`` this is a bijection between torus walks and Z^d walks.
    """
    if w.r is None:
        raise PreconditionError("lift_walk expects a torus walk")
    if w.r < 3:
        raise UnsupportedParameterError(f"lift is not a bijection for r={w.r} < 3")
    increments = torus_representative(np.diff(w.positions, axis=0), w.r)
    lifted = np.zeros_like(w.positions)
    lifted[1:] = np.cumsum(increments, axis=0)
    return Walk.from_positions(lifted)


def project_walk(w: Walk, r: int) -> Walk:
    """Reduce a Z^d walk modulo ``r`` componentwise."""
    if r < 3:
        raise UnsupportedParameterError(f"torus side must be at least 3, got {r}")
    if w.r is not None:
        raise PreconditionError("project_walk expects a Z^d walk")
    return Walk.from_positions(torus_representative(np.array(w.positions), r), r=r)


def iter_walks(d: int, n: int, r: Optional[int] = None) -> Iterator[Walk]:
    """Yield all (2d)^n walks of length n, in lexicographic step order."""
    for steps in itertools.product(range(2 * d), repeat=n):
        yield Walk(steps=steps, d=d, r=r)


def canonical_extensions(k_used: int, d: int) -> Tuple[Tuple[int, int, int], ...]:
    """Admissible next steps of a canonical walk that has used ``k_used`` axes.

    Returns ``(step_index, new_k_used, multiplicity_factor)`` triples. Steps
    along used axes keep the factor; the first step along a fresh axis must be
    the lowest unused axis in the positive direction and stands for all
    ``2 (d - k_used)`` choices of fresh axis and sign.
    """
    moves = [(j, k_used, 1) for j in range(2 * k_used)]
    if k_used < d:
        moves.append((2 * k_used, k_used + 1, 2 * (d - k_used)))
    return tuple(moves)


def iter_canonical_walks(
    d: int, n: int, r: Optional[int] = None
) -> Iterator[Tuple[Walk, int]]:
    """Yield one walk per lattice-symmetry class with its class size.

    The class sizes sum to (2d)^n. Contact structure, and therefore every
    interaction weight, is constant on a class.
    """

    def grow(prefix: Tuple[int, ...], k_used: int, mult: int) -> Iterator[Tuple[Walk, int]]:
        if len(prefix) == n:
            yield Walk(steps=prefix, d=d, r=r), mult
            return
        for j, new_k, factor in canonical_extensions(k_used, d):
            yield from grow(prefix + (j,), new_k, mult * factor)

    yield from grow((), 0, 1)
