"""Named path observables evaluated on a Metropolis state.

Names:

- ``end_to_end_sq``: |w(n)|^2 (torus: norm of the representative)
- ``contacts``: number of intersecting pairs
- ``inc:<s>:<t>:<axis>``: component ``axis`` of w(t) - w(s), on the lift
- ``incsq:<s>:<t>``: |w(t) - w(s)|^2, on the lift
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from wsawlab.domain.errors import PreconditionError
from wsawlab.domain.walk import torus_representative

Evaluator = Callable[[np.ndarray, int], float]


@dataclass(frozen=True)
class Observable:
    name: str
    evaluate: Evaluator


def _time(token: str, n: int, name: str) -> int:
    try:
        value = int(token)
    except ValueError as exc:
        raise PreconditionError(f"observable {name!r}: {token!r} is not a time index") from exc
    if not 0 <= value <= n:
        raise PreconditionError(f"observable {name!r}: time {value} outside [0, {n}]")
    return value


def parse_observable(name: str, n: int, d: int, r: Optional[int] = None) -> Observable:
    """Build the evaluator ``(positions, contacts) -> float`` for a name."""
    parts = name.split(":")
    head = parts[0]
    if name == "end_to_end_sq":
        if r is None:
            return Observable(name, lambda pos, c: float(np.dot(pos[-1], pos[-1])))
        return Observable(
            name, lambda pos, c: float(np.sum(torus_representative(pos[-1], r) ** 2))
        )
    if name == "contacts":
        return Observable(name, lambda pos, c: float(c))
    if head == "inc" and len(parts) == 4:
        s, t = _time(parts[1], n, name), _time(parts[2], n, name)
        axis = int(parts[3])
        if not 0 <= axis < d:
            raise PreconditionError(f"observable {name!r}: axis {axis} outside [0, {d})")
        return Observable(name, lambda pos, c: float(pos[t, axis] - pos[s, axis]))
    if head == "incsq" and len(parts) == 3:
        s, t = _time(parts[1], n, name), _time(parts[2], n, name)
        return Observable(name, lambda pos, c: float(np.sum((pos[t] - pos[s]) ** 2)))
    raise PreconditionError(f"unknown observable {name!r}")


def parse_observables(names: Sequence[str], n: int, d: int, r: Optional[int] = None) -> List[Observable]:
    if not names:
        raise PreconditionError("at least one observable is required")
    return [parse_observable(name, n, d, r) for name in names]
