"""Integer site keys for vectorised contact counting."""

from typing import Optional

import numpy as np

_INT64_LIMIT = 2**62


class SiteCodec:
    """Encode lattice sites (mod ``base``) as int64 keys.

    On the torus ``base`` is the side ``r`` so keys identify residue
    classes; on Z^d a base of ``2 n + 1`` is injective on walks of length n.
    When ``base ** d`` does not fit in int64 the keys are dense labels from
    ``np.unique`` and only comparable within one call.
    """

    def __init__(self, d: int, base: int) -> None:
        self.d = d
        self.base = base
        self.exact_int64 = base**d < _INT64_LIMIT
        self._powers = base ** np.arange(d, dtype=np.int64) if self.exact_int64 else None

    @classmethod
    def for_walks(cls, d: int, n: int, r: Optional[int]) -> "SiteCodec":
        return cls(d, r if r is not None else 2 * n + 1)

    def encode(self, positions: np.ndarray) -> np.ndarray:
        """Keys for an ``(..., d)`` integer array, same leading shape."""
        residues = np.mod(positions, self.base)
        if self._powers is not None:
            return residues.astype(np.int64) @ self._powers
        flat = residues.reshape(-1, self.d)
        _, labels = np.unique(flat, axis=0, return_inverse=True)
        return labels.reshape(positions.shape[:-1]).astype(np.int64)


def contacts_from_keys(keys: np.ndarray) -> int:
    """Number of coinciding pairs, ``sum_x C(m_x, 2)``."""
    _, counts = np.unique(keys, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def occurrences_before(keys: np.ndarray) -> np.ndarray:
    """For an ``(m, L)`` int64 key array, earlier visits to the same site along each row."""
    rows, length = keys.shape
    row_index = np.repeat(np.arange(rows), length)
    flat = keys.reshape(-1)
    # stable in time within each (row, key) group
    order = np.lexsort((np.tile(np.arange(length), rows), flat, row_index))
    sorted_rows = row_index[order]
    sorted_keys = flat[order]
    new_group = np.ones(len(flat), dtype=bool)
    new_group[1:] = (sorted_rows[1:] != sorted_rows[:-1]) | (sorted_keys[1:] != sorted_keys[:-1])
    starts = np.maximum.accumulate(np.where(new_group, np.arange(len(flat)), 0))
    ranks = np.arange(len(flat)) - starts
    out = np.empty(len(flat), dtype=np.int64)
    out[order] = ranks
    return out.reshape(rows, length)
