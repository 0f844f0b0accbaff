"""Independent random streams keyed by (seed, purpose, index)."""

import numpy as np

PILOT = 0
TOUR = 1
CHAIN = 2
SAMPLE = 3


def stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    """Generator for one tour, chain or sample batch.

    Streams for different ``(purpose, index)`` pairs are statistically
    independent and do not depend on how work is split across processes.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(purpose, index)))


class BufferedDraws:
    """Chunked integer and uniform draws from one generator.

    The sequence of values returned is a fixed function of the generator
    state, so results stay reproducible.
    """

    def __init__(self, rng: np.random.Generator, high: int, chunk: int = 4096) -> None:
        self._rng = rng
        self._high = high
        self._chunk = chunk
        self._ints = rng.integers(0, high, size=chunk).tolist()
        self._uniforms = rng.random(chunk).tolist()
        self._i = 0
        self._u = 0

    def integer(self) -> int:
        if self._i == self._chunk:
            self._ints = self._rng.integers(0, self._high, size=self._chunk).tolist()
            self._i = 0
        value = self._ints[self._i]
        self._i += 1
        return value

    def uniform(self) -> float:
        if self._u == self._chunk:
            self._uniforms = self._rng.random(self._chunk).tolist()
            self._u = 0
        value = self._uniforms[self._u]
        self._u += 1
        return value
