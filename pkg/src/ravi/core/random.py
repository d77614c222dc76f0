"""Random choice points.

Every stochastic decision made by a strategy goes through a ``RandomSource``.
Discrete decisions (``categorical``, ``uniform_int``, ``bernoulli``) are
choice points that :mod:`ravi.diagnostics.enumerate` can branch over; the
continuous draws are only available when sampling.
"""
from __future__ import annotations

import numpy as np


class NotEnumerableError(RuntimeError):
    """Raised when an enumerating source meets a continuous random choice."""


class RandomSource:
    """Seedable sampler implementing the choice-point interface.

    Discrete draws from unnormalized log-weights use the Gumbel-max rule;
    ``np.argmax`` breaks ties towards the lowest index.
    """

    enumerating = False

    def __init__(self, seed=None, *, generator: np.random.Generator | None = None):
        if generator is None:
            generator = np.random.default_rng(seed)
        self.generator = generator

    @classmethod
    def stream(cls, root_seed: int, k: int) -> "RandomSource":
        """Independent stream for replicate ``k`` under ``root_seed``."""
        return cls(np.random.SeedSequence([int(root_seed), int(k)]))

    def spawn(self, n: int) -> list["RandomSource"]:
        return [RandomSource(generator=g) for g in self.generator.spawn(n)]

    # -- finite-support choice points ------------------------------------
    def categorical(self, log_weights) -> int:
        lw = np.asarray(log_weights, dtype=float)
        if lw.ndim != 1 or lw.size == 0:
            raise ValueError("categorical needs a non-empty 1-d weight vector")
        if np.isnan(lw).any() or not np.isfinite(lw.max()):
            raise ValueError("categorical weights are all zero or contain NaN")
        return int(np.argmax(lw + self.generator.gumbel(size=lw.size)))

    def uniform_int(self, n: int) -> int:
        if n < 1:
            raise ValueError("uniform_int needs n >= 1")
        return int(self.generator.integers(n))

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli probability {p} outside [0, 1]")
        return bool(self.generator.random() < p)

    # -- continuous draws ------------------------------------------------
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def gumbel(self, size=None):
        return self.generator.gumbel(size=size)


def as_source(rng) -> RandomSource:
    """Accept a RandomSource, a numpy Generator, an int seed or None."""
    if isinstance(rng, RandomSource) or getattr(rng, "enumerating", False):
        return rng
    if isinstance(rng, np.random.Generator):
        return RandomSource(generator=rng)
    return RandomSource(rng)
