"""Exact output laws of randomized computations with finite choices.

The computation is re-executed once per branch of its choice tree. Each run
is driven by an :class:`EnumeratingSource` that replays a prefix of choices
and takes the first positive-probability option at every new choice point,
scheduling the alternatives for later runs.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..core.random import NotEnumerableError


class EnumeratingSource:
    enumerating = True

    def __init__(self, prefix):
        self.prefix = prefix
        self.choices: list[int] = []
        self.log_prob = 0.0
        self.pending: list[list[int]] = []

    def _choose(self, probs) -> int:
        d = len(self.choices)
        options = [i for i, p in enumerate(probs) if p > 0.0]
        if not options:
            raise ValueError("choice point with no positive-probability option")
        if d < len(self.prefix):
            k = self.prefix[d]
        else:
            k = options[0]
            for alt in options[1:]:
                self.pending.append(self.choices + [alt])
        self.choices.append(k)
        self.log_prob += math.log(probs[k])
        return k

    def categorical(self, log_weights) -> int:
        lw = np.asarray(log_weights, dtype=float)
        if lw.ndim != 1 or lw.size == 0:
            raise ValueError("categorical needs a non-empty 1-d weight vector")
        m = lw.max()
        if np.isnan(lw).any() or not np.isfinite(m):
            raise ValueError("categorical weights are all zero or contain NaN")
        w = np.exp(lw - m)
        return self._choose(w / w.sum())

    def uniform_int(self, n: int) -> int:
        if n < 1:
            raise ValueError("uniform_int needs n >= 1")
        return self._choose(np.full(n, 1.0 / n))

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli probability {p} outside [0, 1]")
        return bool(self._choose([1.0 - p, p]))

    def _continuous(self, *a, **k):
        raise NotEnumerableError("continuous random choice met during enumeration")

    uniform = normal = gumbel = _continuous

    def spawn(self, n):
        raise NotEnumerableError("cannot spawn independent streams while enumerating")


@dataclass
class EstimatorLaw:
    """Exact law as a list of ``(value, probability)`` outcomes."""

    outcomes: list

    def __iter__(self):
        return iter(self.outcomes)

    def __len__(self):
        return len(self.outcomes)

    @property
    def values(self):
        return [v for v, _ in self.outcomes]

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.outcomes])

    def total(self) -> float:
        return math.fsum(p for _, p in self.outcomes)

    def expectation(self, f=None):
        if f is None:
            f = lambda v: v
        vals = [np.asarray(f(v), dtype=float) for v, _ in self.outcomes]
        return sum(p * v for v, (_, p) in zip(vals, self.outcomes))

    def mean(self):
        return self.expectation()

    def variance(self, f=None):
        if f is None:
            f = lambda v: v
        mu = self.expectation(f)
        return self.expectation(lambda v: (np.asarray(f(v), dtype=float) - mu) ** 2)

    def map(self, f) -> "EstimatorLaw":
        return EstimatorLaw([(f(v), p) for v, p in self.outcomes])

    def merged(self, key=None, digits: int = 12) -> "EstimatorLaw":
        """Combine outcomes with equal (rounded) values."""
        if key is None:
            key = lambda v: _round_key(v, digits)
        acc, rep = defaultdict(float), {}
        for v, p in self.outcomes:
            k = key(v)
            acc[k] += p
            rep.setdefault(k, v)
        return EstimatorLaw([(rep[k], acc[k]) for k in acc])

    def as_dict(self, digits: int = 12) -> dict:
        return {k: p for k, p in ((_round_key(v, digits), p) for v, p in self.merged().outcomes)}


def _round_key(v, digits):
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return float(v)
        return float(f"{float(v):.{digits}g}")
    if isinstance(v, (tuple, list)):
        return tuple(_round_key(u, digits) for u in v)
    if isinstance(v, np.ndarray):
        return tuple(_round_key(u, digits) for u in v.ravel())
    return v


def enumerate_law(computation, max_branches: int = 5_000_000) -> EstimatorLaw:
    """Exact law of ``computation(rng)``.

    ``computation`` must make all its random decisions through the supplied
    source's ``categorical``, ``uniform_int`` or ``bernoulli`` methods;
    continuous draws raise :class:`NotEnumerableError`.
    """
    stack = [[]]
    outcomes = []
    while stack:
        prefix = stack.pop()
        src = EnumeratingSource(prefix)
        value = computation(src)
        outcomes.append((value, math.exp(src.log_prob)))
        stack.extend(reversed(src.pending))
        if len(outcomes) > max_branches:
            raise RuntimeError(f"enumeration exceeded {max_branches} branches")
    return EstimatorLaw(outcomes)
