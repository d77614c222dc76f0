"""Unnormalized targets, joint models and weighted samples."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import autodiff as ad


def logsumexp(xs) -> float:
    """Log-sum-exp of plain floats (max-subtracted); empty input gives -inf."""
    a = np.asarray(xs, dtype=float).ravel()
    if a.size == 0:
        return -math.inf
    m = a.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(np.exp(a - m).sum()))


def logmeanexp(xs) -> float:
    n = len(xs)
    return logsumexp(xs) - math.log(n)


class UnnormalizedTarget:
    """Evaluator of ``log pi~(x) = log Z + log pi(x)``.

    Either ``atoms`` (a finite support that can be enumerated) or ``dim``
    (number of continuous dimensions) describes the support.
    """

    def __init__(self, log_density: Callable[[Any], float], atoms: Sequence | None = None,
                 dim: int | None = None, name: str | None = None):
        self._log_density = log_density
        self.atoms = list(atoms) if atoms is not None else None
        self.dim = dim
        self.name = name or getattr(log_density, "__name__", "target")

    def log_density(self, x):
        return self._log_density(x)

    def __call__(self, x):
        return self.log_density(x)

    @property
    def enumerable(self) -> bool:
        return self.atoms is not None

    def exact_log_Z(self) -> float:
        if self.atoms is None:
            raise ValueError(f"target {self.name!r} has no finite support to enumerate")
        return logsumexp([ad.value_of(self.log_density(a)) for a in self.atoms])

    def probabilities(self) -> np.ndarray:
        lw = np.array([ad.value_of(self.log_density(a)) for a in self.atoms])
        return np.exp(lw - logsumexp(lw))


class JointModel:
    """A joint density ``p(x, y; theta)`` over latents x and observations y.

    ``log_joint(params, x, y)`` must be written with :mod:`ravi.core.autodiff`
    helpers if gradients through ``params`` are wanted. ``sample(params, rng)``
    returns a pair ``(x, y)`` drawn from the joint, which the upper-bound
    estimators need. ``latents``/``observations`` list finite supports for
    the enumeration oracles.
    """

    def __init__(self, log_joint, sample=None, latents=None, observations=None, name="model"):
        self.log_joint = log_joint
        self._sample = sample
        self.latents = list(latents) if latents is not None else None
        self.observations = list(observations) if observations is not None else None
        self.name = name

    def sample(self, params, rng):
        if self._sample is None:
            raise NotImplementedError(f"model {self.name!r} has no joint sampler")
        return self._sample(params, rng)

    def conditioned(self, y, params=None) -> UnnormalizedTarget:
        """The unnormalized posterior ``x -> p(x, y)`` as a target."""
        P = {} if params is None else params
        return UnnormalizedTarget(lambda x: self.log_joint(P, x, y), atoms=self.latents,
                                  name=f"{self.name}|y={y!r}")

    def log_marginal(self, y, params=None) -> float:
        return self.conditioned(y, params).exact_log_Z()

    def posterior(self, y, params=None) -> np.ndarray:
        return self.conditioned(y, params).probabilities()

    def log_prob_y(self, params=None) -> np.ndarray:
        """Exact log p(y) for every enumerable observation."""
        return np.array([self.log_marginal(y, params) for y in self.observations])


@dataclass
class WeightedSample:
    """A sample ``x`` with log importance weight; ``depth`` counts the nested calls made."""

    x: Any
    log_weight: float
    depth: int = field(default=1)

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)

    def __iter__(self):
        yield self.x
        yield self.log_weight


@dataclass
class GradientEstimate:
    """Objective estimate with its parameter gradient and score accumulator."""

    objective: float
    grad: np.ndarray
    score_g: np.ndarray
