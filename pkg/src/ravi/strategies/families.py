"""Tractable proposal families, Markov kernels and configuration records."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core import autodiff as ad
from ..core.strategy import Kind, ReparamTerminal, Terminal
from ..core.target import UnnormalizedTarget, logsumexp

LOG_2PI = math.log(2 * math.pi)


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    return a == b


def terminal(sampler, log_density, kind: Kind = Kind.TWO_SIDED, params=None, atoms=None,
             name="terminal") -> Terminal:
    """Terminal node from ``sampler(params, rng)`` and ``log_density(params, x)``."""
    return Terminal(sampler, log_density, kind=kind, params=params, atoms=atoms, name=name)


def categorical(weights, atoms: Sequence | None = None, log: bool = False, kind=Kind.TWO_SIDED,
                name="categorical") -> Terminal:
    """Fixed categorical proposal over ``atoms`` (default ``0..n-1``)."""
    w = np.asarray(weights, dtype=float)
    if log:
        lw = w
    else:
        with np.errstate(divide="ignore"):
            lw = np.log(w)
    lw = lw - logsumexp(lw)
    atoms = list(range(len(w))) if atoms is None else list(atoms)
    index = {_key(a): i for i, a in enumerate(atoms)}

    def sample(P, rng):
        return atoms[rng.categorical(lw)]

    def log_density(P, x):
        i = index.get(_key(x))
        return -math.inf if i is None else float(lw[i])

    return Terminal(sample, log_density, kind=kind, atoms=atoms, name=name)


def uniform(atoms, kind=Kind.TWO_SIDED) -> Terminal:
    atoms = list(atoms)
    return categorical(np.ones(len(atoms)), atoms, kind=kind, name="uniform")


def categorical_logits(names: Sequence[str], atoms: Sequence | None = None, params=None,
                       kind=Kind.TWO_SIDED, name="categorical-logits") -> Terminal:
    """Categorical whose logits are the named parameters (differentiable)."""
    names = list(names)
    atoms = list(range(len(names))) if atoms is None else list(atoms)
    index = {_key(a): i for i, a in enumerate(atoms)}

    def sample(P, rng):
        return atoms[rng.categorical([ad.value_of(P[n]) for n in names])]

    def log_density(P, x):
        i = index.get(_key(x))
        if i is None:
            return -math.inf
        return P[names[i]] - ad.logsumexp([P[n] for n in names])

    return Terminal(sample, log_density, kind=kind, params=params, atoms=atoms, name=name)


def point_mass(value, kind=Kind.TWO_SIDED, name="point-mass") -> Terminal:
    def log_density(P, x):
        return 0.0 if _same(x, value) else -math.inf

    return Terminal(lambda P, rng: value, log_density, kind=kind, atoms=[value], name=name)


def _key(a):
    if isinstance(a, np.ndarray):
        return tuple(a.ravel().tolist())
    return a


def gaussian_logpdf(x, mean, std):
    z = (x - mean) / std
    return -0.5 * z * z - ad.log(std) - 0.5 * LOG_2PI


def gaussian(mean: float, std: float, kind=Kind.TWO_SIDED) -> ReparamTerminal:
    """Fixed 1-D Gaussian with a standard-normal pushforward."""
    return ReparamTerminal(lambda rng: rng.normal(), lambda P, e: mean + std * e,
                           lambda P, x: gaussian_logpdf(x, mean, std), kind=kind, name="gaussian")


def gaussian_param(mu: str, log_sigma: str, params=None, kind=Kind.TWO_SIDED) -> ReparamTerminal:
    """1-D Gaussian with learnable mean and log standard deviation."""
    return ReparamTerminal(
        lambda rng: rng.normal(),
        lambda P, e: P[mu] + ad.exp(P[log_sigma]) * e,
        lambda P, x: gaussian_logpdf(x, P[mu], ad.exp(P[log_sigma])),
        kind=kind, params=params, name=f"gaussian({mu},{log_sigma})")


class KernelFamily:
    """Markov kernel ``x_prev -> x_next`` with an evaluable density.

    ``sample(x_prev, rng)`` and ``log_density(x_prev, x_next)`` ignore the
    parameters unless ``uses_params`` is set, in which case both receive the
    parameter mapping first. ``reversal(x_next, rng)`` optionally samples the
    time reversal for annealed importance sampling.
    """

    def __init__(self, sample, log_density, uses_params: bool = False, reversal=None,
                 atoms=None, name="kernel"):
        self._sample = sample
        self._log_density = log_density
        self.uses_params = uses_params
        self.reversal = reversal
        self.atoms = list(atoms) if atoms is not None else None
        self.name = name

    def sample(self, x_prev, rng, params=None):
        if self.uses_params:
            return self._sample(params or {}, x_prev, rng)
        return self._sample(x_prev, rng)

    def log_density(self, x_prev, x_next, params=None):
        if self.uses_params:
            return self._log_density(params or {}, x_prev, x_next)
        return self._log_density(x_prev, x_next)

    def as_strategy(self, x_prev, kind=Kind.TWO_SIDED) -> Terminal:
        """Terminal proposal ``K(x_prev -> .)``."""
        return Terminal(lambda P, rng: self.sample(x_prev, rng, P),
                        lambda P, x: self.log_density(x_prev, x, P), kind=kind,
                        name=f"{self.name}({x_prev!r})")

    def check_normalized(self, tol=1e-12, params=None) -> float:
        """Largest deviation of a row total from 1 over the finite support."""
        if self.atoms is None:
            raise ValueError("kernel has no finite support to check")
        worst = 0.0
        for a in self.atoms:
            tot = math.fsum(math.exp(ad.value_of(self.log_density(a, b, params))) for b in self.atoms)
            worst = max(worst, abs(tot - 1.0))
        if worst > tol:
            raise ValueError(f"kernel {self.name!r} rows deviate from 1 by {worst}")
        return worst


def matrix_kernel(P, atoms=None, name="matrix-kernel") -> KernelFamily:
    """Kernel over a finite space from a row-stochastic matrix."""
    P = np.asarray(P, dtype=float)
    atoms = list(range(P.shape[0])) if atoms is None else list(atoms)
    index = {_key(a): i for i, a in enumerate(atoms)}
    with np.errstate(divide="ignore"):
        logP = np.log(P)

    def sample(x, rng):
        return atoms[rng.categorical(logP[index[_key(x)]])]

    def log_density(x, y):
        i, j = index.get(_key(x)), index.get(_key(y))
        if i is None or j is None:
            return -math.inf
        return float(logP[i, j])

    k = KernelFamily(sample, log_density, atoms=atoms, name=name)
    k.check_normalized(1e-10)
    return k


def identity_kernel(atoms=None) -> KernelFamily:
    return KernelFamily(lambda x, rng: x, lambda x, y: 0.0 if _same(x, y) else -math.inf,
                        atoms=atoms, name="identity")


def independent_kernel(target: UnnormalizedTarget) -> KernelFamily:
    """Exact Gibbs kernel: redraw from the normalized target ignoring the past."""
    atoms = target.atoms
    lw = np.array([ad.value_of(target.log_density(a)) for a in atoms])
    lw = lw - logsumexp(lw)
    index = {_key(a): i for i, a in enumerate(atoms)}
    return KernelFamily(lambda x, rng: atoms[rng.categorical(lw)],
                        lambda x, y: float(lw[index[_key(y)]]) if _key(y) in index else -math.inf,
                        atoms=atoms, name="independent")


def metropolis_kernel(target: UnnormalizedTarget) -> KernelFamily:
    """Metropolis kernel with a uniform proposal over the target's atoms."""
    atoms = target.atoms
    n = len(atoms)
    lw = np.array([ad.value_of(target.log_density(a)) for a in atoms])
    P = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                P[i, j] = (1.0 / n) * min(1.0, math.exp(lw[j] - lw[i]))
        P[i, i] = 1.0 - P[i].sum()
    return matrix_kernel(P, atoms, name="metropolis")


@dataclass
class AnnealingLadder:
    """Ordered targets ``pi~_1 .. pi~_T``; the last is the final target."""

    targets: list

    def __post_init__(self):
        if not self.targets:
            raise ValueError("annealing ladder needs at least one target")
        self.targets = list(self.targets)

    def __len__(self):
        return len(self.targets)

    def __getitem__(self, t):
        return self.targets[t]

    @classmethod
    def geometric(cls, initial: UnnormalizedTarget, final: UnnormalizedTarget, betas):
        """Targets ``initial^(1-b) * final^b`` for each ``b`` in ``betas``."""
        out = []
        for b in betas:
            def f(x, b=b):
                l0, l1 = initial.log_density(x), final.log_density(x)
                if b == 0.0:
                    return l0
                if b == 1.0:
                    return l1
                return (1 - b) * l0 + b * l1
            out.append(UnnormalizedTarget(f, atoms=final.atoms, dim=final.dim, name=f"beta={b:g}"))
        return cls(out)


@dataclass
class MCVIConfig:
    """Markov-chain proposal ``x_0 ~ q0, x_{i+1} ~ T(x_i)`` with backward kernels.

    ``R[i]`` maps ``x_{i+1} -> x_i`` for ``i = 0..M-1``. ``q[i]`` for
    ``i = 0..M`` are intermediate weighting distributions used by the
    particle meta-inference; ``q[0]`` should be ``q0``.
    """

    M: int
    q0: Terminal
    T: KernelFamily
    R: list = field(default_factory=list)
    K: int = 1
    q: list | None = None

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("chain length M must be non-negative")
        if len(self.R) != self.M:
            raise ValueError(f"need {self.M} backward kernels, got {len(self.R)}")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.q is not None and len(self.q) != self.M + 1:
            raise ValueError(f"need {self.M + 1} weighting distributions, got {len(self.q)}")
