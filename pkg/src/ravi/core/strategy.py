"""The recursive inference-strategy tree.

A strategy is either a :class:`Terminal` proposal with a tractable density,
or a :class:`Compound` proposal over an auxiliary/output pair ``(r, x)``
paired with a builder ``meta(x)`` returning the strategy that targets
``q(r | x)``. Every callable takes the parameter mapping first so the same
tree serves plain sampling and forward-mode differentiation.
"""
from __future__ import annotations

import enum
import math

from . import autodiff as ad
from .params import ParamStore


class Kind(enum.Enum):
    """Support relation between a proposal and its target.

    WIDE: the target is absolutely continuous w.r.t. the proposal, enough
    for importance weighting. NARROW: the proposal is absolutely continuous
    w.r.t. the target, enough for harmonic-mean estimation.
    """

    WIDE = "wide"
    NARROW = "narrow"
    TWO_SIDED = "two-sided"

    def allows_importance(self) -> bool:
        return self is not Kind.NARROW

    def allows_hme(self) -> bool:
        return self is not Kind.WIDE


class SupportError(RuntimeError):
    """A density is zero where the declared support relation requires it positive."""


class StrategyError(TypeError):
    """A strategy node lacks what an algorithm requires of it."""


def _default_params(params):
    if params is None:
        return {}
    if isinstance(params, ParamStore):
        return params.params()
    return params


class Strategy:
    kind: Kind
    params: ParamStore | None
    name: str

    def default_params(self) -> dict:
        return _default_params(self.params)

    @property
    def is_terminal(self) -> bool:
        return isinstance(self, Terminal)


class Terminal(Strategy):
    """Proposal with a tractable normalized density.

    Parameters
    ----------
    sample : callable ``(params, rng) -> x``
    log_density : callable ``(params, x) -> float``
    atoms : optional finite support; when given, normalization is checked.
    """

    def __init__(self, sample, log_density, kind: Kind = Kind.TWO_SIDED, params=None,
                 atoms=None, name="terminal"):
        self._sample = sample
        self._log_density = log_density
        self.kind = kind
        self.params = params
        self.atoms = list(atoms) if atoms is not None else None
        self.name = name
        if self.atoms is not None:
            P = _default_params(params)
            lw = [ad.value_of(log_density(P, a)) for a in self.atoms]
            total = math.fsum(math.exp(v) for v in lw)
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"terminal {name!r} is not normalized: mass {total!r}")

    def sample(self, params, rng):
        return self._sample(params, rng)

    def log_density(self, params, x):
        return self._log_density(params, x)

    def __repr__(self):
        return f"Terminal({self.name})"


class Compound(Strategy):
    """Proposal ``q(r, x)`` with an intractable marginal and a meta-strategy builder.

    Parameters
    ----------
    sample_joint : callable ``(params, rng) -> (r, x)``
    log_joint : callable ``(params, r, x) -> float``
    meta : callable ``x -> Strategy`` targeting ``q(r | x)``
    """

    def __init__(self, sample_joint, log_joint, meta, kind: Kind = Kind.TWO_SIDED,
                 params=None, name="compound"):
        self._sample_joint = sample_joint
        self._log_joint = log_joint
        self._meta = meta
        self.kind = kind
        self.params = params
        self.name = name

    def sample_joint(self, params, rng):
        return self._sample_joint(params, rng)

    def log_joint(self, params, r, x):
        return self._log_joint(params, r, x)

    def meta(self, x) -> Strategy:
        m = self._meta(x)
        if not isinstance(m, Strategy):
            raise StrategyError(f"meta builder of {self.name!r} returned {type(m).__name__}")
        return m

    def __repr__(self):
        return f"Compound({self.name})"


class ReparamTerminal(Terminal):
    """Terminal whose samples are ``push(params, noise(rng))``.

    ``noise`` must not depend on the parameters; ``push`` must be written
    with autodiff helpers so it accepts dual-valued parameters.
    """

    def __init__(self, noise, push, log_density, kind: Kind = Kind.TWO_SIDED, params=None,
                 name="reparam-terminal"):
        self.noise = noise
        self.push = push
        super().__init__(lambda P, rng: push(P, noise(rng)), log_density, kind=kind,
                         params=params, name=name)


class ReparamCompound(Compound):
    """Compound whose joint samples are ``push(params, noise(rng)) -> (r, x)``."""

    def __init__(self, noise, push, log_joint, meta, kind: Kind = Kind.TWO_SIDED, params=None,
                 name="reparam-compound"):
        self.noise = noise
        self.push = push
        super().__init__(lambda P, rng: push(P, noise(rng)), log_joint, meta, kind=kind,
                         params=params, name=name)


def is_reparam(s: Strategy) -> bool:
    return isinstance(s, (ReparamTerminal, ReparamCompound))
