"""Metropolis-Hastings with intractable target and proposal marginals.

The target ``pi~(x) = int pi~(r, x) dr`` and the proposal
``q(x'; x) = int q(s, x'; x) ds`` are both estimated with strategies: ``S(x)``
targets ``pi(r | x)`` and ``M(x, x')`` targets ``q(s | x'; x)``. The chain
state carries the current target estimate alongside ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

from .estimators import hme, importance
from .random import as_source


@dataclass
class MHProposal:
    """Joint proposal ``q(s, x'; x)``.

    sample : ``(x, rng) -> (s, x')``
    log_density : ``(x, s, x') -> float``
    """

    sample: Callable
    log_density: Callable


@dataclass
class MHState:
    x: Any
    log_Z: float


def mh_init(model, S, x, rng=None, strict: bool = True) -> MHState:
    """Initial state: ``x`` with an importance estimate of ``pi~(x)`` from ``S(x)``."""
    rng = as_source(rng)
    lz = importance(lambda r: model(r, x), S(x), rng, strict=strict).log_weight
    return MHState(x, lz)


def mh_log_ratio(model, proposal: MHProposal, S, M, state: MHState, rng, strict=True):
    """Lines 1-4 of one step: the proposal and the log acceptance ratio."""
    x, lz = state.x, state.log_Z
    s, xn = proposal.sample(x, rng)
    lw_fwd = hme(lambda s_: proposal.log_density(x, s_, xn), s, M(x, xn), rng, strict=strict)
    lw_rev = importance(lambda s_: proposal.log_density(xn, s_, x), M(xn, x), rng,
                        strict=strict).log_weight
    lzn = importance(lambda r: model(r, xn), S(xn), rng, strict=strict).log_weight
    return xn, lzn, lzn - lz + lw_fwd + lw_rev


def mh_step(model, proposal: MHProposal, S, M, state: MHState, rng=None, strict: bool = True):
    """One transition. Returns ``(next_state, accepted)``.

    ``model(r, x)`` is the log of the unnormalized joint target; pass
    strategies for ``r`` given ``x`` as ``S`` and for ``s`` given ``(x, x')``
    as ``M``. The same ``S`` must be used at every step.
    """
    rng = as_source(rng)
    xn, lzn, log_alpha = mh_log_ratio(model, proposal, S, M, state, rng, strict)
    p = 1.0 if log_alpha >= 0 else (0.0 if math.isnan(log_alpha) else math.exp(log_alpha))
    if rng.bernoulli(p):
        return MHState(xn, lzn), True
    return state, False


def run_chain(model, proposal, S, M, x0, n_steps: int, rng=None, strict: bool = True):
    """Run ``n_steps`` transitions from ``x0``; returns visited states and acceptance rate."""
    rng = as_source(rng)
    state = mh_init(model, S, x0, rng, strict)
    xs, acc = [], 0
    for _ in range(n_steps):
        state, a = mh_step(model, proposal, S, M, state, rng, strict)
        xs.append(state.x)
        acc += a
    return xs, acc / max(n_steps, 1)
