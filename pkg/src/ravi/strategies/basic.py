"""Importance-sampling style combinators: compound, sir, ravi_sir, antithetic."""
from __future__ import annotations

import math

import numpy as np

from ..core import autodiff as ad
from ..core.estimators import (as_target_fn, log_hme_density, log_imp_density, simulate_hme,
                               simulate_importance, trace_log_weight)
from ..core.strategy import Compound, Kind, Strategy, Terminal
from .families import _same


def compound(joint_sampler, log_joint, meta_builder, kind: Kind = Kind.TWO_SIDED, params=None,
             name="compound") -> Compound:
    """Compound node from ``joint_sampler(params, rng) -> (r, x)``,
    ``log_joint(params, r, x)`` and ``meta_builder(x) -> Strategy``."""
    return Compound(joint_sampler, log_joint, meta_builder, kind=kind, params=params, name=name)


def _select(lw, rng):
    """Index drawn proportionally to ``exp(lw)``; uniform if every weight is zero."""
    vals = [ad.value_of(v) for v in lw]
    if max(vals) == -math.inf:
        return rng.uniform_int(len(vals))
    return rng.categorical(vals)


def _log_select(lw, j):
    vals = [ad.value_of(v) for v in lw]
    if max(vals) == -math.inf:
        return -math.log(len(vals))
    return lw[j] - ad.logsumexp(lw)


def sir(target, q: Terminal, N: int) -> Compound:
    """``N``-particle sampling importance resampling as a strategy.

    Auxiliary variables are the particles and the chosen index ``j``. The
    meta-strategy is conditional SIR: ``j`` uniform, the other particles
    redrawn from ``q``. Importance on this strategy returns the classical
    ``N``-particle estimate ``mean(pi~(x_i) / q(x_i))``.
    """
    if N < 1:
        raise ValueError("sir needs N >= 1")
    logp = as_target_fn(target)

    def weights(P, xs):
        lq = [q.log_density(P, x) for x in xs]
        return lq, [logp(P, x) - l for x, l in zip(xs, lq)]

    def sample_joint(P, rng):
        xs = tuple(q.sample(P, rng) for _ in range(N))
        _, lw = weights(P, xs)
        j = _select(lw, rng)
        return (xs, j), xs[j]

    def log_joint(P, r, x):
        xs, j = r
        if not _same(xs[j], x):
            return -math.inf
        lq, lw = weights(P, xs)
        return sum(lq) + _log_select(lw, j)

    def meta(x):
        def sample(P, rng):
            j = rng.uniform_int(N)
            xs = [q.sample(P, rng) for _ in range(N - 1)]
            xs.insert(j, x)
            return tuple(xs), j

        def log_density(P, r):
            xs, j = r
            if not _same(xs[j], x):
                return -math.inf
            return -math.log(N) + sum(q.log_density(P, xi) for i, xi in enumerate(xs) if i != j)

        return Terminal(sample, log_density, kind=Kind.TWO_SIDED, name="conditional-sir")

    return Compound(sample_joint, log_joint, meta, kind=q.kind, params=q.params, name=f"sir(N={N})")


def ravi_sir(target, inner: Strategy, N: int) -> Compound:
    """``N`` replicate importance runs of ``inner``, one resampled.

    Each replicate's auxiliary randomness is kept as a trace; the chosen
    replicate's trace is re-inferred by the harmonic-mean process of
    ``inner`` in the meta-strategy. Importance on this strategy returns the
    mean of ``N`` independent weights of ``inner``.
    """
    if N < 1:
        raise ValueError("ravi_sir needs N >= 1")
    logp = as_target_fn(target)

    def sample_joint(P, rng):
        vs, xs = [], []
        for _ in range(N):
            v, x = simulate_importance(inner, P, rng)
            vs.append(v)
            xs.append(x)
        lw = [trace_log_weight(logp, inner, P, v, x) for v, x in zip(vs, xs)]
        j = _select(lw, rng)
        return (tuple(vs), tuple(xs), j), xs[j]

    def log_joint(P, r, x):
        vs, xs, j = r
        if not _same(xs[j], x):
            return -math.inf
        li = [log_imp_density(inner, P, v, xi) for v, xi in zip(vs, xs)]
        lw = [trace_log_weight(logp, inner, P, v, xi) for v, xi in zip(vs, xs)]
        return sum(li) + _log_select(lw, j)

    def meta(x):
        def sample(P, rng):
            j = rng.uniform_int(N)
            vs, xs = [], []
            for i in range(N):
                if i == j:
                    vs.append(simulate_hme(inner, x, P, rng))
                    xs.append(x)
                else:
                    v, xi = simulate_importance(inner, P, rng)
                    vs.append(v)
                    xs.append(xi)
            return tuple(vs), tuple(xs), j

        def log_density(P, r):
            vs, xs, j = r
            if not _same(xs[j], x):
                return -math.inf
            out = -math.log(N) + log_hme_density(inner, P, vs[j], x)
            for i in range(N):
                if i != j:
                    out = out + log_imp_density(inner, P, vs[i], xs[i])
            return out

        return Terminal(sample, log_density, kind=Kind.TWO_SIDED, name="conditional-ravi-sir")

    return Compound(sample_joint, log_joint, meta, kind=inner.kind, params=inner.params,
                    name=f"ravi_sir(N={N})")


def _close(a, b) -> bool:
    if isinstance(a, (float, np.floating)) or isinstance(a, np.ndarray):
        return bool(np.allclose(a, b, rtol=1e-12, atol=1e-12))
    return a == b


def antithetic(target, q: Terminal, T, log_jac=None, T_inv=None) -> Compound:
    """Propose ``x0 ~ q`` and choose between ``x0`` and ``T(x0)`` by target weight.

    ``log_jac(x0)`` is ``log |det dT/dx|`` at ``x0`` (zero by default, e.g.
    for reflections or finite permutations). The meta-strategy flips a fair
    coin ``b`` and sets ``x0 = T_inv(x)`` when ``b = 1``; ``T_inv`` defaults
    to ``T`` (an involution).
    """
    logp = as_target_fn(target)
    log_jac = log_jac or (lambda x0: 0.0)
    T_inv = T_inv or T

    def choice_log_probs(P, x0):
        lq = q.log_density(P, x0)
        l0 = logp(P, x0) - lq
        l1 = logp(P, T(x0)) - lq
        if max(ad.value_of(l0), ad.value_of(l1)) == -math.inf:
            return lq, [-math.log(2.0), -math.log(2.0)]
        z = ad.logsumexp([l0, l1])
        return lq, [l0 - z, l1 - z]

    def sample_joint(P, rng):
        x0 = q.sample(P, rng)
        _, lb = choice_log_probs(P, x0)
        p1 = ad.value_of(ad.exp(lb[1]))
        b = int(rng.bernoulli(min(1.0, max(0.0, p1))))
        return (x0, b), (T(x0) if b else x0)

    def log_joint(P, r, x):
        x0, b = r
        if not _close(T(x0) if b else x0, x):
            return -math.inf
        lq, lb = choice_log_probs(P, x0)
        return lq + lb[b] - (log_jac(x0) if b else 0.0)

    def meta(x):
        def sample(P, rng):
            b = int(rng.bernoulli(0.5))
            return (T_inv(x) if b else x), b

        def log_density(P, r):
            x0, b = r
            return -math.log(2.0) if _close(T(x0) if b else x0, x) else -math.inf

        return Terminal(sample, log_density, kind=Kind.TWO_SIDED, name="antithetic-flip")

    return Compound(sample_joint, log_joint, meta, kind=q.kind, params=q.params, name="antithetic")
