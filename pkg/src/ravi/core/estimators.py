"""Recursive estimators over strategy trees.

``importance`` and ``hme`` are mutually recursive: a compound proposal's
marginal density is estimated by running the harmonic-mean estimator with
its meta-strategy, and a compound harmonic-mean step runs importance
sampling with its meta-strategy. ``elbo_grad`` and ``eubo_grad`` follow the
same recursion while carrying score-function gradients; the ``*_reparam``
variants differentiate through fixed noise instead.

Internally targets are callables ``(params, x) -> log density`` so that
nested targets (a proposal's joint density at fixed ``x``) can depend on
the parameters.
"""
from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .params import ParamStore
from .random import RandomSource, as_source
from .strategy import (Compound, Kind, ReparamTerminal, Strategy, StrategyError,
                       SupportError, Terminal, is_reparam)
from .target import GradientEstimate, JointModel, UnnormalizedTarget, WeightedSample

NEG_INF = -math.inf


def as_target_fn(target):
    """Normalize a target to the internal ``(params, x) -> float`` form."""
    if isinstance(target, UnnormalizedTarget):
        return lambda P, x: target.log_density(x)
    if callable(target):
        return lambda P, x: target(x)
    raise TypeError(f"cannot use {type(target).__name__} as a target")


def _model_fn(model, y):
    if isinstance(model, JointModel):
        return lambda P, x: model.log_joint(P, x, y)
    if y is not None:
        return lambda P, x: model(P, x, y)
    return model


def _params_for(s: Strategy, params):
    if params is None:
        return s.default_params()
    if isinstance(params, ParamStore):
        return params.params()
    return params


def _joint_at(s: Compound, x):
    return lambda P, r: s.log_joint(P, r, x)


def _bad(v) -> bool:
    return isinstance(v, float) and math.isnan(v)


# ---------------------------------------------------------------------------
# importance / hme
# ---------------------------------------------------------------------------
def _importance(logp, s: Strategy, P, rng, strict: bool):
    if not s.kind.allows_importance():
        raise StrategyError(f"{s!r} is declared {s.kind.value}; importance needs wide or two-sided")
    if isinstance(s, Terminal):
        x = s.sample(P, rng)
        lq = ad.value_of(s.log_density(P, x))
        if lq == NEG_INF or _bad(lq):
            raise SupportError(f"{s!r} sampled x={x!r} outside the support of its own density")
        calls = 1
        lw_inner = -lq
    else:
        r, x = s.sample_joint(P, rng)
        m = s.meta(x)
        lw_inner, c = _hme(_joint_at(s, x), r, m, P, rng, strict)
        calls = c + 1
    lp = ad.value_of(logp(P, x))
    if _bad(lp):
        raise SupportError(f"target log density is NaN at {x!r}")
    if lp == NEG_INF:
        if strict and s.kind is not Kind.WIDE:
            raise SupportError(f"{s!r} is declared {s.kind.value} but proposed x={x!r} "
                               "where the target density is zero")
        return x, NEG_INF, calls
    return x, lp + lw_inner, calls


def _hme(logp, x, s: Strategy, P, rng, strict: bool):
    if not s.kind.allows_hme():
        raise StrategyError(f"{s!r} is declared {s.kind.value}; hme needs narrow or two-sided")
    lp = ad.value_of(logp(P, x))
    if lp == NEG_INF or _bad(lp):
        if strict:
            raise SupportError(f"hme called at x={x!r} where the target density is zero")
        return math.inf, 1
    if isinstance(s, Terminal):
        lq = ad.value_of(s.log_density(P, x))
        if lq == NEG_INF and strict and s.kind is not Kind.NARROW:
            raise SupportError(f"{s!r} is declared {s.kind.value} but has zero density at a "
                               f"target point x={x!r}")
        return lq - lp, 1
    m = s.meta(x)
    _, lz, c = _importance(_joint_at(s, x), m, P, rng, strict)
    return lz - lp, c + 1


def importance(target, s: Strategy, rng=None, params=None, strict: bool = True) -> WeightedSample:
    """Properly weighted sample ``(x, log Z_hat)`` for ``target`` using ``s``.

    ``E[exp(log_weight) | x] = target(x) / s.q(x)`` so the weight is an
    unbiased estimate of the target's normalizing constant. With
    ``strict=False`` support violations yield ``-inf`` weights instead of
    raising :class:`SupportError`.
    """
    rng = as_source(rng)
    x, lw, calls = _importance(as_target_fn(target), s, _params_for(s, params), rng, strict)
    return WeightedSample(x, lw, calls)


def hme(target, x, s: Strategy, rng=None, params=None, strict: bool = True,
        return_depth: bool = False):
    """Log of an unbiased estimate of ``1/Z`` when ``x ~ target``.

    Returns ``log w``; ``w`` estimates ``s.q(x) / target(x)``.
    """
    rng = as_source(rng)
    lw, calls = _hme(as_target_fn(target), x, s, _params_for(s, params), rng, strict)
    return (lw, calls) if return_depth else lw


# ---------------------------------------------------------------------------
# extended-space densities of the estimator randomness
# ---------------------------------------------------------------------------
# A trace is None for a terminal node and (r, subtrace) for a compound one.
# The same trace shape describes the randomness of importance and of hme,
# so importance's weight is target(x) * hme_density / imp_density.
def simulate_importance(s: Strategy, P, rng):
    """Draw ``(trace, x)`` from the randomness of :func:`importance` on ``s``."""
    if isinstance(s, Terminal):
        return None, s.sample(P, rng)
    r, x = s.sample_joint(P, rng)
    return (r, simulate_hme(s.meta(x), r, P, rng)), x


def simulate_hme(s: Strategy, x, P, rng):
    """Draw a trace from the randomness of :func:`hme` on ``s`` at ``x``."""
    if isinstance(s, Terminal):
        return None
    v, r = simulate_importance(s.meta(x), P, rng)
    return (r, v)


def log_imp_density(s: Strategy, P, v, x):
    """Log density of ``(trace, x)`` under :func:`simulate_importance`."""
    if isinstance(s, Terminal):
        return s.log_density(P, x)
    r, u = v
    return s.log_joint(P, r, x) + log_hme_density(s.meta(x), P, u, r)


def log_hme_density(s: Strategy, P, v, x):
    """Log density of ``trace`` under :func:`simulate_hme` at ``x``."""
    if isinstance(s, Terminal):
        return 0.0
    r, u = v
    return log_imp_density(s.meta(x), P, u, r)


def trace_log_weight(logp, s: Strategy, P, v, x):
    """Importance log weight of a simulated ``(trace, x)``."""
    lp = logp(P, x)
    if ad.value_of(lp) == NEG_INF:
        return NEG_INF
    return lp + log_hme_density(s, P, v, x) - log_imp_density(s, P, v, x)


# ---------------------------------------------------------------------------
# score-function objective gradients
# ---------------------------------------------------------------------------
def _elbo(logp, s, Pf, Pd, n, rng):
    if isinstance(s, Terminal):
        x = s.sample(Pf, rng)
        lq, glq = ad.split(s.log_density(Pd, x), n)
        U, dU, g = lq, glq * (1.0 + lq), glq
    else:
        r, x = s.sample_joint(Pf, rng)
        U, dU, g = _eubo(_joint_at(s, x), r, s.meta(x), Pf, Pd, n, rng)
    lp, glp = ad.split(logp(Pd, x), n)
    return lp - U, glp + g * lp - dU, g


def _eubo(logp, x, s, Pf, Pd, n, rng):
    if isinstance(s, Terminal):
        L, dL = ad.split(s.log_density(Pd, x), n)
    else:
        L, dL, _ = _elbo(_joint_at(s, x), s.meta(x), Pf, Pd, n, rng)
    lp, glp = ad.split(logp(Pd, x), n)
    U = lp - L
    return U, glp + glp * U - dL, glp


class MovingAverageBaseline:
    """Scalar control variate ``b`` subtracted from the top-level score term."""

    def __init__(self, decay: float = 0.9, value: float = 0.0):
        self.decay = decay
        self.value = value
        self._seen = False

    def update(self, objective: float) -> None:
        if not self._seen:
            self.value, self._seen = objective, True
        else:
            self.value = self.decay * self.value + (1 - self.decay) * objective


def _store_for(s, store):
    if store is None:
        store = s.params if s.params is not None else ParamStore()
    return store


def elbo_grad(model, y, s: Strategy, rng=None, store: ParamStore | None = None,
              baseline: MovingAverageBaseline | None = None) -> GradientEstimate:
    """Unbiased lower-bound estimate and its score-function gradient.

    ``model`` is a :class:`JointModel` (or a callable ``(params, x, y)``);
    ``store`` holds every parameter the model and strategy read. The
    gradient is also written into ``store.grad``.
    """
    rng = as_source(rng)
    store = _store_for(s, store)
    store.zero_grad()
    n = len(store)
    L, grad, g = _elbo(_model_fn(model, y), s, store.params(), store.duals(), n, rng)
    if baseline is not None:
        grad = grad - baseline.value * g
        baseline.update(L)
    store.grad = grad.copy()
    return GradientEstimate(L, grad, g)


def eubo_grad(model, y, x, s: Strategy, rng=None, store: ParamStore | None = None) -> GradientEstimate:
    """Upper-bound estimate at an exact posterior sample ``x`` with its gradient.

    ``score_g`` is the gradient of ``log p(x, y)``; for any ``R(y)`` free of
    the parameters, ``E[score_g * R(y)]`` is the gradient of ``E[R(y)]``.
    """
    rng = as_source(rng)
    store = _store_for(s, store)
    store.zero_grad()
    n = len(store)
    U, grad, g = _eubo(_model_fn(model, y), x, s, store.params(), store.duals(), n, rng)
    store.grad = grad.copy()
    return GradientEstimate(U, grad, g)


# ---------------------------------------------------------------------------
# reparameterized estimators
# ---------------------------------------------------------------------------
def _elbo_rep(logp, s, P, rng):
    if not is_reparam(s):
        raise StrategyError(f"{s!r} has no pushforward; the reparameterized lower bound "
                            "must sample from it")
    eps = s.noise(rng)
    if isinstance(s, ReparamTerminal):
        x = s.push(P, eps)
        U = s.log_density(P, x)
    else:
        r, x = s.push(P, eps)
        U = _eubo_rep(_joint_at(s, x), r, s.meta(x), P, rng)
    return logp(P, x) - U


def _eubo_rep(logp, x, s, P, rng):
    if isinstance(s, Terminal):
        L = s.log_density(P, x)
    else:
        L = _elbo_rep(_joint_at(s, x), s.meta(x), P, rng)
    return logp(P, x) - L


def elbo_reparam(model, y, s: Strategy, rng=None, store: ParamStore | None = None):
    """Lower-bound estimate differentiated along fixed noise: ``(objective, grad)``."""
    rng = as_source(rng)
    store = _store_for(s, store)
    out = _elbo_rep(_model_fn(model, y), s, store.duals(), rng)
    return ad.split(out, len(store))


def eubo_reparam(model, y, x, s: Strategy, rng=None, store: ParamStore | None = None):
    """Upper-bound estimate at posterior sample ``x``, differentiated along fixed noise."""
    rng = as_source(rng)
    store = _store_for(s, store)
    out = _eubo_rep(_model_fn(model, y), x, s, store.duals(), rng)
    return ad.split(out, len(store))


def objective_samples(fn, reps: int, root_seed: int = 0):
    """Run ``fn(rng)`` on ``reps`` independent streams and stack the results."""
    return np.array([fn(RandomSource.stream(root_seed, k)) for k in range(reps)])
