"""Exact sampling and divergence bounds built from the estimators."""
from __future__ import annotations

import math

from .estimators import _hme, _importance, _model_fn, _params_for, as_target_fn
from .random import as_source


class BoundViolation(RuntimeError):
    """A sampled weight exceeded the caller-supplied rejection bound."""


class TooManyRejections(RuntimeError):
    pass


def rejection_sample(target, s, log_bound: float, rng=None, max_tries: int = 100000,
                     params=None, return_tries: bool = False):
    """Exact draw from the normalized target.

    A weighted sample ``(x, Z_hat)`` is accepted with probability
    ``Z_hat / exp(log_bound)``. For nested strategies a valid bound is the
    product of per-layer bounds on the normalized weight ratios times ``Z``.
    """
    rng = as_source(rng)
    logp = as_target_fn(target)
    P = _params_for(s, params)
    for tries in range(1, max_tries + 1):
        x, lz, _ = _importance(logp, s, P, rng, True)
        if lz > log_bound + 1e-12:
            raise BoundViolation(f"log weight {lz} exceeds bound {log_bound}")
        if rng.bernoulli(min(1.0, math.exp(lz - log_bound))):
            return (x, tries) if return_tries else x
    raise TooManyRejections(f"no acceptance in {max_tries} tries")


def symmetric_kl_bound(p, S_p, q, S_q, rng=None, params=None) -> float:
    """Single-sample estimate whose mean upper-bounds ``KL(p||q) + KL(q||p)``.

    ``p`` and ``q`` are joint models over (latent, y) sharing the observation
    space; ``S_p(y)`` and ``S_q(y)`` build strategies for their posteriors.
    Draws ``y_p ~ p`` and ``y_q ~ q``; the harmonic-mean weights give upper
    bounds on ``log p(y_p)`` and ``log q(y_q)``, and importance weights give
    lower bounds on ``log q(y_p)`` and ``log p(y_q)``.
    """
    rng = as_source(rng)
    P = {} if params is None else params
    x, y_p = p.sample(P, rng)
    z, y_q = q.sample(P, rng)
    lw_pp, _ = _hme(_model_fn(p, y_p), x, S_p(y_p), P, rng, True)
    lw_qq, _ = _hme(_model_fn(q, y_q), z, S_q(y_q), P, rng, True)
    _, lz_qp, _ = _importance(_model_fn(q, y_p), S_q(y_p), P, rng, True)
    _, lz_pq, _ = _importance(_model_fn(p, y_q), S_p(y_q), P, rng, True)
    return (-lw_pp - lz_qp) + (-lw_qq - lz_pq)
