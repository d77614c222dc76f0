"""Finite-difference gradients and stationarity checks for Markov kernels."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.estimators import importance
from ..core.mh import MHState, mh_step
from ..core.random import RandomSource
from ..core.target import UnnormalizedTarget
from ..strategies.families import _key
from .enumerate import _round_key, enumerate_law


@dataclass
class FiniteDiff:
    grad: np.ndarray
    stderr: np.ndarray


def finite_diff_gradient(objective, params, h: float = 1e-5, reps: int | None = None,
                         root_seed: int = 0) -> FiniteDiff:
    """Central differences of ``objective`` at ``params``.

    With ``reps=None`` the objective is deterministic, ``objective(theta)``.
    Otherwise it is ``objective(theta, rng)`` and each coordinate averages
    ``reps`` differences using common random numbers for the two sides.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    theta = np.asarray(params, dtype=float)
    g = np.zeros_like(theta)
    se = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e.flat[i] = h
        if reps is None:
            g.flat[i] = (objective(theta + e) - objective(theta - e)) / (2 * h)
            continue
        d = np.empty(reps)
        for k in range(reps):
            d[k] = (objective(theta + e, RandomSource.stream(root_seed, k))
                    - objective(theta - e, RandomSource.stream(root_seed, k))) / (2 * h)
        g.flat[i] = d.mean()
        se.flat[i] = d.std(ddof=1) / math.sqrt(reps) if reps > 1 else math.nan
    return FiniteDiff(g, se)


def kernel_stationarity_check(kernel, target, grid=None) -> float:
    """Total-variation distance between ``target`` and ``target`` pushed through ``kernel``.

    Discrete targets use their atoms. Continuous 1-D targets need ``grid``;
    densities are normalized on the grid and ``kernel.log_density`` must
    broadcast over numpy arrays.
    """
    if grid is None:
        if not isinstance(target, UnnormalizedTarget) or not target.enumerable:
            raise ValueError("continuous targets need a quadrature grid")
        atoms = target.atoms
        pi = target.probabilities()
        K = np.array([[math.exp(kernel.log_density(a, b)) for b in atoms] for a in atoms])
        return 0.5 * float(np.abs(pi @ K - pi).sum())
    xs = np.asarray(grid, dtype=float)
    dx = np.gradient(xs)
    logp = (target.log_density_vec(xs) if hasattr(target, "log_density_vec")
            else np.array([target.log_density(float(x)) for x in xs]))
    p = np.exp(logp - logp.max())
    p /= (p * dx).sum()
    K = np.exp(kernel.log_density(xs[:, None], xs[None, :]))
    pushed = (p * dx) @ K
    return 0.5 * float((np.abs(pushed - p) * dx).sum())


@dataclass
class MHStationarity:
    residual: float
    states: list
    mu: np.ndarray
    P: np.ndarray


def _state_key(x, lz, digits=12):
    return (_key(x), _round_key(float(lz), digits))


def mh_stationarity_check(model, proposal, S, M, atoms, strict: bool = True,
                          digits: int = 12, step=mh_step) -> MHStationarity:
    """Exact one-step transition matrix of the auxiliary-variable MH chain.

    States are pairs ``(x, log Z_hat)``; the invariant law is proportional
    to ``Z_hat`` times the law of the estimate produced by ``S(x)``, whose
    ``x``-marginal is the target. Returns ``|mu P - mu|_1``. ``step`` can be
    replaced to test the test with a broken transition.
    """
    states, index, mu = [], {}, []
    for x in atoms:
        law = enumerate_law(lambda rng: importance(lambda r: model(r, x), S(x), rng,
                                                   strict=strict).log_weight)
        for lz, p in law.merged(digits=digits):
            k = _state_key(x, lz, digits)
            if k in index:
                mu[index[k]] += p * math.exp(lz)
                continue
            index[k] = len(states)
            states.append(MHState(x, float(lz)))
            mu.append(p * math.exp(lz))
    mu = np.array(mu)
    mu /= mu.sum()
    n = len(states)
    P = np.zeros((n, n))
    for i, st in enumerate(states):
        law = enumerate_law(lambda rng: step(model, proposal, S, M, st, rng, strict)[0])
        for nxt, p in law:
            k = _state_key(nxt.x, nxt.log_Z, digits)
            if k not in index:
                raise RuntimeError(f"transition reached an unlisted state {k!r}")
            P[i, index[k]] += p
    residual = float(np.abs(mu @ P - mu).sum())
    return MHStationarity(residual, states, mu, P)
