"""Symmetric KL between two latent-variable models' observation marginals."""
from __future__ import annotations

import math

import numpy as np

from ..core.applications import symmetric_kl_bound
from ..core.random import RandomSource
from ..core.target import JointModel
from ..strategies.families import categorical, uniform


def binary_latent_model(prior, likelihood, name="model") -> JointModel:
    """``x ~ Categorical(prior)`` over ``{0, 1}``, ``y | x ~ Categorical(likelihood[x])``."""
    prior = np.asarray(prior, float)
    lik = np.asarray(likelihood, float)
    ys = list(range(lik.shape[1]))

    def log_joint(P, x, y):
        return math.log(prior[x]) + math.log(lik[x, y])

    def sample(P, rng):
        x = rng.categorical(np.log(prior))
        return x, rng.categorical(np.log(lik[x]))

    return JointModel(log_joint, sample, latents=[0, 1], observations=ys, name=name)


def default_pair():
    p = binary_latent_model([0.5, 0.5], [[0.6, 0.3, 0.1], [0.1, 0.3, 0.6]], name="p")
    q = binary_latent_model([0.3, 0.7], [[0.5, 0.4, 0.1], [0.2, 0.2, 0.6]], name="q")
    return p, q


def exact_symmetric_kl(p: JointModel, q: JointModel) -> float:
    lp, lq = p.log_prob_y(), q.log_prob_y()
    return float(np.sum(np.exp(lp) * (lp - lq)) + np.sum(np.exp(lq) * (lq - lp)))


def posterior_strategy(model: JointModel):
    """Exact posterior over the latent as a tractable strategy."""
    return lambda y: categorical(model.posterior(y), atoms=model.latents)


def prior_guess_strategy(model: JointModel):
    """Uniform guess over the latent, ignoring ``y``."""
    return lambda y: uniform(model.latents)


def kl_replicates(p, S_p, q, S_q, reps: int, seed: int, threads: int = 1) -> np.ndarray:
    fn = lambda i: symmetric_kl_bound(p, S_p, q, S_q, RandomSource.stream(seed, i))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return np.array(list(ex.map(fn, range(reps))))
    return np.array([fn(i) for i in range(reps)])
