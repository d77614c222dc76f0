"""Small parameterized problems for checking objective gradients.

The discrete problems are fully enumerable, so the mean objective is an
exact function of the parameters and can be differentiated numerically.
The continuous problems use reparameterized strategies whose objective is
a deterministic function of the parameters once the noise is fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import autodiff as ad
from ..core.estimators import elbo_grad, elbo_reparam, eubo_grad, eubo_reparam
from ..core.params import ParamStore
from ..core.random import RandomSource
from ..core.strategy import Compound, ReparamCompound, Strategy
from ..core.target import JointModel
from ..diagnostics.enumerate import enumerate_law
from ..strategies.families import categorical_logits, gaussian_logpdf, gaussian_param

PRIOR = np.array([0.35, 0.65])
LIKELIHOOD = np.array([[0.7, 0.2, 0.1], [0.15, 0.25, 0.6]])


@dataclass
class GradientProblem:
    model: JointModel
    y: object
    store: ParamStore
    strategy: Strategy
    name: str


def binary_model() -> JointModel:
    """``x ~ Categorical(PRIOR)`` on ``{0, 1}``, ``y | x ~ Categorical(LIKELIHOOD[x])``."""
    def log_joint(P, x, y):
        return math.log(PRIOR[x]) + math.log(LIKELIHOOD[x, y])

    def sample(P, rng):
        x = rng.categorical(np.log(PRIOR))
        return x, rng.categorical(np.log(LIKELIHOOD[x]))

    return JointModel(log_joint, sample, latents=[0, 1], observations=[0, 1, 2], name="binary")


def terminal_problem(y=2) -> GradientProblem:
    """Two-logit categorical proposal over the binary latent."""
    store = ParamStore({"l0": 0.3, "l1": -0.4})
    s = categorical_logits(["l0", "l1"], params=store)
    return GradientProblem(binary_model(), y, store, s, "terminal")


def compound_problem(y=2) -> GradientProblem:
    """``r ~ softmax(a)``, ``x | r ~ Bernoulli(sigmoid(b_r))``; the meta-proposal over ``r`` has logits ``m``."""
    store = ParamStore({"a0": 0.2, "a1": -0.1, "b0": -0.8, "b1": 0.9, "m0": 0.4, "m1": -0.3})
    meta = categorical_logits(["m0", "m1"], params=store)

    def log_x(P, r, x):
        b = P[f"b{r}"]
        return ad.log_sigmoid(b) if x == 1 else ad.log_sigmoid(-b)

    def log_joint(P, r, x):
        if x not in (0, 1):
            return -math.inf
        return P[f"a{r}"] - ad.logsumexp([P["a0"], P["a1"]]) + log_x(P, r, x)

    def sample_joint(P, rng):
        r = rng.categorical([ad.value_of(P["a0"]), ad.value_of(P["a1"])])
        p1 = 1.0 / (1.0 + math.exp(-ad.value_of(P[f"b{r}"])))
        return r, int(rng.bernoulli(p1))

    s = Compound(sample_joint, log_joint, lambda x: meta, params=store, name="two-level")
    return GradientProblem(binary_model(), y, store, s, "compound")


def _with(store: ParamStore, theta):
    old = store.values.copy()
    store.set_vector(theta)
    return old


def exact_mean_objective(prob: GradientProblem, bound: str, theta=None) -> float:
    """Exact mean of the lower (``"elbo"``) or upper (``"eubo"``) bound estimate."""
    store = prob.store
    old = _with(store, store.values if theta is None else theta)
    try:
        if bound == "elbo":
            law = enumerate_law(lambda rng: elbo_grad(prob.model, prob.y, prob.strategy, rng,
                                                      store).objective)
            return law.mean()
        post = prob.model.posterior(prob.y)
        total = 0.0
        for x, p in zip(prob.model.latents, post):
            law = enumerate_law(lambda rng: eubo_grad(prob.model, prob.y, x, prob.strategy,
                                                      rng, store).objective)
            total += p * law.mean()
        return total
    finally:
        store.set_vector(old)


def exact_mean_gradient(prob: GradientProblem, bound: str) -> np.ndarray:
    """Exact mean of the gradient estimator, by enumeration."""
    store = prob.store
    if bound == "elbo":
        return enumerate_law(lambda rng: elbo_grad(prob.model, prob.y, prob.strategy, rng,
                                                   store).grad).mean()
    post = prob.model.posterior(prob.y)
    return sum(p * enumerate_law(lambda rng: eubo_grad(prob.model, prob.y, x, prob.strategy,
                                                       rng, store).grad).mean()
               for x, p in zip(prob.model.latents, post))


def sample_gradients(prob: GradientProblem, bound: str, reps: int, seed: int) -> np.ndarray:
    """``reps`` gradient estimates; the upper bound draws ``x`` from the exact posterior."""
    post = np.log(prob.model.posterior(prob.y))
    out = np.empty((reps, len(prob.store)))
    for k in range(reps):
        rng = RandomSource.stream(seed, k)
        if bound == "elbo":
            out[k] = elbo_grad(prob.model, prob.y, prob.strategy, rng, prob.store).grad
        else:
            x = prob.model.latents[rng.categorical(post)]
            out[k] = eubo_grad(prob.model, prob.y, x, prob.strategy, rng, prob.store).grad
    return out


# -- reparameterized ----------------------------------------------------------

def gaussian_model(prior_sd: float = 1.0, noise_sd: float = 0.5) -> JointModel:
    """``x ~ N(0, prior_sd^2)``, ``y | x ~ N(x, noise_sd^2)``."""
    def log_joint(P, x, y):
        return gaussian_logpdf(x, 0.0, prior_sd) + gaussian_logpdf(y, x, noise_sd)

    def sample(P, rng):
        x = prior_sd * rng.normal()
        return x, x + noise_sd * rng.normal()

    return JointModel(log_joint, sample, name="gaussian")


def reparam_terminal_problem(y=0.7) -> GradientProblem:
    store = ParamStore({"mu": 0.1, "log_sigma": -0.3})
    return GradientProblem(gaussian_model(), y, store, gaussian_param("mu", "log_sigma", store),
                           "reparam-terminal")


def reparam_compound_problem(y=0.7) -> GradientProblem:
    """``r ~ N(mu, e^{2 s})``, ``x = r + e^{t} eps``; the meta-proposal over ``r`` is Gaussian in ``x``."""
    store = ParamStore({"mu": 0.2, "s": -0.5, "t": -1.0, "c": 0.6, "d": 0.05, "u": -1.2})

    def push(P, e):
        r = P["mu"] + ad.exp(P["s"]) * e[0]
        return r, r + ad.exp(P["t"]) * e[1]

    def log_joint(P, r, x):
        return gaussian_logpdf(r, P["mu"], ad.exp(P["s"])) + gaussian_logpdf(x, r, ad.exp(P["t"]))

    def meta(x):
        from ..core.strategy import ReparamTerminal
        return ReparamTerminal(lambda rng: rng.normal(),
                               lambda P, e: P["c"] * x + P["d"] + ad.exp(P["u"]) * e,
                               lambda P, r: gaussian_logpdf(r, P["c"] * x + P["d"], ad.exp(P["u"])),
                               params=store, name="meta")

    s = ReparamCompound(lambda rng: (rng.normal(), rng.normal()), push, log_joint, meta,
                        params=store, name="reparam-two-level")
    return GradientProblem(gaussian_model(), y, store, s, "reparam-compound")


def reparam_check(prob: GradientProblem, bound: str, seed: int, h: float = 1e-5, x=None):
    """``(autodiff gradient, central finite difference)`` along one fixed noise draw."""
    store = prob.store

    def run(theta):
        old = _with(store, theta)
        try:
            rng = RandomSource.stream(seed, 0)
            if bound == "elbo":
                return elbo_reparam(prob.model, prob.y, prob.strategy, rng, store)
            return eubo_reparam(prob.model, prob.y, x, prob.strategy, rng, store)
        finally:
            store.set_vector(old)

    theta = store.values.copy()
    _, g = run(theta)
    fd = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (run(theta + e)[0] - run(theta - e)[0]) / (2 * h)
    return np.asarray(g, float), fd
