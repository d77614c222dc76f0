"""Vectorized Langevin-chain variational families on 1-D targets.

The forward chain starts at ``x_0 ~ q0`` and takes ``M`` unadjusted Langevin
steps. Reverse kernels are per-step affine Gaussians
``R_i(x_{i+1} -> x_i) = N(a_i x_{i+1} + b_i, exp(2 c_i))`` and the weighting
distributions of the particle meta-inference are Gaussians
``q_i = N(mu_i, exp(2 s_i))``. Estimates here match the library strategies
``mcvi`` and ``rmcvi`` built from the same pieces; the array layout simply
runs many replicates at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ..core.random import RandomSource, as_source

LOG_2PI = math.log(2 * math.pi)


def _norm_logpdf(x, mean, log_sd):
    z = (x - mean) * np.exp(-log_sd)
    return -0.5 * z * z - log_sd - 0.5 * LOG_2PI


@dataclass
class LangevinChain:
    """Target, step size and initial Gaussian ``q0`` of the forward chain."""

    target: object
    step: float = 0.015
    q0_mean: float = 0.0
    q0_std: float = 1.0

    def __post_init__(self):
        if self.step <= 0 or self.q0_std <= 0:
            raise ValueError("step and q0_std must be positive")

    @property
    def noise_log_sd(self) -> float:
        return 0.5 * math.log(2 * self.step)

    def drift(self, x):
        return x + self.step * self.target.grad_log_density(x)

    def log_q0(self, x):
        return _norm_logpdf(x, self.q0_mean, math.log(self.q0_std))

    def log_T(self, x, x_next):
        return _norm_logpdf(x_next, self.drift(x), self.noise_log_sd)

    def log_target(self, x):
        return self.target.log_density_vec(x)

    def rollout(self, n: int, M: int, rng) -> np.ndarray:
        """Forward trajectories, shape ``(n, M + 1)``."""
        g = as_source(rng).generator
        X = np.empty((n, M + 1))
        X[:, 0] = self.q0_mean + self.q0_std * g.standard_normal(n)
        sd = math.sqrt(2 * self.step)
        for i in range(M):
            X[:, i + 1] = self.drift(X[:, i]) + sd * g.standard_normal(n)
        return X


@dataclass
class ReverseKernels:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @classmethod
    def identity(cls, M: int, log_sd: float):
        return cls(np.ones(M), np.zeros(M), np.full(M, log_sd))

    def log_density(self, i, x_next, x):
        return _norm_logpdf(x, self.a[i] * x_next + self.b[i], self.c[i])

    def sample(self, i, x_next, g):
        return self.a[i] * x_next + self.b[i] + np.exp(self.c[i]) * g.standard_normal(np.shape(x_next))

    def copy(self):
        return ReverseKernels(self.a.copy(), self.b.copy(), self.c.copy())


@dataclass
class WeightingGaussians:
    """``q_1..q_M``; index 0 is unused because the chain's own ``q0`` is used there."""

    mu: np.ndarray
    s: np.ndarray

    @classmethod
    def standard(cls, M: int):
        return cls(np.zeros(M + 1), np.zeros(M + 1))

    def log_density(self, i, x, chain: LangevinChain):
        if i == 0:
            return chain.log_q0(x)
        return _norm_logpdf(x, self.mu[i], self.s[i])

    def copy(self):
        return WeightingGaussians(self.mu.copy(), self.s.copy())


@dataclass
class TrainingLog:
    objective: list = field(default_factory=list)


def train(chain: LangevinChain, M: int, iters: int, batch: int, lr: float, rng,
          freeze_q: bool = False, R: ReverseKernels | None = None,
          Q: WeightingGaussians | None = None):
    """Stochastic gradient ascent on forward rollouts.

    For the reverse kernels this is exactly the ELBO gradient of the
    chain family (the proposal does not depend on them), i.e. the single
    particle case of the particle family. The weighting Gaussians are fitted
    in the same loop by the likelihood of the rollout marginals; with
    ``freeze_q`` they are moment-matched once on the first batch and then
    held fixed.
    """
    rng = as_source(rng)
    R = R.copy() if R is not None else ReverseKernels.identity(M, chain.noise_log_sd)
    Q = Q.copy() if Q is not None else WeightingGaussians.standard(M)
    log = TrainingLog()
    for it in range(iters):
        X = chain.rollout(batch, M, rng)
        if freeze_q and it == 0:
            Q.mu[1:] = X[:, 1:].mean(0)
            Q.s[1:] = np.log(X[:, 1:].std(0) + 1e-12)
        xn, xp = X[:, 1:], X[:, :-1]
        prec = np.exp(-2 * R.c)
        r = xp - (R.a * xn + R.b)
        R.a += lr * (r * xn * prec).mean(0) / prec
        R.b += lr * (r * prec).mean(0) / prec
        R.c += lr * (r * r * prec - 1).mean(0)
        if not freeze_q:
            qp = np.exp(-2 * Q.s[1:])
            d = X[:, 1:] - Q.mu[1:]
            Q.mu[1:] += lr * (d * qp).mean(0) / qp
            Q.s[1:] += lr * (d * d * qp - 1).mean(0)
        log.objective.append(float(R.log_density(slice(None), xn, xp).sum(1).mean()))
    return R, Q, log


def mcvi_log_weights(chain: LangevinChain, R: ReverseKernels, M: int, n: int, rng) -> np.ndarray:
    """``log Z_hat`` of the chain family with sequential reverse kernels (``n`` replicates)."""
    X = chain.rollout(n, M, as_source(rng))
    out = chain.log_target(X[:, M]) - chain.log_q0(X[:, 0])
    for i in range(M):
        out += R.log_density(i, X[:, i + 1], X[:, i]) - chain.log_T(X[:, i], X[:, i + 1])
    return out


def rmcvi_log_weights(chain: LangevinChain, R: ReverseKernels, Q: WeightingGaussians, M: int,
                      K: int, n: int, rng) -> np.ndarray:
    """``log Z_hat`` of the chain family with ``K``-particle backward meta-inference.

    The forward trajectory is pinned as particle 0 of a conditional particle
    filter run from ``x_M`` back to ``x_0``; the estimate is
    ``log pi~(x_M) - log q_M(x_M) - log Z_hat_meta``.
    """
    rng = as_source(rng)
    g = rng.generator
    X = chain.rollout(n, M, rng)
    xM = X[:, M]
    out = chain.log_target(xM) - Q.log_density(M, xM, chain) if M > 0 else \
        chain.log_target(xM) - chain.log_q0(xM)
    if M == 0:
        return out
    cur = np.repeat(xM[:, None], K, axis=1)
    logW = np.full((n, K), -math.log(K))
    log_meta = np.zeros(n)
    rows = np.arange(n)[:, None]
    for i in range(M - 1, -1, -1):
        W = np.exp(logW - logW.max(1, keepdims=True))
        cdf = np.cumsum(W / W.sum(1, keepdims=True), axis=1)
        u = g.uniform(size=(n, K))
        anc = np.minimum((u[:, :, None] > cdf[:, None, :]).sum(2), K - 1)
        anc[:, 0] = 0
        prev = cur[rows, anc]
        new = R.sample(i, prev, g)
        new[:, 0] = X[:, i]
        lw = (Q.log_density(i, new, chain) + chain.log_T(new, prev)
              - Q.log_density(i + 1, prev, chain) - R.log_density(i, prev, new))
        log_meta += logsumexp(lw, axis=1) - math.log(K)
        logW = lw - logsumexp(lw, axis=1, keepdims=True)
        cur = new
    return out - log_meta


def ais_log_weights(chain: LangevinChain, T: int, n: int, rng) -> np.ndarray:
    """Classical annealed importance weights from ``q0`` to the target using ``T`` MALA moves.

    The geometric ladder has ``T + 1`` increments; a MALA move invariant for
    rung ``t`` follows every increment except the last.
    """
    from ..models.kernels import mala_step
    rng = as_source(rng)
    g = rng.generator
    x = chain.q0_mean + chain.q0_std * g.standard_normal(n)
    betas = np.linspace(0.0, 1.0, T + 2)
    lw = np.zeros(n)
    for t in range(1, T + 2):
        lw += (betas[t] - betas[t - 1]) * (chain.log_target(x) - chain.log_q0(x))
        if t <= T:
            b = betas[t]
            logp = lambda v, b=b: (1 - b) * chain.log_q0(v) + b * chain.log_target(v)
            grad = lambda v, b=b: ((1 - b) * (-(v - chain.q0_mean) / chain.q0_std ** 2)
                                   + b * chain.target.grad_log_density(v))
            x, _ = mala_step(x, logp, grad, chain.step, rng)
    return lw


def blockwise(fn, reps: int, seed: int, block: int = 500, threads: int = 1) -> np.ndarray:
    """Concatenate ``fn(n, rng)`` over fixed-size blocks with per-block streams."""
    sizes = [min(block, reps - lo) for lo in range(0, reps, block)]
    jobs = [(n, RandomSource.stream(seed, k)) for k, n in enumerate(sizes)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda j: fn(*j), jobs))
    else:
        parts = [fn(*j) for j in jobs]
    return np.concatenate(parts)
