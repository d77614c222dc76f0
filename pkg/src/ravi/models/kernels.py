"""Gradient-based Markov kernels on the real line."""
from __future__ import annotations

import math

import numpy as np

from ..core.random import as_source
from ..strategies.families import KernelFamily, gaussian_logpdf


def _grad_fn(target):
    g = getattr(target, "grad_log_density", None)
    if g is None:
        raise TypeError("target must provide grad_log_density(x)")
    return g


def langevin_kernel(target, step: float) -> KernelFamily:
    """Unadjusted Langevin move ``x' ~ N(x + h grad log pi(x), 2h)``.

    The transition density is Gaussian, so the kernel can appear in
    trajectories whose densities are evaluated.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    grad = _grad_fn(target)
    sd = math.sqrt(2.0 * step)

    def sample(x, rng):
        return float(x + step * grad(x) + sd * rng.normal())

    def log_density(x, x_next):
        return gaussian_logpdf(x_next, x + step * grad(x), sd)

    return KernelFamily(sample, log_density, name=f"langevin(h={step})")


def langevin_step(x: np.ndarray, grad, step: float, rng) -> np.ndarray:
    """Vectorized Langevin move for an array of chains."""
    rng = as_source(rng)
    x = np.asarray(x, dtype=float)
    return x + step * grad(x) + math.sqrt(2 * step) * rng.generator.standard_normal(x.shape)


def mala_step(x: np.ndarray, log_density, grad, step: float, rng):
    """Vectorized Metropolis-adjusted Langevin step; returns (x_new, accepted)."""
    rng = as_source(rng)
    x = np.asarray(x, dtype=float)
    sd = math.sqrt(2 * step)
    mean_f = x + step * grad(x)
    y = mean_f + sd * rng.generator.standard_normal(x.shape)
    mean_b = y + step * grad(y)
    log_a = (log_density(y) - log_density(x)
             - (x - mean_b) ** 2 / (4 * step) + (y - mean_f) ** 2 / (4 * step))
    acc = np.log(rng.generator.uniform(size=x.shape)) < log_a
    return np.where(acc, y, x), acc


def mala_kernel(target, step: float) -> KernelFamily:
    """Metropolis-adjusted Langevin kernel, invariant for ``target``.

    Its transition has an atom at the current point, so it supports sampling
    only; ``log_density`` raises. Use it inside estimators that need only
    target ratios (for example classical annealed importance weights).
    """
    grad = _grad_fn(target)
    logp = target.log_density

    def sample(x, rng):
        rng = as_source(rng)
        out, _ = mala_step(np.array([x]), lambda v: np.array([logp(float(u)) for u in v]),
                           lambda v: np.array([grad(float(u)) for u in v]), step, rng)
        return float(out[0])

    def log_density(x, x_next):
        raise NotImplementedError("the MALA transition has no density w.r.t. Lebesgue measure")

    return KernelFamily(sample, log_density, name=f"mala(h={step})")
