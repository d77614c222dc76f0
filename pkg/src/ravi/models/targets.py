"""Concrete targets: finite discrete targets and 1-D Gaussian mixtures."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from ..core import autodiff as ad
from ..core.target import UnnormalizedTarget, logsumexp

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


class DiscreteTarget(UnnormalizedTarget):
    """Unnormalized target on a finite list of atoms."""

    def __init__(self, atoms, log_weights=None, weights=None, name="discrete"):
        atoms = list(atoms)
        if (log_weights is None) == (weights is None):
            raise ValueError("give exactly one of log_weights or weights")
        if log_weights is None:
            w = np.asarray(weights, dtype=float)
            if (w < 0).any():
                raise ValueError("weights must be non-negative")
            with np.errstate(divide="ignore"):
                log_weights = np.log(w)
        lw = np.asarray(log_weights, dtype=float)
        if len(atoms) == 0 or lw.shape != (len(atoms),):
            raise ValueError("need one log weight per atom and at least one atom")
        if not np.isfinite(lw).any():
            raise ValueError("at least one log weight must be finite")
        self.log_weights = lw
        self._index = {a: i for i, a in enumerate(atoms)}
        super().__init__(self._lookup, atoms=atoms, name=name)

    def _lookup(self, x):
        i = self._index.get(x)
        return -math.inf if i is None else float(self.log_weights[i])

    @property
    def Z(self) -> float:
        return math.exp(self.exact_log_Z())


class GaussianMixtureTarget(UnnormalizedTarget):
    """Normalized 1-D Gaussian mixture ``sum_k w_k N(mean_k, std_k^2)`` times ``exp(log_scale)``."""

    def __init__(self, components, log_scale: float = 0.0, name="mixture"):
        comps = [(float(w), float(m), float(s)) for w, m, s in components]
        if not comps:
            raise ValueError("need at least one component")
        w = np.array([c[0] for c in comps])
        if (w <= 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be positive and sum to 1")
        if any(c[2] <= 0 for c in comps):
            raise ValueError("component standard deviations must be positive")
        self.components = comps
        self.log_scale = float(log_scale)
        self._lw = np.log(w)
        self._mu = np.array([c[1] for c in comps])
        self._sd = np.array([c[2] for c in comps])
        super().__init__(self._log_density, dim=1, name=name)

    def _terms(self, x):
        return [lw + (-0.5 * ((x - m) / s) ** 2 - math.log(s) - LOG_SQRT_2PI)
                for lw, m, s in zip(self._lw, self._mu, self._sd)]

    def _log_density(self, x):
        if isinstance(x, ad.Dual):
            return ad.logsumexp(self._terms(x)) + self.log_scale
        z = (x - self._mu) / self._sd
        t = self._lw - 0.5 * z * z - np.log(self._sd) - LOG_SQRT_2PI
        return float(special.logsumexp(t)) + self.log_scale

    def log_density_vec(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)[..., None]
        z = (xs - self._mu) / self._sd
        t = self._lw - 0.5 * z * z - np.log(self._sd) - LOG_SQRT_2PI
        return special.logsumexp(t, axis=-1) + self.log_scale

    def grad_log_density(self, x):
        """d/dx log density, vectorized over ``x``."""
        xs = np.asarray(x, dtype=float)[..., None]
        z = (xs - self._mu) / self._sd
        t = self._lw - 0.5 * z * z - np.log(self._sd)
        r = special.softmax(t, axis=-1)
        g = (r * (-(xs - self._mu) / self._sd ** 2)).sum(-1)
        return float(g) if np.ndim(x) == 0 else g

    def sample(self, rng, size=None):
        n = 1 if size is None else int(size)
        k = np.array([rng.categorical(self._lw) for _ in range(n)])
        out = self._mu[k] + self._sd[k] * np.asarray(rng.normal(size=n))
        return float(out[0]) if size is None else out

    def exact_log_Z(self) -> float:
        return self.log_scale

    def quadrature_log_Z(self, n: int = 100_000, width: float = 12.0) -> float:
        """Trapezoid-rule log normalizer on ``n`` points covering every component."""
        lo = float(np.min(self._mu - width * self._sd))
        hi = float(np.max(self._mu + width * self._sd))
        xs = np.linspace(lo, hi, n)
        lp = self.log_density_vec(xs)
        m = lp.max()
        return float(m + math.log(integrate.trapezoid(np.exp(lp - m), xs)))


def gaussian_target(mean: float, std: float, log_scale: float = 0.0) -> GaussianMixtureTarget:
    return GaussianMixtureTarget([(1.0, mean, std)], log_scale=log_scale, name="gaussian")


def mixture_target(means=(-1.0, 1.0, 0.0), stds=(0.2, 0.3, 2.0), weights=(0.4, 0.4, 0.2),
                   log_scale: float = 0.0) -> GaussianMixtureTarget:
    """Three-component mixture with narrow, medium and wide components."""
    return GaussianMixtureTarget(list(zip(weights, means, stds)), log_scale=log_scale)


__all__ = ["DiscreteTarget", "GaussianMixtureTarget", "gaussian_target", "mixture_target",
           "logsumexp"]
