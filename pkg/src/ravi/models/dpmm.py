"""Dirichlet process mixture models over partitions and a particle-filter baseline."""
from __future__ import annotations

import math
from functools import partial

import numpy as np

from ..core.random import as_source
from ..core.target import UnnormalizedTarget, logsumexp
from .likelihoods import NIG, TypoLikelihood, gaussian_cluster_marginal, typo_cluster_marginal
from .partitions import Partition, crp_log_prior, enumerate_partitions


class DPMMModel:
    """Unnormalized posterior ``CRP(Pi; alpha) * prod_I F(y_I)`` over partitions.

    ``marginal(indices)`` returns ``log F`` of the observations at
    ``indices``; results are cached per block.
    """

    def __init__(self, data, marginal, alpha: float = 1.0, name="dpmm"):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.data = data
        self.n = len(data)
        self.alpha = float(alpha)
        self._marginal = marginal
        self._cache: dict = {}
        self.name = name

    def log_F(self, block) -> float:
        block = tuple(sorted(block))
        v = self._cache.get(block)
        if v is None:
            v = float(self._marginal(block))
            self._cache[block] = v
        return v

    def log_score(self, p: Partition) -> float:
        return crp_log_prior(p, self.alpha, self.n) + sum(self.log_F(c) for c in p)

    def merge_delta(self, a: tuple, b: tuple) -> float:
        """Change in ``log_score`` when blocks ``a`` and ``b`` are merged."""
        return (math.lgamma(len(a) + len(b)) - math.lgamma(len(a)) - math.lgamma(len(b))
                - math.log(self.alpha) + self.log_F(a + b) - self.log_F(a) - self.log_F(b))

    def partitions(self):
        return list(enumerate_partitions(self.n))

    def exact_log_evidence(self) -> float:
        """``log sum_Pi CRP(Pi) prod F`` by enumeration (Bell(n) terms)."""
        if self.n > 10:
            raise ValueError("exact evidence by enumeration is limited to n <= 10")
        return logsumexp([self.log_score(p) for p in enumerate_partitions(self.n)])

    def posterior(self) -> dict:
        parts = self.partitions()
        ls = np.array([self.log_score(p) for p in parts])
        w = np.exp(ls - logsumexp(ls))
        return dict(zip(parts, w))

    def target(self) -> UnnormalizedTarget:
        atoms = self.partitions() if self.n <= 8 else None
        return UnnormalizedTarget(self.log_score, atoms=atoms, name=self.name)


def gaussian_dpmm(data, alpha: float = 1.0, hyper: NIG = NIG()) -> DPMMModel:
    data = np.asarray(data, dtype=float)
    return DPMMModel(data, partial(gaussian_cluster_marginal, data=data, hyper=hyper), alpha,
                     name="gaussian-dpmm")


def typo_dpmm(strings, alpha: float = 1.0, tl: TypoLikelihood | None = None,
              normalize: bool = True) -> DPMMModel:
    from .likelihoods import BigramModel
    strings = list(strings)
    if tl is None:
        tl = TypoLikelihood(strings, BigramModel.from_corpus(strings), normalize=normalize)
    return DPMMModel(strings, partial(typo_cluster_marginal, data=strings, tl=tl), alpha,
                     name="typo-dpmm")


# ---------------------------------------------------------------------------
# particle-filter baseline
# ---------------------------------------------------------------------------
def _assignment_log_weights(model: DPMMModel, blocks, i, t):
    """Log weights for placing point ``i`` given ``blocks`` of ``t - 1`` earlier points.

    Existing block ``I``: ``|I| / (t - 1 + alpha) * F(I + i) / F(I)``;
    new block: ``alpha / (t - 1 + alpha) * F({i})``.
    """
    denom = math.log(t - 1 + model.alpha)
    lw = [math.log(len(c)) - denom + model.log_F(c + (i,)) - model.log_F(c) for c in blocks]
    lw.append(math.log(model.alpha) - denom + model.log_F((i,)))
    return lw


def _place(blocks, i, k):
    blocks = list(blocks)
    if k == len(blocks):
        blocks.append((i,))
    else:
        blocks[k] = tuple(sorted(blocks[k] + (i,)))
    return blocks


def _gibbs_sweep(model, blocks, t, rng):
    """One systematic-scan Gibbs sweep over points ``0..t-1``."""
    for i in range(t):
        rest = [tuple(j for j in c if j != i) for c in blocks]
        rest = [c for c in rest if c]
        lw = _assignment_log_weights(model, rest, i, t)
        blocks = _place(rest, i, rng.categorical(lw))
    return blocks


def dpmm_smc_baseline(model: DPMMModel, N: int, rng=None, rejuvenate_every: int = 20,
                      return_particles: bool = False):
    """Sequential Monte Carlo over data prefixes with the locally optimal proposal.

    Points are added in order; each particle assigns the new point with
    probability proportional to its predictive weight and receives the sum of
    those weights as incremental weight. Particles are resampled
    multinomially each step and refreshed by a Gibbs sweep every
    ``rejuvenate_every`` steps. Returns ``log Z_hat = sum_t log mean(w_t)``.
    All randomness goes through discrete choice points, so the estimator can
    be enumerated exactly for small problems.
    """
    rng = as_source(rng)
    if N < 1:
        raise ValueError("N must be positive")
    particles = [[] for _ in range(N)]
    log_Z = 0.0
    lw = [0.0] * N
    for t in range(1, model.n + 1):
        i = t - 1
        if t > 1:
            anc = [rng.categorical(lw) for _ in range(N)]
            particles = [list(particles[a]) for a in anc]
            if rejuvenate_every and (t - 1) % rejuvenate_every == 0:
                particles = [_gibbs_sweep(model, p, t - 1, rng) for p in particles]
        new_lw = []
        for k in range(N):
            opts = _assignment_log_weights(model, particles[k], i, t)
            tot = logsumexp(opts)
            particles[k] = _place(particles[k], i, rng.categorical(opts))
            new_lw.append(tot)
        lw = new_lw
        log_Z += logsumexp(lw) - math.log(N)
    if return_particles:
        return log_Z, [Partition(p) for p in particles], lw
    return log_Z
