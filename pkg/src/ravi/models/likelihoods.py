"""Cluster marginal likelihoods: conjugate Gaussian and string-typo models."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special, stats


# ---------------------------------------------------------------------------
# Gaussian with Normal-Inverse-Gamma prior
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class NIG:
    """Normal-Inverse-Gamma prior on (mean, variance) of a Gaussian component."""

    mu0: float = 0.0
    kappa0: float = 0.1
    a0: float = 1.0
    b0: float = 1.0

    def log_marginal(self, y) -> float:
        y = np.asarray(y, dtype=float)
        n = y.size
        if n == 0:
            return 0.0
        ybar = y.mean()
        kn = self.kappa0 + n
        an = self.a0 + 0.5 * n
        bn = (self.b0 + 0.5 * ((y - ybar) ** 2).sum()
              + self.kappa0 * n * (ybar - self.mu0) ** 2 / (2.0 * kn))
        return (math.lgamma(an) - math.lgamma(self.a0) + self.a0 * math.log(self.b0)
                - an * math.log(bn) + 0.5 * (math.log(self.kappa0) - math.log(kn))
                - 0.5 * n * math.log(2 * math.pi))

    def predictive(self):
        """Prior predictive of one observation (a Student-t distribution)."""
        scale = math.sqrt(self.b0 * (self.kappa0 + 1) / (self.a0 * self.kappa0))
        return stats.t(df=2 * self.a0, loc=self.mu0, scale=scale)

    def sample_component(self, rng):
        """Draw (mean, std) of a component: ``var ~ InvGamma(a0, b0)``, ``mean ~ N(mu0, var/kappa0)``."""
        g = rng.generator.gamma(self.a0, 1.0 / self.b0)
        var = 1.0 / g
        mean = rng.normal(self.mu0, math.sqrt(var / self.kappa0))
        return float(mean), math.sqrt(var)


def gaussian_cluster_marginal(indices, data, hyper: NIG = NIG()) -> float:
    """Log marginal likelihood of ``data[indices]`` under one NIG-Gaussian component."""
    idx = list(indices)
    if not idx:
        raise ValueError("cluster must be non-empty")
    return hyper.log_marginal(np.asarray(data, dtype=float)[idx])


# ---------------------------------------------------------------------------
# strings
# ---------------------------------------------------------------------------
def damerau_levenshtein(a: str, b: str) -> int:
    """Optimal string alignment distance: unit insert, delete, substitute, adjacent swap."""
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                d[i][j] = min(d[i][j], d[i - 2][j - 2] + 1)
    return d[n][m]


class BigramModel:
    """Character bigram distribution over non-empty strings.

    ``log_start[c]`` is the log probability of the first character;
    ``log_trans[c, c']`` covers the alphabet plus a final stop column, so the
    probabilities of all finite non-empty strings sum to one. The empty
    string has probability zero.
    """

    def __init__(self, alphabet: Sequence[str], log_start, log_trans):
        self.alphabet = list(alphabet)
        self.index = {c: i for i, c in enumerate(self.alphabet)}
        self.log_start = np.asarray(log_start, dtype=float)
        self.log_trans = np.asarray(log_trans, dtype=float)
        A = len(self.alphabet)
        if self.log_start.shape != (A,) or self.log_trans.shape != (A, A + 1):
            raise ValueError("bigram tables have the wrong shape")
        for row in [self.log_start, *self.log_trans]:
            if abs(special.logsumexp(row)) > 1e-10:
                raise ValueError("bigram rows must be normalized")

    @classmethod
    def uniform(cls, alphabet, stop_prob: float) -> "BigramModel":
        A = len(alphabet)
        start = np.full(A, -math.log(A))
        trans = np.full((A, A + 1), math.log((1 - stop_prob) / A))
        trans[:, A] = math.log(stop_prob)
        return cls(alphabet, start, trans)

    @classmethod
    def from_corpus(cls, strings, alphabet=None, smoothing: float = 1.0) -> "BigramModel":
        """Add-``smoothing`` estimates from a corpus of non-empty strings."""
        if alphabet is None:
            alphabet = sorted({c for s in strings for c in s})
        idx = {c: i for i, c in enumerate(alphabet)}
        A = len(alphabet)
        start = np.full(A, smoothing)
        trans = np.full((A, A + 1), smoothing)
        for s in strings:
            if not s:
                continue
            start[idx[s[0]]] += 1
            for u, v in zip(s, s[1:]):
                trans[idx[u], idx[v]] += 1
            trans[idx[s[-1]], A] += 1
        start = np.log(start / start.sum())
        trans = np.log(trans / trans.sum(axis=1, keepdims=True))
        return cls(alphabet, start, trans)

    def log_prob(self, s: str) -> float:
        return bigram_logprob(s, self)


def bigram_logprob(s: str, h: BigramModel) -> float:
    """log H(s) including the end-of-string transition; ``-inf`` for the empty string."""
    bad = [c for c in s if c not in h.index]
    if bad:
        raise ValueError(f"characters outside the alphabet: {sorted(set(bad))!r}")
    if not s:
        return -math.inf
    ids = [h.index[c] for c in s]
    out = h.log_start[ids[0]]
    for u, v in zip(ids, ids[1:]):
        out += h.log_trans[u, v]
    return float(out + h.log_trans[ids[-1], len(h.alphabet)])


class TypoLikelihood:
    """Noisy-copy likelihood over a finite lexicon of observed strings.

    For clean string ``x`` and observation ``y`` both in the lexicon,
    ``f(y | x)`` is proportional to
    ``NegBin(tau; ceil(|x|/5), 0.9) / (5.09 |x|)^tau`` with ``tau`` the edit
    distance. With ``normalize=True`` (default) each row is normalized over
    the lexicon; otherwise the raw expression is used.
    """

    def __init__(self, lexicon: Sequence[str], bigram: BigramModel, normalize: bool = True,
                 success: float = 0.9, base: float = 5.09):
        self.lexicon = sorted(set(lexicon))
        self.index = {s: i for i, s in enumerate(self.lexicon)}
        self.bigram = bigram
        self.normalize = normalize
        self.success = success
        self.base = base
        self.log_h = np.array([bigram_logprob(s, bigram) for s in self.lexicon])
        n = len(self.lexicon)
        logf = np.empty((n, n))
        for i, x in enumerate(self.lexicon):
            for j, y in enumerate(self.lexicon):
                logf[i, j] = self.log_noise(x, y)
        if normalize:
            logf -= special.logsumexp(logf, axis=1, keepdims=True)
        self.log_f = logf

    def log_noise(self, x: str, y: str) -> float:
        """Unnormalized log f(y | x) for lexicon strings."""
        tau = damerau_levenshtein(x, y)
        L = max(len(x), 1)
        trials = max(math.ceil(L / 5), 1)
        return float(stats.nbinom.logpmf(tau, trials, self.success) - tau * math.log(self.base * L))

    def log_f_pair(self, y: str, x: str) -> float:
        if x not in self.index or y not in self.index:
            return 0.0 if x == y else -math.inf
        return float(self.log_f[self.index[x], self.index[y]])


def typo_cluster_marginal(indices, data, tl: TypoLikelihood) -> float:
    """``log sum_{x in lexicon} h(x) prod_i f(y_i | x)`` for the strings ``data[indices]``."""
    idx = list(indices)
    if not idx:
        raise ValueError("cluster must be non-empty")
    cols = [tl.index[data[i]] for i in idx]
    return float(special.logsumexp(tl.log_h + tl.log_f[:, cols].sum(axis=1)))
