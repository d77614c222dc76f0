"""Streaming Monte Carlo statistics with reproducible per-replicate streams."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core.random import RandomSource


class Welford:
    """Single-pass mean and variance; works elementwise on arrays."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def push(self, v):
        v = np.asarray(v, dtype=float)
        self.n += 1
        d = v - self.mean
        self.mean = self.mean + d / self.n
        self.m2 = self.m2 + d * (v - self.mean)

    def merge(self, other: "Welford") -> "Welford":
        out = Welford()
        out.n = self.n + other.n
        if out.n == 0:
            return out
        d = other.mean - self.mean
        out.mean = self.mean + d * other.n / out.n
        out.m2 = self.m2 + other.m2 + d * d * self.n * other.n / out.n
        return out


@dataclass
class EmpiricalStats:
    mean: np.ndarray | float
    variance: np.ndarray | float
    stderr: np.ndarray | float
    n: int

    def within(self, value, k: float = 3.0) -> bool:
        """True when ``|mean - value| <= k * stderr`` (elementwise all)."""
        return bool(np.all(np.abs(np.asarray(self.mean) - value) <= k * np.asarray(self.stderr)))


def _run_chunk(sampler, root_seed, lo, hi):
    acc = Welford()
    for i in range(lo, hi):
        acc.push(sampler(RandomSource.stream(root_seed, i)))
    return acc


def empirical_stats(sampler, reps: int, root_seed: int = 0, threads: int = 1,
                    chunk: int = 1000) -> EmpiricalStats:
    """Mean, variance and standard error of ``sampler(rng)`` over ``reps`` replicates.

    Replicate ``i`` draws from ``RandomSource.stream(root_seed, i)``, and
    chunks are merged in index order, so the result does not depend on
    ``threads``.
    """
    if reps < 2:
        raise ValueError("reps must be at least 2")
    bounds = [(lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda b: _run_chunk(sampler, root_seed, *b), bounds))
    else:
        parts = [_run_chunk(sampler, root_seed, *b) for b in bounds]
    acc = Welford()
    for p in parts:
        acc = acc.merge(p)
    var = acc.m2 / (acc.n - 1)
    se = np.sqrt(var / acc.n)
    if np.ndim(acc.mean) == 0:
        return EmpiricalStats(float(acc.mean), float(var), float(se), acc.n)
    return EmpiricalStats(acc.mean, var, se, acc.n)


def joint_se(a: EmpiricalStats, b: EmpiricalStats):
    """Standard error of the difference of two independent means."""
    return np.sqrt(np.asarray(a.stderr) ** 2 + np.asarray(b.stderr) ** 2)


def tv_distance(p, q) -> float:
    p, q = np.asarray(p, float), np.asarray(q, float)
    return 0.5 * float(np.abs(p - q).sum())


def chi_square_gof(counts, probs):
    """Pearson chi-square goodness of fit; returns ``(statistic, p_value)``."""
    from scipy import stats
    counts = np.asarray(counts, float)
    expected = np.asarray(probs, float) * counts.sum()
    res = stats.chisquare(counts, expected)
    return float(res.statistic), float(res.pvalue)


def rel_close(a, b, rtol=1e-10, atol=0.0) -> bool:
    return math.isclose(a, b, rel_tol=rtol, abs_tol=atol)
