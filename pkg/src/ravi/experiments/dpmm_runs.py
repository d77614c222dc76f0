"""Replicated evidence estimates and modal partitions for partition models."""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from ..core.estimators import importance
from ..core.random import RandomSource
from ..core.target import UnnormalizedTarget, logsumexp
from ..models.dpmm import DPMMModel, dpmm_smc_baseline
from ..strategies.agglom import agglom


def _score_target(model: DPMMModel) -> UnnormalizedTarget:
    return UnnormalizedTarget(model.log_score, name=model.name)


def agglom_log_evidence(model: DPMMModel, K: int, rng) -> float:
    return importance(_score_target(model), agglom(model.data, K, model), rng).log_weight


def evidence_replicates(model: DPMMModel, method: str, size: int, reps: int, seed: int,
                        threads: int = 1, rejuvenate_every: int = 20) -> np.ndarray:
    """``reps`` independent ``log Z_hat`` values; replicate ``i`` uses stream ``(seed, i)``.

    ``method`` is ``"agglom"`` (``size`` = meta particles K) or ``"smc"``
    (``size`` = particles N).
    """
    if method == "agglom":
        s = agglom(model.data, size, model)
        target = _score_target(model)
        fn = lambda i: importance(target, s, RandomSource.stream(seed, i)).log_weight
    elif method == "smc":
        fn = lambda i: dpmm_smc_baseline(model, size, RandomSource.stream(seed, i),
                                         rejuvenate_every=rejuvenate_every)
    else:
        raise ValueError(f"unknown method {method!r}")
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return np.array(list(ex.map(fn, range(reps))))
    return np.array([fn(i) for i in range(reps)])


def modal_partition(model: DPMMModel, K: int, samples: int, rng):
    """Partition with the largest summed importance weight over ``samples`` agglom draws."""
    s = agglom(model.data, K, model)
    target = _score_target(model)
    acc = defaultdict(list)
    for _ in range(samples):
        ws = importance(target, s, rng)
        acc[ws.x].append(ws.log_weight)
    scores = {p: logsumexp(v) for p, v in acc.items()}
    return max(scores, key=lambda p: (scores[p], repr(p)))


def mean_exp_with_se(log_z: np.ndarray, log_ref: float):
    """Mean and standard error of ``exp(log_z - log_ref)`` (both relative to the reference)."""
    r = np.exp(np.asarray(log_z) - log_ref)
    return float(r.mean()), float(r.std(ddof=1) / math.sqrt(r.size))
