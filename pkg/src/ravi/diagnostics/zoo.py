"""Bundled strategies on small discrete targets, used by the oracle suite."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.strategy import Compound, Strategy
from ..core.target import UnnormalizedTarget
from ..models.dpmm import gaussian_dpmm
from ..models.targets import DiscreteTarget
from ..strategies.agglom import agglom
from ..strategies.basic import _log_select, antithetic, compound, ravi_sir, sir
from ..strategies.families import (AnnealingLadder, MCVIConfig, categorical, matrix_kernel,
                                   metropolis_kernel, uniform)
from ..strategies.mcvi import mcvi, rmcvi
from ..strategies.sequential import ais, smc


@dataclass
class ZooEntry:
    name: str
    target: UnnormalizedTarget
    strategy: Strategy


def _mixture_compound(atoms):
    """Two-component proposal ``r -> x`` whose meta-strategy guesses ``r`` uniformly."""
    comps = [np.array([0.7, 0.2, 0.1])[: len(atoms)], np.array([0.1, 0.3, 0.6])[: len(atoms)]]
    comps = [c / c.sum() for c in comps]
    mix = [0.4, 0.6]

    def sample_joint(P, rng):
        r = rng.categorical(np.log(mix))
        return r, atoms[rng.categorical(np.log(comps[r]))]

    def log_joint(P, r, x):
        if x not in atoms:
            return -math.inf
        return math.log(mix[r]) + math.log(comps[r][atoms.index(x)])

    return compound(sample_joint, log_joint, lambda x: uniform([0, 1]), name="mixture-compound")


def _faulty_sir(target, q, N):
    """``sir`` whose resampling density uses one sign-flipped log weight (negative control)."""
    honest = sir(target, q, N)
    logp = target.log_density

    def log_joint(P, r, x):
        xs, j = r
        if xs[j] != x:
            return -math.inf
        lq = [q.log_density(P, xi) for xi in xs]
        lw = [logp(xi) - l for xi, l in zip(xs, lq)]
        lw[0] = -lw[0]
        return sum(lq) + _log_select(lw, j)

    return Compound(honest.sample_joint, log_joint, honest.meta, kind=honest.kind,
                    name=f"sir(N={N},fault)")


def strategy_zoo(fault_inject: bool = False) -> list[ZooEntry]:
    """Every bundled combinator on a target with at most 16 atoms.

    With ``fault_inject`` the ``sir(N=2)`` entry scores its resampling step
    with one weight flipped, which biases the estimator and must make the
    suite fail.
    """
    t2 = DiscreteTarget([0, 1], weights=[2.0, 6.0], name="two-atom")
    t3 = DiscreteTarget([0, 1, 2], weights=[1.0, 4.0, 2.0], name="three-atom")
    t4 = DiscreteTarget([0, 1, 2, 3], weights=[1.0, 2.0, 3.0, 6.0], name="four-atom")
    q2 = uniform([0, 1])
    zoo = [ZooEntry("terminal", t2, categorical([0.3, 0.7], atoms=[0, 1])),
           ZooEntry("compound", t3, _mixture_compound([0, 1, 2]))]
    for N in (1, 2, 3):
        s = _faulty_sir(t2, q2, N) if (fault_inject and N == 2) else sir(t2, q2, N)
        zoo.append(ZooEntry(f"sir(N={N})", t2, s))
    zoo.append(ZooEntry("ravi_sir", t2, ravi_sir(t2, sir(t2, q2, 2), 2)))

    flat2 = DiscreteTarget([0, 1], weights=[1.0, 1.0])
    zoo.append(ZooEntry("smc(T=1)", t2, smc(AnnealingLadder([t2]), q2, [], [], 2)))
    lad = AnnealingLadder([flat2, t2])
    k = metropolis_kernel(flat2)
    zoo.append(ZooEntry("smc(T=2)", t2, smc(lad, q2, [k.as_strategy], [k.as_strategy], 2)))

    q3 = uniform([0, 1, 2])
    for rungs in (2, 3, 4):
        betas = np.linspace(0.0, 1.0, rungs)
        ladder = AnnealingLadder.geometric(DiscreteTarget([0, 1, 2], weights=[1, 1, 1]), t3, betas)
        kernels = [metropolis_kernel(ladder[i]) for i in range(rungs - 1)]
        zoo.append(ZooEntry(f"ais(T={rungs})", t3, ais(ladder, q3, kernels)))

    q0 = categorical([0.3, 0.7], atoms=[0, 1])
    T = metropolis_kernel(t2)
    R = matrix_kernel([[0.6, 0.4], [0.2, 0.8]], atoms=[0, 1])
    for M in (1, 2):
        cfg = MCVIConfig(M=M, q0=q0, T=T, R=[R] * M, K=2,
                         q=[q0] + [categorical([0.4, 0.6], atoms=[0, 1])] * M)
        zoo.append(ZooEntry(f"mcvi(M={M})", t2, mcvi(cfg)))
        zoo.append(ZooEntry(f"rmcvi(M={M},K=2)", t2, rmcvi(cfg)))

    zoo.append(ZooEntry("antithetic", t4, antithetic(
        t4, categorical([0.1, 0.2, 0.3, 0.4], atoms=[0, 1, 2, 3]), lambda x: 3 - x)))

    y = np.array([0.1, 1.9, 2.2])
    model = gaussian_dpmm(y)
    zoo.append(ZooEntry("agglom(n=3,K=2)", model.target(), agglom(y, 2, model)))
    return zoo
