"""Markov-chain variational families with learned backward kernels."""
from __future__ import annotations

from ..core.strategy import Compound, Kind, Strategy, Terminal
from .families import MCVIConfig
from .particles import MoveProgram, move_smc_strategy


def _forward(cfg: MCVIConfig):
    """Sampler and joint density of ``x_0 ~ q0, x_{i+1} ~ T(x_i)``."""
    M, q0, T = cfg.M, cfg.q0, cfg.T

    def sample_chain(P, rng):
        xs = [q0.sample(P, rng)]
        for _ in range(M):
            xs.append(T.sample(xs[-1], rng, P))
        return xs

    def log_chain(P, xs):
        out = q0.log_density(P, xs[0])
        for i in range(M):
            out = out + T.log_density(xs[i], xs[i + 1], P)
        return out

    return sample_chain, log_chain


def mcvi(cfg: MCVIConfig) -> Strategy:
    """Markov chain proposal whose trace is inferred by the backward kernels.

    The auxiliary variable is ``(x_0, ..., x_{M-1})`` and the output is
    ``x_M``. The meta-strategy draws ``x_i ~ R[i](x_{i+1})`` backwards from
    ``x_M``, so the lower bound of this strategy is the classical MCVI
    objective. ``M = 0`` returns ``q0`` itself.
    """
    if cfg.M == 0:
        return cfg.q0
    M, R = cfg.M, cfg.R
    sample_chain, log_chain = _forward(cfg)

    def sample_joint(P, rng):
        xs = sample_chain(P, rng)
        return tuple(xs[:-1]), xs[-1]

    def log_joint(P, r, x):
        return log_chain(P, list(r) + [x])

    def meta(x):
        def sample(P, rng):
            xs = [None] * (M + 1)
            xs[M] = x
            for i in range(M - 1, -1, -1):
                xs[i] = R[i].sample(xs[i + 1], rng, P)
            return tuple(xs[:-1])

        def log_density(P, r):
            xs = list(r) + [x]
            out = 0.0
            for i in range(M):
                out = out + R[i].log_density(xs[i + 1], xs[i], P)
            return out

        return Terminal(sample, log_density, kind=Kind.TWO_SIDED, name="mcvi-backward")

    return Compound(sample_joint, log_joint, meta, kind=Kind.TWO_SIDED, params=cfg.q0.params,
                    name=f"mcvi(M={M})")


class BackwardChainProgram(MoveProgram):
    """Backward SMC over MCMC traces: level ``l`` proposes ``x_i``, ``i = M-1-l``.

    The incremental weight of a move ``x_{i+1} -> x_i`` is
    ``q_i(x_i) T(x_i -> x_{i+1}) / (q_{i+1}(x_{i+1}) R_i(x_{i+1} -> x_i))``.
    """

    def __init__(self, cfg: MCVIConfig):
        self.cfg = cfg

    def levels(self, x):
        return self.cfg.M

    def initial(self, x):
        return x

    def _i(self, l):
        return self.cfg.M - 1 - l

    def propose(self, P, l, state, rng):
        return self.cfg.R[self._i(l)].sample(state, rng, P)

    def log_propose(self, P, l, state, move):
        return self.cfg.R[self._i(l)].log_density(state, move, P)

    def advance(self, l, state, move):
        return move

    def log_increment(self, P, l, state, move, new_state):
        c, i = self.cfg, self._i(l)
        return (c.q[i].log_density(P, move) + c.T.log_density(move, state, P)
                - c.q[i + 1].log_density(P, state) - c.R[i].log_density(state, move, P))


def rmcvi(cfg: MCVIConfig) -> Strategy:
    """Markov chain proposal with ``K``-particle SMC meta-inference.

    The auxiliary variable is the trace stored backwards,
    ``(x_{M-1}, ..., x_0)``; its meta-strategy is backward SMC guided by the
    weighting distributions ``cfg.q`` and its meta-meta-strategy is
    conditional SMC. With ``K = 1`` the law of the weights equals that of
    :func:`mcvi`.
    """
    if cfg.M == 0:
        return cfg.q0
    if cfg.q is None:
        raise ValueError("rmcvi needs weighting distributions q_0..q_M")
    M, K = cfg.M, cfg.K
    sample_chain, log_chain = _forward(cfg)
    prog = BackwardChainProgram(cfg)

    def sample_joint(P, rng):
        xs = sample_chain(P, rng)
        return tuple(reversed(xs[:-1])), xs[-1]

    def log_joint(P, r, x):
        return log_chain(P, list(reversed(r)) + [x])

    return Compound(sample_joint, log_joint, lambda x: move_smc_strategy(prog, x, K, "backward-smc"),
                    kind=Kind.TWO_SIDED, params=cfg.q0.params, name=f"rmcvi(M={M},K={K})")
