"""Particle meta-inference over sequences of moves.

A :class:`MoveProgram` describes a sequential target over move sequences:
starting from ``initial(x)``, level ``l`` proposes a move from the current
state and multiplies the particle weight by ``exp(log_increment)``. The
resulting meta-strategy is ``K``-particle SMC (ancestors drawn from the
previous level's weights, then a move proposed; a final index drawn from the
last weights) and its meta-strategy is conditional SMC pinning one particle
to the observed sequence.

The auxiliary value of the SMC node is ``(moves, ancestors, j)`` where
``moves[l][k]`` and ``ancestors[l][k]`` are tuples over levels and particles.
"""
from __future__ import annotations

import math

from ..core import autodiff as ad
from ..core.strategy import Compound, Kind, Strategy, Terminal
from .families import point_mass


class MoveProgram:
    """Interface for a sequential move process conditioned on ``x``."""

    def levels(self, x) -> int:
        raise NotImplementedError

    def initial(self, x):
        raise NotImplementedError

    def propose(self, P, l, state, rng):
        raise NotImplementedError

    def log_propose(self, P, l, state, move):
        raise NotImplementedError

    def advance(self, l, state, move):
        raise NotImplementedError

    def log_increment(self, P, l, state, move, new_state):
        raise NotImplementedError


def _lnorm(lw):
    z = ad.logsumexp(lw)
    return [w - z for w in lw]


def _replay(prog, P, x, K, moves, ancestors):
    """States, normalized log weights and proposal log densities of a full trace."""
    L = len(moves)
    s0 = prog.initial(x)
    states = [[s0] * K]
    logW = [[-math.log(K)] * K]
    lprop = []
    for l in range(L):
        st, inc, lp = [], [], []
        for k in range(K):
            prev = states[l][ancestors[l][k]]
            m = moves[l][k]
            lp.append(prog.log_propose(P, l, prev, m))
            new = prog.advance(l, prev, m)
            st.append(new)
            inc.append(prog.log_increment(P, l, prev, m, new))
        states.append(st)
        logW.append(_lnorm(inc))
        lprop.append(lp)
    return states, logW, lprop


def _path(ancestors, j, L):
    b = [None] * (L + 1)
    b[L] = j
    for l in range(L, 0, -1):
        b[l - 1] = ancestors[l - 1][b[l]]
    return b


def _categorical(logW, rng):
    return rng.categorical([ad.value_of(w) for w in logW])


def move_smc_strategy(prog: MoveProgram, x, K: int, name="move-smc") -> Strategy:
    """Meta-strategy over move sequences leading to ``x``."""
    L = prog.levels(x)
    if L == 0:
        return point_mass((), name=f"{name}(empty)")

    def sample_joint(P, rng):
        s0 = prog.initial(x)
        states, logW = [s0] * K, [-math.log(K)] * K
        moves, ancestors = [], []
        for l in range(L):
            st, inc, mv, an = [], [], [], []
            for k in range(K):
                a = _categorical(logW, rng)
                prev = states[a]
                m = prog.propose(P, l, prev, rng)
                new = prog.advance(l, prev, m)
                an.append(a)
                mv.append(m)
                st.append(new)
                inc.append(prog.log_increment(P, l, prev, m, new))
            states, logW = st, _lnorm(inc)
            moves.append(tuple(mv))
            ancestors.append(tuple(an))
        j = _categorical(logW, rng)
        moves, ancestors = tuple(moves), tuple(ancestors)
        b = _path(ancestors, j, L)
        seq = tuple(moves[l][b[l + 1]] for l in range(L))
        return (moves, ancestors, j), seq

    def log_joint(P, u, seq):
        moves, ancestors, j = u
        b = _path(ancestors, j, L)
        if tuple(moves[l][b[l + 1]] for l in range(L)) != tuple(seq):
            return -math.inf
        _, logW, lprop = _replay(prog, P, x, K, moves, ancestors)
        out = logW[L][j]
        for l in range(L):
            for k in range(K):
                out = out + logW[l][ancestors[l][k]] + lprop[l][k]
        return out

    def meta(seq):
        seq = tuple(seq)

        def sample(P, rng):
            b = [rng.uniform_int(K) for _ in range(L + 1)]
            s0 = prog.initial(x)
            states, logW = [s0] * K, [-math.log(K)] * K
            moves, ancestors = [], []
            for l in range(L):
                st, inc, mv, an = [], [], [], []
                for k in range(K):
                    if k == b[l + 1]:
                        a, m = b[l], seq[l]
                    else:
                        a = _categorical(logW, rng)
                        m = prog.propose(P, l, states[a], rng)
                    prev = states[a]
                    new = prog.advance(l, prev, m)
                    an.append(a)
                    mv.append(m)
                    st.append(new)
                    inc.append(prog.log_increment(P, l, prev, m, new))
                states, logW = st, _lnorm(inc)
                moves.append(tuple(mv))
                ancestors.append(tuple(an))
            return tuple(moves), tuple(ancestors), b[L]

        def log_density(P, u):
            moves, ancestors, j = u
            b = _path(ancestors, j, L)
            if tuple(moves[l][b[l + 1]] for l in range(L)) != seq:
                return -math.inf
            _, logW, lprop = _replay(prog, P, x, K, moves, ancestors)
            out = -(L + 1) * math.log(K)
            for l in range(L):
                for k in range(K):
                    if k != b[l + 1]:
                        out = out + logW[l][ancestors[l][k]] + lprop[l][k]
            return out

        return Terminal(sample, log_density, kind=Kind.TWO_SIDED, name=f"conditional-{name}")

    return Compound(sample_joint, log_joint, meta, kind=Kind.TWO_SIDED, name=f"{name}(K={K})")

