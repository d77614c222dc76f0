"""Greedy-stochastic agglomerative clustering as a strategy over partitions."""
from __future__ import annotations

import math
from functools import lru_cache

from ..core import autodiff as ad
from ..core.strategy import Compound, Kind
from ..models.partitions import Partition
from .basic import _log_select, _select
from .particles import MoveProgram, move_smc_strategy


class _Moves:
    """Cached merge options of a model: all block pairs plus stop (last entry)."""

    def __init__(self, model):
        self.model = model
        self.options = lru_cache(maxsize=200_000)(self._options)

    def _options(self, p: Partition):
        pairs = [(p[i], p[j]) for i in range(len(p)) for j in range(i + 1, len(p))]
        deltas = [self.model.merge_delta(a, b) for a, b in pairs]
        lse_all = ad.logsumexp(deltas + [0.0])
        return pairs, deltas, lse_all


class AgglomProgram(MoveProgram):
    """Merge sequences from singletons to a fixed partition ``x``.

    Proposals are restricted to merges inside a block of ``x``, weighted as in
    the forward process; the increment is the probability mass the forward
    process gives to the allowed merges.
    """

    def __init__(self, moves: _Moves, x: Partition):
        self.moves = moves
        self.x = x
        self.label = x.labels()

    def levels(self, x):
        return self.x.n - len(self.x)

    def initial(self, x):
        return Partition.singletons(self.x.n)

    def _ok(self, state):
        pairs, deltas, lse_all = self.moves.options(state)
        ok = [(m, d) for m, d in zip(pairs, deltas) if self.label[m[0][0]] == self.label[m[1][0]]]
        return ok, lse_all

    def propose(self, P, l, state, rng):
        ok, _ = self._ok(state)
        return ok[_select([d for _, d in ok], rng)][0]

    def log_propose(self, P, l, state, move):
        ok, _ = self._ok(state)
        moves = [m for m, _ in ok]
        if move not in moves:
            return -math.inf
        return _log_select([d for _, d in ok], moves.index(move))

    def advance(self, l, state, move):
        return state.merge(*move)

    def log_increment(self, P, l, state, move, new_state):
        ok, lse_all = self._ok(state)
        return ad.logsumexp([d for _, d in ok]) - lse_all


def agglom(data, K: int, model) -> Compound:
    """Stochastic agglomerative clustering of ``data`` under a partition model.

    Starting from singletons, each step either merges two blocks or stops,
    with probability proportional to the model score of the resulting
    partition (stopping keeps the current one). The auxiliary variable is the
    merge sequence. The meta-strategy is ``K``-particle SMC over merge orders
    restricted to the observed partition, so larger ``K`` tightens the
    estimator at a cost linear in ``K``.

    ``model`` must expose ``n``, ``log_score(partition)`` and
    ``merge_delta(a, b)`` (see :class:`ravi.models.dpmm.DPMMModel`).
    """
    if len(data) != model.n:
        raise ValueError(f"model is bound to {model.n} observations, got {len(data)}")
    if K < 1:
        raise ValueError("agglom needs K >= 1")
    moves = _Moves(model)
    n = model.n

    def sample_joint(P, rng):
        state = Partition.singletons(n)
        seq = []
        while True:
            pairs, deltas, _ = moves.options(state)
            k = rng.categorical(deltas + [0.0])
            if k == len(pairs):
                break
            seq.append(pairs[k])
            state = state.merge(*pairs[k])
        return tuple(seq), state

    def log_joint(P, r, x):
        state = Partition.singletons(n)
        out = 0.0
        for m in r:
            pairs, deltas, lse_all = moves.options(state)
            if m not in pairs:
                return -math.inf
            out += deltas[pairs.index(m)] - lse_all
            state = state.merge(*m)
        if state != Partition(x):
            return -math.inf
        return out - moves.options(state)[2]

    def meta(x):
        x = Partition(x).validate(n)
        return move_smc_strategy(AgglomProgram(moves, x), x, K, name="agglom-order")

    return Compound(sample_joint, log_joint, meta, kind=Kind.TWO_SIDED, name=f"agglom(K={K})")
