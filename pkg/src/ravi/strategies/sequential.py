"""Sequential combinators over annealing ladders: smc and ais."""
from __future__ import annotations

import math

from ..core import autodiff as ad
from ..core.estimators import (as_target_fn, log_hme_density, log_imp_density, simulate_hme,
                               simulate_importance, trace_log_weight)
from ..core.strategy import Compound, Kind, Strategy, Terminal
from .basic import _log_select, _select
from .families import AnnealingLadder, _same


class _SMCTrace:
    """Mutable particle arrays; frozen into tuples for the auxiliary value."""

    def __init__(self, T, N):
        self.xs = [[None] * N for _ in range(T)]
        self.vS = [None] * N
        self.vK = [[None] * N for _ in range(T - 1)]
        self.vL = [[None] * N for _ in range(T - 1)]
        self.anc = [[None] * N for _ in range(T - 1)]
        self.lw = [[None] * N for _ in range(T)]

    def freeze(self, j):
        tup = lambda rows: tuple(tuple(r) for r in rows)
        return (tup(self.xs), tuple(self.vS), tup(self.vK), tup(self.vL), tup(self.anc), j)

    @classmethod
    def thaw(cls, r):
        xs, vS, vK, vL, anc, j = r
        T, N = len(xs), len(vS)
        tr = cls(T, N)
        tr.xs = [list(row) for row in xs]
        tr.vS = list(vS)
        tr.vK = [list(row) for row in vK]
        tr.vL = [list(row) for row in vL]
        tr.anc = [list(row) for row in anc]
        return tr, j


def smc(ladder: AnnealingLadder, init: Strategy, forward, backward, N: int) -> Compound:
    """``N``-particle SMC whose proposals and backward kernels are strategies.

    ``forward[t-1](x_prev)`` is the strategy proposing step ``t`` (for
    ``t = 1..T-1``) and ``backward[t-1](x_next)`` the backward-kernel strategy
    whose harmonic-mean weight enters the incremental weight. Resampling is
    multinomial at every step. The meta-strategy is conditional SMC.
    Importance on this strategy returns the product over steps of the mean
    incremental weight.
    """
    if not isinstance(ladder, AnnealingLadder):
        ladder = AnnealingLadder(list(ladder))
    T = len(ladder)
    if len(forward) != T - 1 or len(backward) != T - 1:
        raise ValueError(f"need {T - 1} forward and backward strategy families")
    if N < 1:
        raise ValueError("smc needs N >= 1")
    fns = [as_target_fn(t) for t in ladder.targets]

    def init_weight(P, tr, i):
        return trace_log_weight(fns[0], init, P, tr.vS[i], tr.xs[0][i])

    def step_weight(P, tr, t, i):
        xp = tr.xs[t - 1][tr.anc[t - 1][i]]
        xt = tr.xs[t][i]
        lhat = trace_log_weight(fns[t], forward[t - 1](xp), P, tr.vK[t - 1][i], xt)
        L = backward[t - 1](xt)
        vL = tr.vL[t - 1][i]
        lcheck = log_imp_density(L, P, vL, xp) - log_hme_density(L, P, vL, xp) - fns[t - 1](P, xp)
        return lhat + lcheck

    def forward_particle(P, tr, t, i, rng):
        """Resample an ancestor and advance particle ``i`` to step ``t``."""
        a = _select(tr.lw[t - 1], rng)
        tr.anc[t - 1][i] = a
        xp = tr.xs[t - 1][a]
        v, xt = simulate_importance(forward[t - 1](xp), P, rng)
        tr.vK[t - 1][i] = v
        tr.xs[t][i] = xt
        tr.vL[t - 1][i] = simulate_hme(backward[t - 1](xt), xp, P, rng)
        tr.lw[t][i] = step_weight(P, tr, t, i)

    def sample_joint(P, rng):
        tr = _SMCTrace(T, N)
        for i in range(N):
            tr.vS[i], tr.xs[0][i] = simulate_importance(init, P, rng)
            tr.lw[0][i] = init_weight(P, tr, i)
        for t in range(1, T):
            for i in range(N):
                forward_particle(P, tr, t, i, rng)
        j = _select(tr.lw[T - 1], rng)
        return tr.freeze(j), tr.xs[T - 1][j]

    def particle_terms(P, tr, t, i):
        """Forward log density of particle ``i`` at step ``t`` (excluding selection)."""
        if t == 0:
            return log_imp_density(init, P, tr.vS[i], tr.xs[0][i])
        a = tr.anc[t - 1][i]
        xp = tr.xs[t - 1][a]
        xt = tr.xs[t][i]
        return (_log_select(tr.lw[t - 1], a)
                + log_imp_density(forward[t - 1](xp), P, tr.vK[t - 1][i], xt)
                + log_hme_density(backward[t - 1](xt), P, tr.vL[t - 1][i], xp))

    def fill_weights(P, tr):
        for i in range(N):
            tr.lw[0][i] = init_weight(P, tr, i)
        for t in range(1, T):
            for i in range(N):
                tr.lw[t][i] = step_weight(P, tr, t, i)

    def log_joint(P, r, x):
        tr, j = _SMCTrace.thaw(r)
        if not _same(tr.xs[T - 1][j], x):
            return -math.inf
        fill_weights(P, tr)
        out = _log_select(tr.lw[T - 1], j)
        for t in range(T):
            for i in range(N):
                out = out + particle_terms(P, tr, t, i)
        return out

    def pinned_path(tr, j):
        b = [None] * T
        b[T - 1] = j
        for t in range(T - 1, 0, -1):
            b[t - 1] = tr.anc[t - 1][b[t]]
        return b

    def meta(x):
        def sample(P, rng):
            tr = _SMCTrace(T, N)
            j = rng.uniform_int(N)
            b = [None] * T
            b[T - 1] = j
            tr.xs[T - 1][j] = x
            for t in range(T - 1, 0, -1):
                a = rng.uniform_int(N)
                tr.anc[t - 1][b[t]] = a
                b[t - 1] = a
                xt = tr.xs[t][b[t]]
                vL, xp = simulate_importance(backward[t - 1](xt), P, rng)
                tr.vL[t - 1][b[t]] = vL
                tr.xs[t - 1][a] = xp
                tr.vK[t - 1][b[t]] = simulate_hme(forward[t - 1](xp), xt, P, rng)
            tr.vS[b[0]] = simulate_hme(init, tr.xs[0][b[0]], P, rng)
            for i in range(N):
                if i != b[0]:
                    tr.vS[i], tr.xs[0][i] = simulate_importance(init, P, rng)
                tr.lw[0][i] = init_weight(P, tr, i)
            for t in range(1, T):
                for i in range(N):
                    if i == b[t]:
                        tr.lw[t][i] = step_weight(P, tr, t, i)
                    else:
                        forward_particle(P, tr, t, i, rng)
            return tr.freeze(j)

        def log_density(P, r):
            tr, j = _SMCTrace.thaw(r)
            if not _same(tr.xs[T - 1][j], x):
                return -math.inf
            fill_weights(P, tr)
            b = pinned_path(tr, j)
            out = -T * math.log(N)
            for t in range(T - 1, 0, -1):
                xt, xp = tr.xs[t][b[t]], tr.xs[t - 1][b[t - 1]]
                out = out + log_imp_density(backward[t - 1](xt), P, tr.vL[t - 1][b[t]], xp)
                out = out + log_hme_density(forward[t - 1](xp), P, tr.vK[t - 1][b[t]], xt)
            out = out + log_hme_density(init, P, tr.vS[b[0]], tr.xs[0][b[0]])
            for t in range(T):
                for i in range(N):
                    if i != b[t]:
                        out = out + particle_terms(P, tr, t, i)
            return out

        return Terminal(sample, log_density, kind=Kind.TWO_SIDED, name="conditional-smc")

    return Compound(sample_joint, log_joint, meta, kind=init.kind, params=init.params,
                    name=f"smc(T={T},N={N})")


def ais(ladder: AnnealingLadder, init: Strategy, kernels) -> Strategy:
    """Annealed importance sampling as a strategy.

    ``kernels[k]`` moves ``x_{k} -> x_{k+1}`` and must leave ``ladder[k]``
    invariant. The meta-strategy runs the time reversals
    ``x_k ~ pi~_k(x_k) K(x_k -> x_{k+1}) / pi~_k(x_{k+1})`` backwards, using
    ``kernel.reversal`` when supplied and otherwise enumerating the support
    of ``ladder[k]``. Importance on this strategy returns the classical AIS
    weight.
    """
    if not isinstance(ladder, AnnealingLadder):
        ladder = AnnealingLadder(list(ladder))
    T = len(ladder)
    kernels = list(kernels)
    if len(kernels) != T - 1:
        raise ValueError(f"need {T - 1} kernels for {T} rungs")
    if T == 1:
        return init
    fns = [as_target_fn(t) for t in ladder.targets]

    def reversal_log_density(P, k, x_k, x_next):
        return (fns[k](P, x_k) + kernels[k].log_density(x_k, x_next, P) - fns[k](P, x_next))

    def reversal_sample(P, k, x_next, rng):
        K = kernels[k]
        if K.reversal is not None:
            return K.reversal(x_next, rng)
        atoms = ladder[k].atoms
        if atoms is None:
            raise ValueError(f"rung {k} has no finite support and kernel {K.name!r} "
                             "supplies no reversal sampler")
        lw = [ad.value_of(reversal_log_density(P, k, a, x_next)) for a in atoms]
        return atoms[rng.categorical(lw)]

    def sample_joint(P, rng):
        vS, x = simulate_importance(init, P, rng)
        xs = [x]
        for k in range(T - 1):
            xs.append(kernels[k].sample(xs[-1], rng, P))
        return (vS, tuple(xs[:-1])), xs[-1]

    def log_joint(P, r, x):
        vS, xs = r
        path = list(xs) + [x]
        out = log_imp_density(init, P, vS, path[0])
        for k in range(T - 1):
            out = out + kernels[k].log_density(path[k], path[k + 1], P)
        return out

    def meta(x):
        def sample(P, rng):
            path = [None] * T
            path[T - 1] = x
            for k in range(T - 2, -1, -1):
                path[k] = reversal_sample(P, k, path[k + 1], rng)
            vS = simulate_hme(init, path[0], P, rng)
            return vS, tuple(path[:-1])

        def log_density(P, r):
            vS, xs = r
            path = list(xs) + [x]
            out = log_hme_density(init, P, vS, path[0])
            for k in range(T - 1):
                out = out + reversal_log_density(P, k, path[k], path[k + 1])
            return out

        return Terminal(sample, log_density, kind=Kind.TWO_SIDED, name="ais-reversal")

    return Compound(sample_joint, log_joint, meta, kind=init.kind, params=init.params,
                    name=f"ais(T={T})")
