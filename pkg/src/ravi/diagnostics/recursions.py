"""Variance and bias of the recursive estimators, level by level.

Each level of a strategy tree contributes one divergence between the
proposal marginal and its target, weighted by the levels above. Summing the
contributions gives the relative variance (or bias) of the estimator, which
is then compared with the directly enumerated law of the estimator itself.
All sub-quantities are computed by exact enumeration of the samplers.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..core.estimators import _params_for, hme, importance
from ..core.strategy import Compound, Strategy
from ..core.target import JointModel, UnnormalizedTarget
from ..strategies.families import _key
from .enumerate import enumerate_law

CSV_COLUMNS = ("level", "term_name", "exact_value", "empirical_value", "std_err")


@dataclass
class RecursionRow:
    level: int
    term_name: str
    exact_value: float
    empirical_value: float = math.nan
    std_err: float = math.nan


@dataclass
class RecursionReport:
    """Per-level terms followed by one ``total`` row per estimator."""

    rows: list = field(default_factory=list)

    def terms(self, prefix: str) -> list:
        return [r for r in self.rows if r.term_name.startswith(prefix + ".")
                and not r.term_name.endswith(".total")]

    def total_row(self, prefix: str) -> RecursionRow:
        for r in self.rows:
            if r.term_name == f"{prefix}.total":
                return r
        raise KeyError(prefix)

    def total(self, prefix: str) -> float:
        return self.total_row(prefix).exact_value

    def empirical(self, prefix: str) -> float:
        return self.total_row(prefix).empirical_value

    def rel_error(self, prefix: str) -> float:
        row = self.total_row(prefix)
        scale = max(abs(row.empirical_value), 1e-300)
        return abs(row.exact_value - row.empirical_value) / scale

    def agrees(self, prefix: str, rtol: float = 1e-8, atol: float = 1e-13) -> bool:
        row = self.total_row(prefix)
        return abs(row.exact_value - row.empirical_value) <= rtol * abs(row.empirical_value) + atol

    def as_records(self) -> list[dict]:
        return [{c: getattr(r, c) for c in CSV_COLUMNS} for r in self.rows]

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.level, r.term_name] + [repr(float(v)) for v in
                                                 (r.exact_value, r.empirical_value, r.std_err)])
        text = buf.getvalue()
        if fh is not None:
            if isinstance(fh, (str, bytes)) or hasattr(fh, "__fspath__"):
                with open(fh, "w", encoding="utf-8", newline="") as f:
                    f.write(text)
            else:
                fh.write(text)
        return text


# ---------------------------------------------------------------------------
# exact laws of proposals
# ---------------------------------------------------------------------------
def _group(outcomes):
    """``[(value, p)] -> [(key, value, total p)]`` keeping first-seen order."""
    acc, rep, order = {}, {}, []
    for v, p in outcomes:
        k = _key(v)
        if k not in acc:
            acc[k] = 0.0
            rep[k] = v
            order.append(k)
        acc[k] += p
    return [(k, rep[k], acc[k]) for k in order]


class _Node:
    """Marginal of ``s.q`` and, for compounds, the conditional law of ``r`` given ``x``."""

    def __init__(self, s: Strategy, P):
        self.s, self.P = s, P
        if isinstance(s, Compound):
            law = enumerate_law(lambda rng: s.sample_joint(P, rng))
            joint = _group([((r, x), p) for (r, x), p in law])
            self.marg = {}
            self.cond = {}
            for _, (r, x), p in joint:
                kx = _key(x)
                if kx not in self.marg:
                    self.marg[kx] = [x, 0.0]
                    self.cond[kx] = []
                self.marg[kx][1] += p
                self.cond[kx].append((r, p))
        else:
            law = enumerate_law(lambda rng: s.sample(P, rng))
            self.marg = {k: [v, math.exp(s.log_density(P, v))] for k, v, _ in _group(law)}
            self.cond = None

    def q(self, x) -> float:
        k = _key(x)
        if k in self.marg:
            return self.marg[k][1]
        if self.cond is None:
            return math.exp(self.s.log_density(self.P, x))
        return 0.0

    def support(self):
        return [(v, p) for v, p in self.marg.values() if p > 0]

    def conditional(self, x):
        """Normalized law of ``r`` given ``x`` as ``[(key, r, prob)]``."""
        k = _key(x)
        qx = self.marg[k][1]
        return [(kk, r, p / qx) for kk, r, p in _group(self.cond[k])]

    def meta(self, x):
        return self.s.meta(x)


def _params_of(s, P):
    return P if P is not None else s.default_params()


def _add_levels(acc, sub, w):
    for i, v in enumerate(sub):
        if i >= len(acc):
            acc.append(0.0)
        acc[i] += w * v


def _var_levels(law, s, P, mode):
    """Per-level contributions to the relative variance; ``law`` is ``[(key, x, prob)]``."""
    node = _Node(s, _params_of(s, P))
    pi = {k: (x, p) for k, x, p in law if p > 0}
    if mode == "imp":
        c0 = math.fsum(p * p / node.q(x) if node.q(x) > 0 else math.inf
                       for x, p in pi.values()) - 1.0
    else:
        c0 = math.fsum(q * q / pi[_key(x)][1] if _key(x) in pi else math.inf
                       for x, q in node.support()) - 1.0
    if node.cond is None:
        return [c0]
    deeper = []
    if mode == "imp":
        for x, q in node.support():
            p = pi.get(_key(x), (None, 0.0))[1]
            if p > 0:
                _add_levels(deeper, _var_levels(node.conditional(x), node.meta(x), P, "hme"),
                            p * p / q)
    else:
        for x, p in pi.values():
            q = node.q(x)
            if q > 0:
                _add_levels(deeper, _var_levels(node.conditional(x), node.meta(x), P, "imp"),
                            q * q / p)
    return [c0] + deeper


def _kl(a, b):
    """``sum a log(a/b)`` over pairs ``(a_i, b_i)``."""
    out = []
    for ai, bi in zip(a, b):
        if ai <= 0:
            continue
        out.append(math.inf if bi <= 0 else ai * (math.log(ai) - math.log(bi)))
    return math.fsum(out)


def _bias_levels(law, s, P, mode):
    """Per-level contributions to the bias of the log estimator (``lower`` or ``upper``)."""
    node = _Node(s, _params_of(s, P))
    pi = {k: (x, p) for k, x, p in law if p > 0}
    if mode == "lower":
        sup = node.support()
        c0 = -_kl([q for _, q in sup], [pi.get(_key(x), (None, 0.0))[1] for x, _ in sup])
    else:
        c0 = _kl([p for _, p in pi.values()], [node.q(x) for x, _ in pi.values()])
    if node.cond is None:
        return [c0]
    deeper = []
    if mode == "lower":
        for x, q in node.support():
            _add_levels(deeper, _bias_levels(node.conditional(x), node.meta(x), P, "upper"), -q)
    else:
        for x, p in pi.values():
            if node.q(x) > 0:
                _add_levels(deeper, _bias_levels(node.conditional(x), node.meta(x), P, "lower"),
                            -p)
    return [c0] + deeper


# ---------------------------------------------------------------------------
# direct laws of the estimators
# ---------------------------------------------------------------------------
def _target_law(target: UnnormalizedTarget):
    if not target.enumerable:
        raise ValueError("target must list its atoms")
    probs = target.probabilities()
    return [(_key(a), a, float(p)) for a, p in zip(target.atoms, probs)]


def _direct_var(target, s, P, log_Z):
    imp = enumerate_law(lambda rng: importance(target, s, rng, params=P).log_weight)
    v_imp = imp.variance(lambda lw: math.exp(lw - log_Z))
    second = 0.0
    for a, p in zip(target.atoms, target.probabilities()):
        if p > 0:
            law = enumerate_law(lambda rng: hme(target, a, s, rng, params=P))
            second += p * law.expectation(lambda lw: math.exp(2 * (lw + log_Z)))
    return float(v_imp), float(second - 1.0)


def _direct_bias(target, s, P, log_Z):
    imp = enumerate_law(lambda rng: importance(target, s, rng, params=P).log_weight)
    lower = imp.mean() - log_Z
    upper = 0.0
    for a, p in zip(target.atoms, target.probabilities()):
        if p > 0:
            upper += p * enumerate_law(lambda rng: -hme(target, a, s, rng, params=P)).mean()
    return float(lower), float(upper - log_Z)


def _as_target(target_or_model, y=None, params=None) -> UnnormalizedTarget:
    if isinstance(target_or_model, JointModel):
        return target_or_model.conditioned(y, params)
    if isinstance(target_or_model, UnnormalizedTarget):
        return target_or_model
    raise TypeError("expected an UnnormalizedTarget or a JointModel with observation y")


def _report(levels_a, levels_b, names, direct, labels):
    rows = []
    for prefix, levels, term, emp in zip(labels, (levels_a, levels_b), names, direct):
        for lvl, v in enumerate(levels):
            rows.append(RecursionRow(lvl, f"{prefix}.{term[lvl % 2]}", float(v)))
        rows.append(RecursionRow(0, f"{prefix}.total", math.fsum(levels), emp, 0.0))
    return RecursionReport(rows)


def variance_recursion(pi, s: Strategy, params=None) -> RecursionReport:
    """Relative variances of ``Z_hat`` (prefix ``var_imp``) and ``Z_check`` (``var_hme``).

    Level-``l`` rows hold the chi-square divergence at that depth of the
    strategy tree weighted by the squared density ratios above it; the
    ``total`` rows compare their sum with the variance of the enumerated
    estimator law.
    """
    target = _as_target(pi)
    P = _params_for(s, params)
    law = _target_law(target)
    log_Z = target.exact_log_Z()
    imp = _var_levels(law, s, P, "imp")
    chk = _var_levels(law, s, P, "hme")
    direct = _direct_var(target, s, P, log_Z)
    return _report(imp, chk, (("chi2(pi||q)", "chi2(q||pi)"), ("chi2(q||pi)", "chi2(pi||q)")),
                   direct, ("var_imp", "var_hme"))


def bias_recursion(model, y, s: Strategy, params=None) -> RecursionReport:
    """Biases of ``log Z_hat`` (prefix ``bias_lower``) and ``log Z_check`` (``bias_upper``).

    ``model`` is a :class:`JointModel` conditioned on ``y`` or an
    :class:`UnnormalizedTarget` (then ``y`` is ignored). Level rows carry the
    signed, weighted KL divergences whose sum is the bias.
    """
    target = _as_target(model, y, params)
    P = _params_for(s, params)
    law = _target_law(target)
    log_Z = target.exact_log_Z()
    lower = _bias_levels(law, s, P, "lower")
    upper = _bias_levels(law, s, P, "upper")
    direct = _direct_bias(target, s, P, log_Z)
    return _report(lower, upper, (("-kl(q||pi)", "-kl(pi||q)"), ("kl(pi||q)", "kl(q||pi)")),
                   direct, ("bias_lower", "bias_upper"))


def chi2(p, q) -> float:
    """``E_q[(p/q)^2] - 1`` for probability vectors."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    m = p > 0
    if np.any(q[m] <= 0):
        return math.inf
    return float(np.sum(p[m] ** 2 / q[m]) - 1.0)


def kl(p, q) -> float:
    return _kl(list(np.asarray(p, float)), list(np.asarray(q, float)))
