"""The oracle suite behind ``ravi diagnose``.

Every zoo strategy gets six exact checks: unbiasedness of the importance
and harmonic-mean estimators, and the variance and bias recursions against
the directly enumerated estimator. A seven-state auxiliary-variable MH
example adds an exact stationarity row and a sampled chain row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.estimators import hme, importance
from ..core.mh import MHProposal, run_chain
from ..core.random import RandomSource
from ..strategies.basic import sir
from ..strategies.families import categorical, uniform
from .checks import mh_stationarity_check
from .enumerate import enumerate_law
from .recursions import RecursionReport, bias_recursion, variance_recursion
from .stats import tv_distance
from .zoo import ZooEntry, strategy_zoo

CHECKS = ("unbiased_imp", "unbiased_hme", "var_imp", "var_hme", "bias_lower", "bias_upper")
COLUMNS = ("strategy", "check", "exact", "observed", "abs_error", "tolerance", "passed")


@dataclass
class CheckRow:
    strategy: str
    check: str
    exact: float
    observed: float
    tolerance: float

    @property
    def abs_error(self) -> float:
        return abs(self.observed - self.exact)

    @property
    def passed(self) -> bool:
        return bool(self.abs_error <= self.tolerance)

    def as_record(self) -> dict:
        return {"strategy": self.strategy, "check": self.check, "exact": repr(float(self.exact)),
                "observed": repr(float(self.observed)), "abs_error": repr(float(self.abs_error)),
                "tolerance": repr(float(self.tolerance)), "passed": int(self.passed)}


def unbiasedness(e: ZooEntry):
    """``(E[Z_hat] / Z, Z E[1 / Z_hat])`` by enumeration; both are 1 for a correct strategy."""
    log_Z = e.target.exact_log_Z()
    law = enumerate_law(lambda rng: importance(e.target, e.strategy, rng).log_weight)
    imp = law.expectation(lambda v: math.exp(v - log_Z))
    inv = 0.0
    for a, p in zip(e.target.atoms, e.target.probabilities()):
        if p == 0.0:
            continue
        la = enumerate_law(lambda rng: hme(e.target, a, e.strategy, rng))
        inv += p * la.expectation(lambda v: math.exp(v + log_Z))
    return imp, inv


def check_entry(e: ZooEntry, rtol: float = 1e-8, unbiased_tol: float = 1e-10):
    """Six check rows plus the variance and bias reports for one zoo entry."""
    imp, inv = unbiasedness(e)
    rows = [CheckRow(e.name, "unbiased_imp", 1.0, imp, unbiased_tol),
            CheckRow(e.name, "unbiased_hme", 1.0, inv, unbiased_tol)]
    vr = variance_recursion(e.target, e.strategy)
    br = bias_recursion(e.target, None, e.strategy)
    for rep, prefix in ((vr, "var_imp"), (vr, "var_hme"), (br, "bias_lower"), (br, "bias_upper")):
        row = rep.total_row(prefix)
        tol = rtol * abs(row.empirical_value) + 1e-13
        rows.append(CheckRow(e.name, prefix, row.exact_value, row.empirical_value, tol))
    return rows, RecursionReport(vr.rows + br.rows)


def mh_example():
    """Three-state target with a two-particle inner strategy and a randomized proposal.

    Returns ``(model, proposal, S, M, atoms, pi)``; the proposal draws a
    selector ``s`` in ``{0..3}`` and moves ``x -> x + 1 + s % 2 (mod 3)``, and
    the meta-strategy ``M`` must recover ``s`` from the move.
    """
    W = np.array([[1.0, 3.0], [2.0, 2.0], [5.0, 1.0]])

    def model(r, x):
        return math.log(W[x, r])

    def S(x):
        return sir(lambda r: model(r, x), uniform([0, 1]), 2)

    def prop_sample(x, rng):
        s = rng.uniform_int(4)
        return s, (x + 1 + s % 2) % 3

    def prop_logd(x, s, xn):
        return math.log(0.25) if xn == (x + 1 + s % 2) % 3 else -math.inf

    def M(x, xn):
        b = (xn - x - 1) % 3
        return categorical([0.3, 0.7], atoms=[b, b + 2])

    pi = W.sum(1) / W.sum()
    return model, MHProposal(prop_sample, prop_logd), S, M, [0, 1, 2], pi


def mh_rows(seed: int, steps: int = 100_000, tol: float = 1e-8, tv_tol: float = 0.02):
    model, prop, S, M, atoms, pi = mh_example()
    res = mh_stationarity_check(model, prop, S, M, atoms)
    rows = [CheckRow("mh(sir N=2)", "mh_stationarity", 0.0, res.residual, tol)]
    if steps > 0:
        xs, _ = run_chain(model, prop, S, M, 0, steps, RandomSource.stream(seed, 0))
        freq = np.bincount(xs, minlength=len(atoms)) / len(xs)
        rows.append(CheckRow("mh(sir N=2)", "mh_chain_tv", 0.0, tv_distance(freq, pi), tv_tol))
    return rows


def run_suite(fault_inject: bool = False, seed: int = 0, rtol: float = 1e-8,
              unbiased_tol: float = 1e-10, mh: bool = True, mh_steps: int = 100_000):
    """All check rows and the concatenated recursion reports (with a ``strategy`` column)."""
    rows, reports = [], []
    for e in strategy_zoo(fault_inject=fault_inject):
        r, rep = check_entry(e, rtol, unbiased_tol)
        rows.extend(r)
        reports.append((e.name, rep))
    if mh:
        rows.extend(mh_rows(seed, mh_steps))
    return rows, reports
