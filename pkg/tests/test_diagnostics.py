import math

import numpy as np
import pytest
from scipy import stats

from ravi.core import importance
from ravi.diagnostics import (CHECKS, bias_recursion, chi2, chi_square_gof, empirical_stats,
                              enumerate_law, finite_diff_gradient, kl, run_suite, strategy_zoo,
                              tv_distance, variance_recursion)
from ravi.diagnostics.suite import check_entry, mh_rows
from ravi.experiments.gradients import (compound_problem, exact_mean_gradient,
                                        exact_mean_objective, terminal_problem)
from ravi.models import DiscreteTarget
from ravi.strategies import categorical, sir, uniform

PI = DiscreteTarget([0, 1], weights=[0.75, 0.25])


# -- enumeration ----------------------------------------------------------------

def test_enumerate_fair_coin():
    law = enumerate_law(lambda rng: 1 + 2 * rng.bernoulli(0.5))
    assert law.as_dict() == {1: 0.5, 3: 0.5}
    assert law.total() == 1.0


def test_enumerate_sir_weight_law():
    t = DiscreteTarget([0, 1], weights=[2.0, 6.0])
    law = enumerate_law(lambda rng: math.exp(importance(t, sir(t, uniform([0, 1]), 2), rng)
                                             .log_weight))
    d = law.as_dict()
    assert d.keys() == {4.0, 8.0, 12.0}
    assert [d[k] for k in (4.0, 8.0, 12.0)] == pytest.approx([0.25, 0.5, 0.25])


def test_enumerate_rejects_continuous_draws():
    with pytest.raises(Exception):
        enumerate_law(lambda rng: rng.normal())


def test_enumerate_branch_limit():
    with pytest.raises(RuntimeError):
        enumerate_law(lambda rng: [rng.uniform_int(10) for _ in range(4)], max_branches=100)


# -- sampled statistics -------------------------------------------------------------

def test_empirical_constant_sampler():
    s = empirical_stats(lambda rng: 2.5, 100)
    assert s.mean == 2.5 and s.variance == 0.0 and s.stderr == 0.0


def test_empirical_fair_coin():
    s = empirical_stats(lambda rng: float(rng.bernoulli(0.5)), 100_000, root_seed=11, threads=4)
    assert abs(s.mean - 0.5) <= 4 * 0.5 / math.sqrt(s.n)
    assert s.variance == pytest.approx(0.25, abs=1e-3)


def test_empirical_is_thread_independent():
    f = lambda rng: rng.normal()
    a = empirical_stats(f, 3000, root_seed=5, threads=1, chunk=250)
    b = empirical_stats(f, 3000, root_seed=5, threads=3, chunk=250)
    assert a.mean == pytest.approx(b.mean, abs=1e-15) and a.variance == pytest.approx(b.variance)


def test_empirical_matches_enumeration():
    t = DiscreteTarget([0, 1, 2], weights=[1.0, 4.0, 2.0])
    s = sir(t, uniform([0, 1, 2]), 2)
    f = lambda rng: math.exp(importance(t, s, rng).log_weight)
    law = enumerate_law(f)
    emp = empirical_stats(f, 20000, root_seed=2)
    assert emp.within(law.mean(), 4)
    assert emp.variance == pytest.approx(law.variance(), rel=0.05)


def test_small_helpers():
    assert tv_distance([0.5, 0.5], [1.0, 0.0]) == 0.5
    _, p = chi_square_gof([250, 250, 500], [0.25, 0.25, 0.5])
    assert p == pytest.approx(1.0)


# -- recursions -------------------------------------------------------------------

def test_divergence_helpers():
    p, q = [0.75, 0.25], [0.5, 0.5]
    assert chi2(p, q) == pytest.approx(0.25)
    assert chi2(q, p) == pytest.approx(1 / 3)
    assert kl(p, q) == pytest.approx(stats.entropy(p, q))
    assert chi2([0.5, 0.5], [1.0, 0.0]) == math.inf


def test_variance_recursion_base_case():
    rep = variance_recursion(PI, uniform([0, 1]))
    assert rep.total("var_imp") == pytest.approx(0.25, abs=1e-12)
    assert rep.total("var_hme") == pytest.approx(1 / 3, abs=1e-12)
    assert rep.agrees("var_imp") and rep.agrees("var_hme")


def test_bias_recursion_base_case():
    rep = bias_recursion(PI, None, uniform([0, 1]))
    p, q = [0.75, 0.25], [0.5, 0.5]
    assert rep.total("bias_lower") == pytest.approx(-stats.entropy(q, p), abs=1e-12)
    assert rep.total("bias_upper") == pytest.approx(stats.entropy(p, q), abs=1e-12)
    assert rep.agrees("bias_lower") and rep.agrees("bias_upper")


def test_recursion_terms_sum_to_total():
    e = next(z for z in strategy_zoo() if z.name == "compound")
    rep = variance_recursion(e.target, e.strategy)
    terms = rep.terms("var_imp")
    assert len(terms) == 2
    assert math.fsum(r.exact_value for r in terms) == pytest.approx(rep.total("var_imp"))


def test_recursion_csv_columns(tmp_path):
    rep = variance_recursion(PI, categorical([0.6, 0.4], atoms=[0, 1]))
    text = rep.to_csv(tmp_path / "r.csv")
    assert text.splitlines()[0] == "level,term_name,exact_value,empirical_value,std_err"
    assert (tmp_path / "r.csv").read_text() == text


# -- finite differences -------------------------------------------------------------

def test_finite_diff_exact_on_quadratic():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    b = np.array([0.3, -1.0])
    f = lambda th: 0.5 * th @ A @ th + b @ th
    th = np.array([0.7, -0.2])
    assert finite_diff_gradient(f, th, h=1e-3).grad == pytest.approx(A @ th + b, abs=1e-10)


def test_finite_diff_common_random_numbers():
    f = lambda th, rng: th[0] ** 2 + rng.normal()
    fd = finite_diff_gradient(f, [1.5], reps=50)
    assert fd.grad[0] == pytest.approx(3.0, abs=1e-8)
    assert fd.stderr[0] < 1e-8


@pytest.mark.parametrize("make", [terminal_problem, compound_problem])
@pytest.mark.parametrize("bound", ["elbo", "eubo"])
def test_finite_diff_matches_enumerated_gradient(make, bound):
    prob = make()
    theta = prob.store.values.copy()
    fd = finite_diff_gradient(lambda th: exact_mean_objective(prob, bound, th), theta)
    assert fd.grad == pytest.approx(exact_mean_gradient(prob, bound), abs=1e-6)


# -- suite ------------------------------------------------------------------------

def test_check_entry_rows():
    e = strategy_zoo()[2]
    rows, rep = check_entry(e)
    assert [r.check for r in rows] == list(CHECKS)
    assert all(r.passed for r in rows)
    assert rep.agrees("var_imp")


def test_mh_rows():
    rows = mh_rows(0, steps=0)
    assert len(rows) == 1 and rows[0].passed and rows[0].observed < 1e-8


def test_suite_counts_and_fault():
    rows, reports = run_suite(mh=False)
    assert len(rows) == len(strategy_zoo()) * len(CHECKS) == len(reports) * 6
    assert all(r.passed for r in rows)
    bad, _ = run_suite(fault_inject=True, mh=False)
    failed = {r.strategy for r in bad if not r.passed}
    assert failed == {"sir(N=2)"}
