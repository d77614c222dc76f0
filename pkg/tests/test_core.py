import math

import numpy as np
import pytest

from ravi.core import (BoundViolation, JointModel, MHProposal, ParamStore, RandomSource,
                       StrategyError, SupportError, TooManyRejections, elbo_grad, elbo_reparam,
                       eubo_grad, hme, importance, mh_init, mh_step, rejection_sample,
                       symmetric_kl_bound)
from ravi.core import autodiff as ad
from ravi.core.mh import MHState
from ravi.core.strategy import Kind
from ravi.diagnostics import enumerate_law, mh_stationarity_check
from ravi.diagnostics.stats import EmpiricalStats, empirical_stats, joint_se
from ravi.experiments.gradients import gaussian_model, reparam_compound_problem
from ravi.experiments.kl_bound import binary_latent_model, posterior_strategy
from ravi.models import DiscreteTarget
from ravi.strategies import (categorical, categorical_logits, compound, gaussian_param, point_mass,
                             sir, uniform)

T26 = DiscreteTarget([0, 1], weights=[2.0, 6.0])


def imp_law(target, s):
    return enumerate_law(lambda rng: math.exp(importance(target, s, rng).log_weight))


# -- random source --------------------------------------------------------------

def test_streams_are_reproducible_and_distinct():
    a = RandomSource.stream(7, 3).normal(size=5)
    b = RandomSource.stream(7, 3).normal(size=5)
    c = RandomSource.stream(7, 4).normal(size=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_categorical_never_picks_zero_weight():
    rng = RandomSource(0)
    draws = {rng.categorical([-math.inf, 0.0, -math.inf]) for _ in range(200)}
    assert draws == {1}


def test_categorical_frequencies():
    rng = RandomSource(1)
    counts = np.bincount([rng.categorical(np.log([0.2, 0.3, 0.5])) for _ in range(20000)],
                         minlength=3)
    assert np.allclose(counts / 20000, [0.2, 0.3, 0.5], atol=0.015)


def test_categorical_rejects_all_zero():
    with pytest.raises(ValueError):
        RandomSource(0).categorical([-math.inf, -math.inf])


# -- importance ---------------------------------------------------------------

def test_importance_uniform_terminal_is_unbiased():
    assert imp_law(T26, uniform([0, 1])).mean() == pytest.approx(8.0, rel=1e-14)


def test_importance_exact_proposal_has_zero_variance():
    law = enumerate_law(lambda rng: importance(T26, categorical([0.25, 0.75]), rng).log_weight)
    assert all(v == pytest.approx(math.log(8.0), abs=1e-14) for v in law.values)


def test_sir_two_particle_weight_law():
    # [DERIVED] four equally likely particle pairs; weights (2/.5 + 6/.5) / 2 etc.
    law = imp_law(T26, sir(T26, uniform([0, 1]), 2)).as_dict()
    assert law == pytest.approx({4.0: 0.25, 8.0: 0.5, 12.0: 0.25})


def test_importance_support_violation_raises():
    t = DiscreteTarget([0, 1, 2], weights=[1.0, 1.0, 1.0])
    s = categorical([0.5, 0.5, 0.0])
    with pytest.raises(SupportError):
        hme(t, 2, s, RandomSource(0))
    bad = categorical([0.5, 0.5], atoms=[0, 5])
    with pytest.raises(SupportError):
        for k in range(50):
            importance(t, bad, RandomSource(k))


def test_non_strict_mode_returns_sentinel():
    t = DiscreteTarget([0, 1], weights=[1.0, 1.0])
    bad = categorical([0.5, 0.5], atoms=[0, 5])
    lws = {importance(t, bad, RandomSource(k), strict=False).log_weight for k in range(40)}
    assert -math.inf in lws


def test_declared_kind_is_enforced():
    s = uniform([0, 1], kind=Kind.WIDE)
    with pytest.raises(StrategyError):
        hme(T26, 0, s, RandomSource(0))
    n = uniform([0, 1], kind=Kind.NARROW)
    with pytest.raises(StrategyError):
        importance(T26, n, RandomSource(0))


def test_depth_counts_nested_calls():
    q = uniform([0, 1])
    assert importance(T26, q, RandomSource(0)).depth == 1
    assert importance(T26, sir(T26, q, 2), RandomSource(0)).depth == 2


# -- hme ------------------------------------------------------------------------

def test_hme_terminal_direct_formula():
    assert hme(T26, 1, uniform([0, 1]), RandomSource(0)) == pytest.approx(math.log(0.5 / 6))


def test_hme_exact_proposal_gives_inverse_Z():
    s = categorical([0.25, 0.75])
    for x in (0, 1):
        assert hme(T26, x, s, RandomSource(0)) == pytest.approx(-math.log(8.0))


def test_hme_sir_is_unbiased_for_inverse_Z():
    s = sir(T26, uniform([0, 1]), 2)
    pi = T26.probabilities()
    m = sum(p * enumerate_law(lambda rng: math.exp(hme(T26, x, s, rng))).mean()
            for x, p in zip([0, 1], pi))
    assert m == pytest.approx(1 / 8, rel=1e-12)


def test_hme_at_zero_density_point_raises():
    t = DiscreteTarget([0, 1], weights=[1.0, 0.0])
    with pytest.raises(SupportError):
        hme(t, 1, uniform([0, 1]), RandomSource(0))


def test_trivial_auxiliary_compound_matches_terminal():
    q = categorical([0.3, 0.7])
    c = compound(lambda P, rng: (None, q.sample(P, rng)),
                 lambda P, r, x: q.log_density(P, x), lambda x: point_mass(None))
    assert imp_law(T26, c).as_dict() == imp_law(T26, q).as_dict()


# -- elbo / eubo ----------------------------------------------------------------

def _binary(theta_name=None):
    lik = np.array([[0.8, 0.2], [0.3, 0.7]])

    def log_joint(P, x, y):
        if theta_name is None:
            lp = math.log(0.4 if x == 0 else 0.6)
        else:
            t = P[theta_name]
            lp = ad.log_sigmoid(-t) if x == 0 else ad.log_sigmoid(t)
        return lp + math.log(lik[x, y])

    def sample(P, rng):
        p1 = 0.6 if theta_name is None else 1 / (1 + math.exp(-ad.value_of(P[theta_name])))
        x = int(rng.bernoulli(p1))
        return x, int(rng.bernoulli(lik[x, 1]))

    return JointModel(log_joint, sample, latents=[0, 1], observations=[0, 1])


def _kl(p, q):
    p, q = np.asarray(p), np.asarray(q)
    return float(np.sum(p * np.log(p / q)))


def test_elbo_with_exact_posterior_is_log_evidence():
    m = _binary()
    post = m.posterior(1)
    s = categorical(post)
    for k in range(20):
        est = elbo_grad(m, 1, s, RandomSource(k), ParamStore())
        assert est.objective == pytest.approx(m.log_marginal(1))


def test_elbo_mean_is_evidence_minus_kl():
    m = _binary()
    q = [0.5, 0.5]
    law = enumerate_law(lambda rng: elbo_grad(m, 1, categorical(q), rng, ParamStore()).objective)
    assert law.mean() == pytest.approx(m.log_marginal(1) - _kl(q, m.posterior(1)), abs=1e-13)
    st = empirical_stats(lambda rng: elbo_grad(m, 1, categorical(q), rng, ParamStore()).objective,
                         20000, root_seed=3)
    assert st.within(law.mean(), 3.0)


def test_eubo_mean_is_evidence_plus_kl():
    m = _binary()
    q = [0.5, 0.5]
    post = m.posterior(1)
    mean = sum(p * eubo_grad(m, 1, x, categorical(q), RandomSource(0), ParamStore()).objective
               for x, p in zip([0, 1], post))
    assert mean == pytest.approx(m.log_marginal(1) + _kl(post, q), abs=1e-13)


def test_eubo_score_identity():
    # E_{(x, y) ~ p}[score_g * 1{y = 1}] equals d/dtheta P(y = 1), by enumeration
    m = _binary("theta")
    store = ParamStore({"theta": 0.3, "l0": 0.0, "l1": 0.0})
    s = categorical_logits(["l0", "l1"], params=store)

    def p_y1(t):
        p1 = 1 / (1 + math.exp(-t))
        return (1 - p1) * 0.2 + p1 * 0.7

    lhs = 0.0
    for x in (0, 1):
        for y in (0, 1):
            pxy = math.exp(m.log_joint({"theta": 0.3}, x, y))
            g = eubo_grad(m, y, x, s, RandomSource(0), store).score_g
            lhs += pxy * g[0] * (y == 1)
    h = 1e-6
    fd = (p_y1(0.3 + h) - p_y1(0.3 - h)) / (2 * h)
    assert lhs == pytest.approx(fd, rel=1e-6)


def test_reparam_at_posterior_has_zero_mean_gradient():
    m = gaussian_model(1.0, 0.5)
    y = 0.7
    var = 1 / (1 + 1 / 0.25)
    mean = var * y / 0.25
    store = ParamStore({"mu": mean, "log_sigma": 0.5 * math.log(var)})
    s = gaussian_param("mu", "log_sigma", store)
    G = np.array([elbo_reparam(m, y, s, RandomSource.stream(2, k), store)[1] for k in range(4000)])
    se = G.std(0, ddof=1) / math.sqrt(len(G))
    assert np.all(np.abs(G.mean(0)) <= 3 * se + 1e-12)


def test_reparam_requires_pushforward():
    m = _binary()
    with pytest.raises(StrategyError):
        elbo_reparam(m, 1, categorical([0.5, 0.5]), RandomSource(0), ParamStore())


def test_score_and_reparam_gradients_agree_on_gaussian_compound():
    pr = reparam_compound_problem()
    reps = 20000
    R = np.array([elbo_reparam(pr.model, pr.y, pr.strategy, RandomSource.stream(4, k), pr.store)[1]
                  for k in range(reps)])
    S = np.array([elbo_grad(pr.model, pr.y, pr.strategy, RandomSource.stream(5, k), pr.store).grad
                  for k in range(reps)])
    se = np.sqrt(R.var(0, ddof=1) / reps + S.var(0, ddof=1) / reps)
    assert np.all(np.abs(R.mean(0) - S.mean(0)) <= 3 * se)


# -- MH -------------------------------------------------------------------------

def _textbook_mh():
    w = np.array([1.0, 3.0, 4.0])
    model = lambda r, x: math.log(w[x])
    S = lambda x: point_mass(None)
    prop = MHProposal(lambda x, rng: (None, (x + 1 + rng.uniform_int(2)) % 3),
                      lambda x, s, xn: math.log(0.5) if xn != x else -math.inf)
    M = lambda x, xn: point_mass(None)
    return model, prop, S, M, w / w.sum()


def test_mh_reduces_to_textbook_ratio():
    model, prop, S, M, pi = _textbook_mh()
    res = mh_stationarity_check(model, prop, S, M, [0, 1, 2])
    assert res.residual < 1e-10
    # acceptance 0 -> 1 is min(1, 3/1) = 1; 2 -> 0 is 1/4
    P = res.P
    idx = {st.x: i for i, st in enumerate(res.states)}
    assert P[idx[0], idx[1]] == pytest.approx(0.5)
    assert P[idx[2], idx[0]] == pytest.approx(0.5 * 0.25)
    assert isinstance(res.states[0], MHState)


def test_mh_wrong_ratio_is_detected():
    model, prop, S, M, _ = _textbook_mh()
    bad = MHProposal(prop.sample, lambda x, s, xn: prop.log_density(x, s, xn) + (1.0 if x == 0 else 0))
    assert mh_stationarity_check(model, bad, S, M, [0, 1, 2]).residual > 0.01


def test_mh_step_returns_state_and_flag():
    model, prop, S, M, _ = _textbook_mh()
    st = mh_init(model, S, 0, RandomSource(0))
    nxt, acc = mh_step(model, prop, S, M, st, RandomSource(0))
    assert acc in (True, False) and nxt.x in (0, 1, 2)


# -- rejection sampling ---------------------------------------------------------

def test_rejection_acceptance_rate_two_thirds():
    rng = RandomSource(11)
    tries = sum(rejection_sample(T26, uniform([0, 1]), math.log(12), rng, return_tries=True)[1]
                for _ in range(20000))
    rate = 20000 / tries
    assert abs(rate - 2 / 3) <= 4 * math.sqrt((2 / 3) * (1 / 3) / tries)


def test_rejection_exact_proposal_always_accepts():
    rng = RandomSource(0)
    assert all(rejection_sample(T26, categorical([0.25, 0.75]), math.log(8), rng,
                                return_tries=True)[1] == 1 for _ in range(100))


def test_rejection_errors():
    with pytest.raises(BoundViolation):
        for k in range(50):
            rejection_sample(T26, uniform([0, 1]), math.log(5), RandomSource(k))
    with pytest.raises(TooManyRejections):
        rejection_sample(T26, uniform([0, 1]), math.log(1e9), RandomSource(0), max_tries=3)


# -- symmetric KL ---------------------------------------------------------------

def test_symmetric_kl_of_identical_models_is_zero():
    p = binary_latent_model([0.4, 0.6], [[0.5, 0.5], [0.1, 0.9]])
    S = posterior_strategy(p)
    vals = [symmetric_kl_bound(p, S, p, S, RandomSource(k)) for k in range(50)]
    assert np.allclose(vals, 0.0, atol=1e-12)


def test_joint_se_helper():
    a = EmpiricalStats(0.0, 1.0, 0.3, 10)
    b = EmpiricalStats(0.0, 1.0, 0.4, 10)
    assert joint_se(a, b) == pytest.approx(0.5)
