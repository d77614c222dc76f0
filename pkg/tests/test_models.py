import itertools
import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from ravi.core import RandomSource
from ravi.diagnostics import empirical_stats, enumerate_law, kernel_stationarity_check, tv_distance
from ravi.models import (NIG, BigramModel, DiscreteTarget, Partition, TypoLikelihood, bell,
                         bigram_logprob, crp_log_prior, damerau_levenshtein, dpmm_smc_baseline,
                         enumerate_partitions, gaussian_dpmm, gaussian_dpmm_data,
                         gaussian_target, langevin_kernel, langevin_step, load_observations,
                         mala_step, mixture_target, typo_corpus, typo_dpmm)
from ravi.strategies import identity_kernel, independent_kernel, metropolis_kernel

# [DERIVED] nested scipy.integrate.quad over (mean, precision) of the NIG model
NIG_LOGML_3PT = -6.361955069093328
Y3 = np.array([0.1, 1.9, 2.2])


# -- partitions and the CRP -----------------------------------------------------

def test_partition_is_canonical():
    a = Partition([(2, 0), (1,)])
    b = Partition.from_labels(["x", "y", "x"])
    assert a == b and hash(a) == hash(b)
    assert a.labels() == [0, 1, 0]
    assert a.merge((0, 2), (1,)) == Partition([(0, 1, 2)])
    assert Partition.singletons(3).refines(a) and not a.refines(Partition.singletons(3))


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition([(0,), ()])
    with pytest.raises(ValueError):
        Partition([(0, 2)]).validate(3)
    with pytest.raises(ValueError):
        Partition([(0,), (1,)]).merge((0,), (0,))


@pytest.mark.parametrize("n", range(8))
def test_enumeration_counts_bell_numbers(n):
    parts = list(enumerate_partitions(n))
    assert len(parts) == bell(n) == [1, 1, 2, 5, 15, 52, 203, 877][n]
    assert len(set(parts)) == len(parts)


def test_crp_two_points():
    for p in enumerate_partitions(2):
        assert crp_log_prior(p, 1.0) == pytest.approx(math.log(0.5))


@pytest.mark.parametrize("n,alpha", [(3, 1.0), (5, 0.3), (8, 2.5)])
def test_crp_sums_to_one(n, alpha):
    total = special.logsumexp([crp_log_prior(p, alpha) for p in enumerate_partitions(n)])
    assert total == pytest.approx(0.0, abs=1e-12)


def test_crp_sequential_form():
    # seating probabilities multiplied in order
    p = Partition([(0, 2), (1, 3, 4)])
    alpha = 0.7
    direct = (1.0 * alpha / (1 + alpha) * 1 / (2 + alpha) * 1 / (3 + alpha) * 2 / (4 + alpha))
    assert crp_log_prior(p, alpha) == pytest.approx(math.log(direct))
    with pytest.raises(ValueError):
        crp_log_prior(p, 0.0)


# -- NIG ----------------------------------------------------------------------

def test_nig_single_point_is_student_t():
    h = NIG()
    for y in (-1.3, 0.0, 0.5, 4.0):
        t = stats.t(df=2 * h.a0, loc=h.mu0, scale=math.sqrt(h.b0 * (h.kappa0 + 1) / (h.a0 * h.kappa0)))
        assert h.log_marginal([y]) == pytest.approx(t.logpdf(y), rel=1e-12)


def test_nig_three_points_match_quadrature():
    assert NIG().log_marginal(Y3) == pytest.approx(NIG_LOGML_3PT, rel=1e-12)


def test_nig_chain_rule():
    h = NIG(0.3, 0.5, 2.0, 1.5)
    y1, y2 = 0.4, -1.1
    # posterior after y1, then its predictive for y2
    k1, a1 = h.kappa0 + 1, h.a0 + 0.5
    m1 = (h.kappa0 * h.mu0 + y1) / k1
    b1 = h.b0 + h.kappa0 * (y1 - h.mu0) ** 2 / (2 * k1)
    pred = NIG(m1, k1, a1, b1).predictive()
    assert h.log_marginal([y1, y2]) == pytest.approx(
        h.predictive().logpdf(y1) + pred.logpdf(y2), rel=1e-12)


def test_nig_permutation_invariant():
    y = np.array([0.3, -2.0, 1.1, 0.9])
    h = NIG()
    ref = h.log_marginal(y)
    for perm in itertools.permutations(range(4)):
        assert h.log_marginal(y[list(perm)]) == pytest.approx(ref, rel=1e-13)


def test_nig_two_point_integral():
    h = NIG(0.0, 0.5, 1.5, 1.0)
    y = [0.2, 0.9]
    v, _ = integrate.quad(lambda y2: math.exp(h.log_marginal([y[0], y2])), -np.inf, np.inf)
    assert v == pytest.approx(math.exp(h.log_marginal([y[0]])), rel=1e-8)


# -- strings --------------------------------------------------------------------

def test_damerau_levenshtein_examples():
    assert damerau_levenshtein("", "abc") == 3
    assert damerau_levenshtein("abcd", "acbd") == 1
    assert damerau_levenshtein("kitten", "sitting") == 3
    assert damerau_levenshtein("ca", "abc") == 3  # restricted edit distance


def test_damerau_levenshtein_metric_axioms():
    rng = np.random.default_rng(4)
    words = ["".join(rng.choice(list("abc"), size=rng.integers(0, 6))) for _ in range(30)]
    for a in words:
        assert damerau_levenshtein(a, a) == 0
        for b in words:
            assert damerau_levenshtein(a, b) == damerau_levenshtein(b, a)
            assert (damerau_levenshtein(a, b) == 0) == (a == b)


def test_bigram_uniform_form():
    rho, A = 0.2, 3
    h = BigramModel.uniform("abc", rho)
    for s in ("a", "cab", "bbbbb"):
        L = len(s)
        assert bigram_logprob(s, h) == pytest.approx(
            (L - 1) * math.log((1 - rho) / A) - math.log(A) + math.log(rho))


def test_bigram_mass_sums_to_one():
    rho = 0.3
    h = BigramModel.uniform("ab", rho)
    mass = sum(math.exp(bigram_logprob("".join(s), h))
               for L in (1, 2, 3) for s in itertools.product("ab", repeat=L))
    tail = (1 - rho) ** 3
    assert mass + tail == pytest.approx(1.0, abs=1e-12)


def test_bigram_edge_cases():
    h = BigramModel.from_corpus(["abba", "baab"])
    assert bigram_logprob("", h) == -math.inf
    with pytest.raises(ValueError):
        bigram_logprob("abz", h)
    with pytest.raises(ValueError):
        BigramModel("ab", [0.0, 0.0], np.zeros((2, 3)))


def test_typo_single_string_term():
    y = "kittens"
    h = BigramModel.uniform("eiknst", 0.1)
    tl = TypoLikelihood([y], h, normalize=False)
    m = typo_dpmm([y], tl=tl)
    expected = bigram_logprob(y, h) + math.ceil(len(y) / 5) * math.log(0.9)
    assert m.log_F((0,)) == pytest.approx(expected)


def test_typo_noise_values():
    tl = TypoLikelihood(["kitten", "sitting"], BigramModel.uniform("eiknstg", 0.1), normalize=False)
    assert tl.log_noise("kitten", "sitting") == pytest.approx(
        math.log(4 * 0.81 * 0.001) - 3 * math.log(5.09 * 6))
    norm = TypoLikelihood(["kitten", "sitting"], tl.bigram)
    assert special.logsumexp(norm.log_f, axis=1) == pytest.approx([0.0, 0.0])


def test_typo_noise_decreases_with_distance():
    tl = TypoLikelihood(["a"], BigramModel.uniform("abcdefghxyz", 0.1), normalize=False)
    x = "abcdefgh"
    ys = [x, "xbcdefgh", "xycdefgh", "xyzdefgh", "xyzzefgh"]
    vals = [tl.log_noise(x, y) for y in ys]
    assert [damerau_levenshtein(x, y) for y in ys] == [0, 1, 2, 3, 4]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_typo_duplicates_favor_merging():
    m = typo_dpmm(["hello", "hello", "world"])
    merged = Partition([(0, 1), (2,)])
    assert m.log_score(merged) > m.log_score(Partition.singletons(3))
    assert max(m.posterior().items(), key=lambda kv: kv[1])[0] == merged


# -- DPMM -----------------------------------------------------------------------

def test_dpmm_two_point_evidence():
    alpha, y = 1.7, np.array([0.4, 2.5])
    h = NIG()
    m = gaussian_dpmm(y, alpha, h)
    Z = (alpha / (alpha + 1) * math.exp(h.log_marginal(y[:1]) + h.log_marginal(y[1:]))
         + 1 / (alpha + 1) * math.exp(h.log_marginal(y)))
    assert m.exact_log_evidence() == pytest.approx(math.log(Z), rel=1e-12)
    assert sum(m.posterior().values()) == pytest.approx(1.0)


def test_dpmm_merge_delta():
    m = gaussian_dpmm(np.array([0.1, 1.9, 2.2, -0.4]), 0.8)
    p = Partition([(0,), (1, 2), (3,)])
    q = p.merge((0,), (1, 2))
    assert m.log_score(q) - m.log_score(p) == pytest.approx(m.merge_delta((0,), (1, 2)))


def test_smc_identical_points_single_cluster():
    m = gaussian_dpmm(np.full(5, 0.7), 1.0)
    _, parts, lw = dpmm_smc_baseline(m, 20, RandomSource(1), return_particles=True)
    counts = {}
    for p, w in zip(parts, np.exp(np.array(lw) - max(lw))):
        counts[p] = counts.get(p, 0) + w
    assert max(counts, key=counts.get) == Partition([range(5)])


@pytest.mark.parametrize("N,every", [(1, 0), (2, 0), (2, 2)])
def test_smc_unbiased_by_enumeration(N, every):
    m = gaussian_dpmm(Y3)
    Z = m.exact_log_evidence()
    law = enumerate_law(lambda rng: dpmm_smc_baseline(m, N, rng, rejuvenate_every=every))
    assert law.expectation(lambda v: math.exp(v - Z)) == pytest.approx(1.0, abs=1e-12)


def test_smc_rejuvenation_reduces_variance():
    m = gaussian_dpmm(np.array([-3.0, -2.6, 0.2, 0.5, 3.1, 2.7]))
    Z = m.exact_log_evidence()
    var = [empirical_stats(lambda rng: math.exp(dpmm_smc_baseline(m, 2, rng, rejuvenate_every=r) - Z),
                           2000, root_seed=3).variance for r in (0, 1)]
    assert var[1] < var[0]


# -- kernels --------------------------------------------------------------------

def test_langevin_centered_at_mode():
    t = gaussian_target(0.4, 0.3)
    k = langevin_kernel(t, 0.01)
    xs = np.linspace(-1, 2, 301)
    dens = np.array([k.log_density(0.4, x) for x in xs])
    assert xs[dens.argmax()] == pytest.approx(0.4)


def test_langevin_density_integrates_to_one():
    t = mixture_target()
    k = langevin_kernel(t, 0.02)
    for x in (-1.2, 0.0, 0.8):
        v, _ = integrate.quad(lambda z: math.exp(k.log_density(x, z)), x - 3, x + 3,
                              points=[x])
        assert v == pytest.approx(1.0, abs=1e-8)


def test_langevin_chain_reaches_target():
    t = gaussian_target(0.0, 0.2)
    rng = RandomSource(5)
    x = rng.generator.standard_normal(20000)
    for _ in range(50):
        x = langevin_step(x, t.grad_log_density, 0.015, rng)
    edges = np.linspace(-1.0, 1.0, 41)
    counts, _ = np.histogram(x, bins=edges)
    probs = np.diff(stats.norm.cdf(edges, scale=0.2))
    assert tv_distance(counts / x.size, probs) < 0.1


def test_mala_preserves_target():
    t = gaussian_target(0.0, 0.2)
    rng = RandomSource(6)
    x = 0.2 * rng.generator.standard_normal(50000)
    for _ in range(5):
        x, _ = mala_step(x, t.log_density_vec, t.grad_log_density, 0.03, rng)
    assert x.std() == pytest.approx(0.2, rel=0.02)


def test_kernel_stationarity_exact_kernels():
    t = DiscreteTarget([0, 1, 2], weights=[1.0, 4.0, 2.0])
    assert kernel_stationarity_check(independent_kernel(t), t) == pytest.approx(0.0, abs=1e-14)
    assert kernel_stationarity_check(identity_kernel([0, 1, 2]), t) == 0.0
    assert kernel_stationarity_check(metropolis_kernel(t), t) == pytest.approx(0.0, abs=1e-14)


def test_langevin_bias_shrinks_with_step():
    t = gaussian_target(0.0, 0.2)
    grid = np.linspace(-1.5, 1.5, 3001)
    bias = [kernel_stationarity_check(langevin_kernel(t, h), t, grid=grid)
            for h in (0.02, 0.01, 0.005, 0.0025)]
    assert all(b > 0 for b in bias)
    assert all(a > b for a, b in zip(bias, bias[1:]))


# -- datasets -------------------------------------------------------------------

def test_typo_corpus_shape():
    strings, planted = typo_corpus(RandomSource(2))
    assert len(strings) == 20 and len(planted) == 4
    assert all(len(c) == 5 for c in planted)
    for c in planted:
        assert all(damerau_levenshtein(strings[i], strings[j]) <= 2 for i in c for j in c)


def test_gaussian_data_and_evidence_consistency():
    y, p = gaussian_dpmm_data(6, RandomSource(8), 1.0)
    assert y.shape == (6,) and p.n == 6
    m = gaussian_dpmm(y)
    assert special.logsumexp([m.log_score(q) for q in m.partitions()]) == pytest.approx(
        m.exact_log_evidence())


def test_load_observations(tmp_path):
    f = tmp_path / "obs.txt"
    f.write_text("# header\n0.5\n\n-1.25\n", encoding="utf-8")
    assert load_observations(f).tolist() == [0.5, -1.25]
    g = tmp_path / "words.txt"
    g.write_text("# words\nhéllo\nworld\n", encoding="utf-8")
    assert load_observations(g, "string") == ["héllo", "world"]
    with pytest.raises(ValueError):
        load_observations(g, "ints")
