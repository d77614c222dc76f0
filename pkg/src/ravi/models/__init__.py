"""Targets, partition models, likelihoods, kernels and datasets."""
from .datasets import gaussian_dpmm_data, load_observations, sample_crp, typo_corpus
from .dpmm import DPMMModel, dpmm_smc_baseline, gaussian_dpmm, typo_dpmm
from .kernels import langevin_kernel, langevin_step, mala_kernel, mala_step
from .likelihoods import (NIG, BigramModel, TypoLikelihood, bigram_logprob, damerau_levenshtein,
                          gaussian_cluster_marginal, typo_cluster_marginal)
from .partitions import Partition, bell, crp_log_prior, enumerate_partitions
from .targets import DiscreteTarget, GaussianMixtureTarget, gaussian_target, mixture_target
