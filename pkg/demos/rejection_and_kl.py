"""Exact sampling by rejection on estimated weights, and a symmetric-KL upper bound."""
import math

import numpy as np

from ravi.core import RandomSource, rejection_sample
from ravi.experiments.kl_bound import (default_pair, exact_symmetric_kl, kl_replicates,
                                       posterior_strategy, prior_guess_strategy)
from ravi.models import DiscreteTarget
from ravi.strategies import sir, uniform

t = DiscreteTarget([0, 1, 2, 3], weights=[1.0, 2.0, 3.0, 6.0])
s = sir(t, uniform([0, 1, 2, 3]), 2)
rng = RandomSource(0)
xs = [rejection_sample(t, s, math.log(24.0), rng) for _ in range(20000)]
print("target   ", np.round(t.probabilities(), 4))
print("empirical", np.round(np.bincount(xs, minlength=4) / len(xs), 4))

p, q = default_pair()
print(f"exact symmetric KL {exact_symmetric_kl(p, q):.5f}")
for name, make in (("posterior", posterior_strategy), ("uniform", prior_guess_strategy)):
    d = kl_replicates(p, make(p), q, make(q), 5000, 2)
    print(f"{name:>9} strategies: {d.mean():.5f} +- {d.std() / math.sqrt(d.size):.5f}")
