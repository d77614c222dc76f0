"""ELBO gap against chain length for MCVI and its particle-meta-inference variant.

Trains affine reverse kernels once at the longest chain, then prints the gap
to the quadrature log Z for each M. Pass ``--mixture`` for the 3-component target.
"""
import argparse
import math

from ravi.core import RandomSource
from ravi.experiments.mcvi_langevin import (LangevinChain, blockwise, mcvi_log_weights,
                                            rmcvi_log_weights, train)
from ravi.models import gaussian_target, mixture_target

ap = argparse.ArgumentParser()
ap.add_argument("--mixture", action="store_true")
ap.add_argument("--iters", type=int, default=1000)
ap.add_argument("--reps", type=int, default=2000)
args = ap.parse_args()

tgt = mixture_target() if args.mixture else gaussian_target(0.0, 0.2)
ref = tgt.quadrature_log_Z()
chain = LangevinChain(tgt, 0.015)
Ms, Ks = (1, 5, 10, 20, 40), (1, 4, 16)
R, Q, _ = train(chain, max(Ms), args.iters, 256, 0.01, RandomSource(0))

print(f"{'M':>3} {'mcvi':>14}" + "".join(f"{'K=' + str(K):>16}" for K in Ks))
for M in Ms:
    cells = []
    fns = [lambda n, r: mcvi_log_weights(chain, R, M, n, r)]
    fns += [lambda n, r, K=K: rmcvi_log_weights(chain, R, Q, M, K, n, r) for K in Ks]
    for fn in fns:
        lw = blockwise(fn, args.reps, 7)
        cells.append(f"{ref - lw.mean():8.3f}+-{lw.std() / math.sqrt(args.reps):.3f}")
    print(f"{M:>3} " + " ".join(f"{c:>15}" for c in cells))
