"""Evidence estimates on a small DP-mixture dataset against exact enumeration."""

from ravi.core import RandomSource
from ravi.experiments.dpmm_runs import evidence_replicates, mean_exp_with_se
from ravi.models import gaussian_dpmm, gaussian_dpmm_data

y, planted = gaussian_dpmm_data(6, RandomSource(0))
model = gaussian_dpmm(y)
exact = model.exact_log_evidence()
print("data", y.round(3).tolist(), "planted", planted)
print(f"exact log Z = {exact:.5f}")
for method, size in (("agglom", 1), ("agglom", 4), ("smc", 10), ("smc", 100)):
    lz = evidence_replicates(model, method, size, 300, seed=1)
    ratio, se = mean_exp_with_se(lz, exact)
    print(f"{method:>6} {size:>4}: mean log Z {lz.mean():9.5f}  sd {lz.std():.4f}  "
          f"E[Z_hat]/Z {ratio:.4f} +- {se:.4f}")
best = max(model.posterior().items(), key=lambda kv: kv[1])
print(f"posterior mode {best[0]} with probability {best[1]:.3f}")
