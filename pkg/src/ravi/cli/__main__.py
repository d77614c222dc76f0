"""Command line: ``ravi {mcvi,dpmm,diagnose,kl-bound}``."""
from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import config as C

U64_MAX = 2 ** 64 - 1


def _u64(v: str) -> int:
    n = int(v, 0)
    if not 0 <= n <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def _positive(v: str) -> int:
    n = int(v)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def subseed(seed: int, *tag) -> int:
    """Deterministic child seed for the experiment named by ``tag``."""
    words = [seed & 0xFFFFFFFF, seed >> 32] + [t if isinstance(t, int) else
                                               int.from_bytes(str(t).encode()[:8], "little")
                                               for t in tag]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, columns, rows, chash: str, seed: int):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(columns) + ["config_hash", "seed"])
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns] + [chash, seed])
    return path


def _summary(log_w: np.ndarray):
    return float(log_w.mean()), float(log_w.std(ddof=1) / math.sqrt(log_w.size))


# -- mcvi -------------------------------------------------------------------

MCVI_COLUMNS = ("algorithm", "M", "K", "mean_elbo", "stderr", "gap_vs_ref", "mcmc_steps")
COMPUTE_COLUMNS = ("algorithm", "M", "K", "mcmc_steps", "mean_elbo", "stderr", "gap_vs_ref")


def run_mcvi(cfg, seed, out, threads):
    from ..experiments.mcvi_langevin import (LangevinChain, ais_log_weights, blockwise,
                                             mcvi_log_weights, rmcvi_log_weights, train)
    from ..core.random import RandomSource
    from ..models.targets import gaussian_target, mixture_target

    tgt = gaussian_target(0.0, 0.2) if cfg["target"] == "gaussian" else mixture_target()
    ref = tgt.quadrature_log_Z(cfg["quadrature_points"])
    chain = LangevinChain(tgt, cfg["step"], cfg["q0_mean"], cfg["q0_std"])
    Ms, Ks = sorted(set(cfg["M"])), sorted(set(cfg["K"]))
    M_max = max(Ms)
    R, Q, _ = train(chain, M_max, cfg["train_iters"], cfg["train_batch"], cfg["learning_rate"],
                    RandomSource(subseed(seed, "train")), freeze_q=cfg["freeze_q"])
    reps, block = cfg["replicates"], cfg["block"]

    def row(alg, M, K, steps, lw):
        mean, se = _summary(lw)
        return {"algorithm": alg, "M": M, "K": K, "mean_elbo": mean, "stderr": se,
                "gap_vs_ref": ref - mean, "mcmc_steps": steps}

    rows = []
    for M in Ms:
        lw = blockwise(lambda n, r, M=M: mcvi_log_weights(chain, R, M, n, r), reps,
                       subseed(seed, "mcvi", M), block, threads)
        rows.append(row("mcvi", M, 1, M, lw))
        for K in Ks:
            lw = blockwise(lambda n, r, M=M, K=K: rmcvi_log_weights(chain, R, Q, M, K, n, r),
                           reps, subseed(seed, "rmcvi", M, K), block, threads)
            rows.append(row("rmcvi", M, K, K * M, lw))
    compute = list(rows)
    for T in sorted(set(cfg["ais_steps"])):
        lw = blockwise(lambda n, r, T=T: ais_log_weights(chain, T, n, r), reps,
                       subseed(seed, "ais", T), block, threads)
        compute.append(row("ais", T, 1, T, lw))
    compute.sort(key=lambda r: (r["algorithm"], r["mcmc_steps"], r["M"], r["K"]))
    chash = C.config_hash("mcvi", cfg)
    write_csv(out / "mcvi.csv", MCVI_COLUMNS, rows, chash, seed)
    write_csv(out / "mcvi_compute.csv", COMPUTE_COLUMNS, compute, chash, seed)
    print(f"reference log Z = {ref:.6f}; wrote {out / 'mcvi.csv'} and {out / 'mcvi_compute.csv'}")
    return 0


# -- dpmm -------------------------------------------------------------------

DPMM_COLUMNS = ("method", "K_or_N", "mean_logZ", "std", "exact_logZ_or_NA", "replicates")


def _dpmm_model(cfg, seed):
    from ..core.random import RandomSource
    from ..models import (NIG, gaussian_dpmm, gaussian_dpmm_data, load_observations,
                          typo_corpus, typo_dpmm)
    hyper = NIG(cfg["mu0"], cfg["kappa0"], cfg["a0"], cfg["b0"])
    rng = RandomSource(subseed(seed, "data"))
    if cfg["dataset"] == "gaussian":
        y, _ = gaussian_dpmm_data(cfg["n"], rng, cfg["alpha"], hyper)
        return gaussian_dpmm(y, cfg["alpha"], hyper)
    if cfg["dataset"] == "typos":
        strings, _ = typo_corpus(rng, cfg["typo_clusters"], cfg["typo_per_cluster"])
        return typo_dpmm(strings, cfg["alpha"], normalize=cfg["normalize"])
    data = load_observations(cfg["path"], cfg["kind"])
    if cfg["kind"] == "real":
        return gaussian_dpmm(data, cfg["alpha"], hyper)
    return typo_dpmm(data, cfg["alpha"], normalize=cfg["normalize"])


def run_dpmm(cfg, seed, out, threads):
    from ..experiments.dpmm_runs import evidence_replicates
    model = _dpmm_model(cfg, seed)
    n = len(model.data)
    exact = model.exact_log_evidence() if n <= 6 else "NA"
    rows = []
    for method, sizes in (("agglom", cfg["K"]), ("smc", cfg["N"])):
        for size in sorted(set(sizes)):
            lz = evidence_replicates(model, method, size, cfg["replicates"],
                                     subseed(seed, method, size), threads,
                                     cfg["rejuvenate_every"])
            std = float(lz.std(ddof=1)) if lz.size > 1 else 0.0
            rows.append({"method": method, "K_or_N": size, "mean_logZ": float(lz.mean()),
                         "std": std, "exact_logZ_or_NA": exact, "replicates": lz.size})
    write_csv(out / "dpmm.csv", DPMM_COLUMNS, rows, C.config_hash("dpmm", cfg), seed)
    print(f"n = {n}; wrote {out / 'dpmm.csv'}")
    return 0


# -- diagnose ---------------------------------------------------------------

def run_diagnose(cfg, seed, out, threads, fault_inject=False):
    from ..diagnostics.recursions import CSV_COLUMNS
    from ..diagnostics.suite import COLUMNS, run_suite
    rows, reports = run_suite(fault_inject=fault_inject, seed=seed, rtol=cfg["rtol"],
                              unbiased_tol=cfg["unbiased_rtol"], mh=cfg["mh"],
                              mh_steps=cfg["mh_steps"])
    chash = C.config_hash("diagnose", dict(cfg, fault_inject=fault_inject))
    write_csv(out / "diagnose.csv", COLUMNS, [r.as_record() for r in rows], chash, seed)
    rec = [dict(r, strategy=name) for name, rep in reports for r in rep.as_records()]
    write_csv(out / "recursions.csv", ("strategy",) + CSV_COLUMNS, rec, chash, seed)
    failed = [r for r in rows if not r.passed]
    for r in failed:
        print(f"FAIL {r.strategy} {r.check}: exact {float(r.exact)!r} observed {float(r.observed)!r}",
              file=sys.stderr)
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed; wrote {out / 'diagnose.csv'}")
    return 1 if failed else 0


# -- kl-bound ---------------------------------------------------------------

KL_COLUMNS = ("strategy", "replicates", "mean_kl_hat", "stderr", "exact_kl", "upper_bound_ok")


def run_kl(cfg, seed, out, threads):
    from ..experiments.kl_bound import (default_pair, exact_symmetric_kl, kl_replicates,
                                        posterior_strategy, prior_guess_strategy)
    p, q = default_pair()
    exact = exact_symmetric_kl(p, q)
    makers = {"exact": posterior_strategy, "crude": prior_guess_strategy}
    names = [s.strip() for s in cfg["strategies"].split(",") if s.strip()]
    unknown = [s for s in names if s not in makers]
    if unknown:
        raise C.ConfigError(f"[kl-bound] unknown strategies {unknown}; choose from {list(makers)}")
    rows = []
    for name in names:
        d = kl_replicates(p, makers[name](p), q, makers[name](q), cfg["replicates"],
                          subseed(seed, "kl", name), threads)
        mean, se = _summary(d)
        rows.append({"strategy": name, "replicates": d.size, "mean_kl_hat": mean, "stderr": se,
                     "exact_kl": exact, "upper_bound_ok": mean + 3 * se >= exact})
    write_csv(out / "kl_bound.csv", KL_COLUMNS, rows, C.config_hash("kl-bound", cfg), seed)
    print(f"exact symmetric KL = {exact:.6f}; wrote {out / 'kl_bound.csv'}")
    return 0


RUNNERS = {"mcvi": run_mcvi, "dpmm": run_dpmm, "diagnose": run_diagnose, "kl-bound": run_kl}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ravi", description="Recursive auxiliary-variable inference")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"mcvi": "Langevin-chain families: ELBO against chain length",
             "dpmm": "evidence estimates for a Dirichlet-process mixture",
             "diagnose": "exact oracle checks over the bundled strategies",
             "kl-bound": "symmetric KL upper bound between two models"}
    for name, h in helps.items():
        p = sub.add_parser(name, help=h)
        p.add_argument("--config", help="[section] key = value file (UTF-8)")
        p.add_argument("--seed", type=_u64, default=0, help="root seed (unsigned 64-bit)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=_positive, default=1)
        if name == "diagnose":
            p.add_argument("--fault-inject", action="store_true",
                           help="bias one strategy on purpose; the suite must fail")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = C.load(args.command, args.config)
        out = C.ensure_dir(args.out)
        extra = {"fault_inject": args.fault_inject} if args.command == "diagnose" else {}
        return RUNNERS[args.command](cfg, args.seed, out, args.threads, **extra)
    except C.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
