"""Synthetic data generators and a plain-text loader."""
from __future__ import annotations

import string
from pathlib import Path

import numpy as np

from ..core.random import as_source
from .likelihoods import NIG, damerau_levenshtein
from .partitions import Partition


def sample_crp(n: int, alpha: float, rng) -> Partition:
    rng = as_source(rng)
    labels, sizes = [], []
    for i in range(n):
        lw = np.log(np.array(sizes + [alpha], dtype=float))
        k = rng.categorical(lw)
        if k == len(sizes):
            sizes.append(0)
        sizes[k] += 1
        labels.append(k)
    return Partition.from_labels(labels)


def gaussian_dpmm_data(n: int, rng, alpha: float = 1.0, hyper: NIG = NIG()):
    """Draw a partition from the CRP and observations from NIG-Gaussian blocks."""
    rng = as_source(rng)
    p = sample_crp(n, alpha, rng)
    y = np.empty(n)
    for c in p:
        mean, sd = hyper.sample_component(rng)
        for i in c:
            y[i] = rng.normal(mean, sd)
    return y, p


def _edit(word: str, rng, alphabet: str) -> str:
    ops = ["sub", "ins", "del", "swap"] if len(word) > 1 else ["sub", "ins"]
    op = ops[rng.uniform_int(len(ops))]
    i = rng.uniform_int(len(word))
    c = alphabet[rng.uniform_int(len(alphabet))]
    if op == "sub":
        return word[:i] + c + word[i + 1:]
    if op == "ins":
        return word[:i] + c + word[i:]
    if op == "del":
        return word[:i] + word[i + 1:]
    i = min(i, len(word) - 2)
    return word[:i] + word[i + 1] + word[i] + word[i + 2:]


def typo_corpus(rng, n_clusters: int = 4, per_cluster: int = 5, length=(7, 10),
                alphabet: str = string.ascii_lowercase, min_separation: int = 5,
                edits_per_copy: int = 1):
    """Planted corpus: ``n_clusters`` random clean words, each followed by noisy copies.

    Each cluster holds the clean word and ``per_cluster - 1`` copies with
    ``edits_per_copy`` random edits (substitution, insertion, deletion or
    adjacent swap). Clean words are at least ``min_separation`` edits apart.
    Returns ``(strings, planted_partition)`` with strings shuffled.
    """
    rng = as_source(rng)
    words: list[str] = []
    while len(words) < n_clusters:
        L = length[0] + rng.uniform_int(length[1] - length[0] + 1)
        w = "".join(alphabet[rng.uniform_int(len(alphabet))] for _ in range(L))
        if all(damerau_levenshtein(w, v) >= min_separation for v in words):
            words.append(w)
    items = []
    for k, w in enumerate(words):
        items.append((w, k))
        for _ in range(per_cluster - 1):
            y = w
            for _ in range(edits_per_copy):
                y = _edit(y, rng, alphabet)
            items.append((y, k))
    order = rng.generator.permutation(len(items))
    strings = [items[i][0] for i in order]
    labels = [items[i][1] for i in order]
    return strings, Partition.from_labels(labels)


def load_observations(path, kind: str = "real"):
    """Read one observation per line; ``#`` starts a comment line, blank lines are skipped.

    ``kind="real"`` returns a float array, ``kind="string"`` a list of
    strings (UTF-8, trailing newline stripped).
    """
    if kind not in ("real", "string"):
        raise ValueError("kind must be 'real' or 'string'")
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#") or not line.strip():
            continue
        out.append(float(line) if kind == "real" else line.rstrip("\r"))
    return np.array(out) if kind == "real" else out
