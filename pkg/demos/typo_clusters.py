"""Recover planted clusters of misspelled words with the agglomerative strategy."""
from ravi.core import RandomSource
from ravi.experiments.dpmm_runs import modal_partition
from ravi.models import typo_corpus, typo_dpmm

strings, planted = typo_corpus(RandomSource(3))
model = typo_dpmm(strings)
found = modal_partition(model, 1, 10, RandomSource(4))
for block in found:
    print(sorted(strings[i] for i in block))
print("matches planted partition:", found == planted)
