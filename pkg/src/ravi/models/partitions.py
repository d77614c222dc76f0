"""Partitions of ``0..n-1`` and the Chinese restaurant process prior."""
from __future__ import annotations

import math
from typing import Iterable, Iterator


class Partition(tuple):
    """Canonical partition: a tuple of sorted index tuples ordered by smallest member.

    Two partitions with the same blocks compare and hash equal regardless of
    how they were built.
    """

    def __new__(cls, clusters: Iterable[Iterable[int]]):
        blocks = [tuple(sorted(int(i) for i in c)) for c in clusters]
        if any(len(b) == 0 for b in blocks):
            raise ValueError("partition blocks must be non-empty")
        blocks.sort()
        return super().__new__(cls, blocks)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls([(i,) for i in range(n)])

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        groups: dict = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i)
        return cls(groups.values())

    @property
    def n(self) -> int:
        return sum(len(c) for c in self)

    def labels(self) -> list[int]:
        out = [0] * self.n
        for k, c in enumerate(self):
            for i in c:
                out[i] = k
        return out

    def validate(self, n: int | None = None) -> "Partition":
        members = sorted(i for c in self for i in c)
        expected = list(range(len(members) if n is None else n))
        if members != expected:
            raise ValueError(f"not a partition of 0..{len(expected) - 1}: {self!r}")
        return self

    def merge(self, a: tuple, b: tuple) -> "Partition":
        if a not in self or b not in self or a == b:
            raise ValueError("merge needs two distinct blocks of the partition")
        return Partition([c for c in self if c != a and c != b] + [a + b])

    def refines(self, other: "Partition") -> bool:
        """True when every block lies inside a block of ``other``."""
        lab = other.labels()
        return all(len({lab[i] for i in c}) == 1 for c in self)

    def __repr__(self):
        return "{" + ", ".join("{" + ",".join(map(str, c)) + "}" for c in self) + "}"


def crp_log_prior(p: Partition, alpha: float, n: int | None = None) -> float:
    """Log probability of ``p`` under CRP(n, alpha)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = p.n if n is None else n
    p.validate(n)
    out = sum(math.log(alpha) + math.lgamma(len(c)) for c in p)
    return out - sum(math.log(alpha + i) for i in range(n))


def enumerate_partitions(n: int) -> Iterator[Partition]:
    """All set partitions of ``0..n-1`` (Bell(n) of them) via restricted growth strings."""
    if n == 0:
        yield Partition([])
        return
    labels = [0] * n

    def rec(i, m):
        if i == n:
            yield Partition.from_labels(labels)
            return
        for k in range(m + 1):
            labels[i] = k
            yield from rec(i + 1, max(m, k + 1))

    labels[0] = 0
    yield from rec(1, 1)


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]
