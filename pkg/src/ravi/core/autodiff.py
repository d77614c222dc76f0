"""Forward-mode dual numbers over a flat parameter vector.

Log-densities are written against the helpers in this module (``exp``,
``log``, ``logsumexp``...) so the same code runs on plain floats when
sampling and on :class:`Dual` values when a gradient is requested.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special


class Dual:
    """A scalar ``value`` carrying the gradient ``grad`` w.r.t. the parameters."""

    __slots__ = ("value", "grad")
    __array_priority__ = 100

    def __init__(self, value: float, grad: np.ndarray):
        self.value = float(value)
        self.grad = grad

    def __repr__(self):
        return f"Dual({self.value!r}, {self.grad!r})"

    def __float__(self):
        return self.value

    # arithmetic
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.grad + other.grad)
        return Dual(self.value + other, self.grad)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.value, -self.grad)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.grad - other.grad)
        return Dual(self.value - other, self.grad)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.grad)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value * other.value,
                        self.grad * other.value + other.grad * self.value)
        return Dual(self.value * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            v = self.value / other.value
            return Dual(v, (self.grad - other.grad * v) / other.value)
        return Dual(self.value / other, self.grad / other)

    def __rtruediv__(self, other):
        v = other / self.value
        return Dual(v, -self.grad * v / self.value)

    def __pow__(self, k):
        if isinstance(k, Dual):
            return exp(k * log(self))
        return Dual(self.value ** k, self.grad * (k * self.value ** (k - 1)))

    # comparisons act on the value
    def __lt__(self, other):
        return self.value < value_of(other)

    def __le__(self, other):
        return self.value <= value_of(other)

    def __gt__(self, other):
        return self.value > value_of(other)

    def __ge__(self, other):
        return self.value >= value_of(other)

    def __eq__(self, other):
        return self.value == value_of(other)

    def __hash__(self):
        return hash(self.value)


def value_of(x):
    return x.value if isinstance(x, Dual) else x


def grad_of(x, n: int) -> np.ndarray:
    return x.grad if isinstance(x, Dual) else np.zeros(n)


def split(x, n: int) -> tuple[float, np.ndarray]:
    """(value, gradient) of a float or Dual; floats have zero gradient."""
    if isinstance(x, Dual):
        return x.value, x.grad
    return float(x), np.zeros(n)


def exp(x):
    if isinstance(x, Dual):
        v = math.exp(x.value)
        return Dual(v, x.grad * v)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(_log(x.value), x.grad / x.value)
    return _log(x)


def _log(v):
    return math.log(v) if v > 0 else -math.inf


def sqrt(x):
    if isinstance(x, Dual):
        v = math.sqrt(x.value)
        return Dual(v, x.grad * (0.5 / v))
    return math.sqrt(x)


def square(x):
    return x * x


def lgamma(x):
    if isinstance(x, Dual):
        return Dual(math.lgamma(x.value), x.grad * special.digamma(x.value))
    return math.lgamma(x)


def sigmoid(x):
    if isinstance(x, Dual):
        s = special.expit(x.value)
        return Dual(s, x.grad * (s * (1 - s)))
    return float(special.expit(x))


def log_sigmoid(x):
    if isinstance(x, Dual):
        return Dual(-np.logaddexp(0.0, -x.value), x.grad * special.expit(-x.value))
    return float(-np.logaddexp(0.0, -x))


def logsumexp(xs):
    """Max-subtracted log-sum-exp over a sequence of floats and/or Duals."""
    xs = list(xs)
    vals = np.array([value_of(x) for x in xs], dtype=float)
    if vals.size == 0:
        return -math.inf
    m = vals.max()
    if not np.isfinite(m):
        return m if not any(isinstance(x, Dual) for x in xs) else _lift(m, xs)
    w = np.exp(vals - m)
    total = w.sum()
    out = m + math.log(total)
    duals = [(i, x) for i, x in enumerate(xs) if isinstance(x, Dual)]
    if not duals:
        return out
    g = sum(x.grad * (w[i] / total) for i, x in duals)
    return Dual(out, g)


def _lift(v, xs):
    n = next(x.grad.size for x in xs if isinstance(x, Dual))
    return Dual(v, np.zeros(n))


def normal_logpdf(x, mean, std):
    z = (x - mean) / std
    return -0.5 * z * z - log(std) - 0.5 * math.log(2 * math.pi)
