"""Flat named parameter vector shared by models and strategies."""
from __future__ import annotations

import numpy as np

from .autodiff import Dual


class ParamStore:
    """Named real parameters with a gradient accumulator of the same shape.

    Strategy and model callables receive a plain ``{name: value}`` mapping;
    :meth:`duals` returns the same mapping seeded for forward-mode
    differentiation.
    """

    def __init__(self, initial: dict[str, float] | None = None):
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self.values = np.zeros(0)
        self.grad = np.zeros(0)
        for name, value in (initial or {}).items():
            self.add(name, value)

    def add(self, name: str, value: float = 0.0) -> str:
        if name in self._index:
            raise KeyError(f"parameter {name!r} already registered")
        self._index[name] = len(self._names)
        self._names.append(name)
        self.values = np.append(self.values, float(value))
        self.grad = np.zeros_like(self.values)
        return name

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def index(self, name: str) -> int:
        return self._index[name]

    def __len__(self):
        return len(self._names)

    def __contains__(self, name):
        return name in self._index

    def __getitem__(self, name: str) -> float:
        return float(self.values[self._index[name]])

    def __setitem__(self, name: str, value: float):
        self.values[self._index[name]] = value

    def set_vector(self, vec) -> None:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != self.values.shape:
            raise ValueError("parameter vector has the wrong shape")
        self.values = vec.copy()

    def params(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self._names, self.values)}

    def duals(self) -> dict[str, Dual]:
        eye = np.eye(len(self._names))
        return {n: Dual(v, eye[i]) for i, (n, v) in enumerate(zip(self._names, self.values))}

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.values)

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for n, v in zip(self._names, self.values):
            out.add(n, v)
        return out
