"""Parameter containers for the dense kernel.

All learnable state lives in float64 numpy arrays of rank 1 or 2 (rank-1
arrays are column vectors for serialization purposes). A ParamSet owns the
tensors plus the optimizer moment buffers and step counter, so a model
checkpoint is exactly one ParamSet plus its config.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import UsageError


def as_tensor(value, name="tensor") -> np.ndarray:
    """Validate and normalize an array to a finite float64 rank-1/2 tensor."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise UsageError(f"{name}: expected rank 1 or 2, got rank {arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise UsageError(f"{name}: entries must be finite")
    return arr


@dataclass
class LstmState:
    """Hidden and cell vectors of one LSTM cell; always the same length."""

    hidden: np.ndarray
    cell: np.ndarray

    def __post_init__(self):
        self.hidden = as_tensor(self.hidden, "hidden")
        self.cell = as_tensor(self.cell, "cell")
        if self.hidden.shape != self.cell.shape or self.hidden.ndim != 1:
            raise UsageError("hidden and cell must be equal-length vectors")

    @classmethod
    def zeros(cls, dim: int) -> "LstmState":
        return cls(np.zeros(dim), np.zeros(dim))


@dataclass
class ParamSet:
    """Named parameter tensors with first/second moment buffers.

    Shapes are fixed at insertion; assignment through set() enforces the
    original shape. The step counter advances once per optimizer update.
    """

    _params: dict = field(default_factory=dict)
    _m: dict = field(default_factory=dict)
    _v: dict = field(default_factory=dict)
    step: int = 0

    def add(self, name: str, value) -> None:
        if name in self._params:
            raise UsageError(f"duplicate parameter name {name!r}")
        arr = as_tensor(value, name).copy()
        self._params[name] = arr
        self._m[name] = np.zeros_like(arr)
        self._v[name] = np.zeros_like(arr)

    def set(self, name: str, value) -> None:
        arr = as_tensor(value, name)
        if arr.shape != self._params[name].shape:
            raise UsageError(
                f"{name}: shape {arr.shape} != fixed shape {self._params[name].shape}"
            )
        self._params[name] = arr.copy()

    def __getitem__(self, name: str) -> np.ndarray:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self):
        return list(self._params)

    def moment_buffers(self, name: str):
        return self._m[name], self._v[name]

    def zeros_like(self) -> dict:
        """Fresh gradient accumulator keyed like this set."""
        return {k: np.zeros_like(v) for k, v in self._params.items()}

    def copy(self) -> "ParamSet":
        out = ParamSet(step=self.step)
        out._params = {k: v.copy() for k, v in self._params.items()}
        out._m = {k: v.copy() for k, v in self._m.items()}
        out._v = {k: v.copy() for k, v in self._v.items()}
        return out

    def equal(self, other: "ParamSet") -> bool:
        if self.names() != other.names() or self.step != other.step:
            return False
        return all(np.array_equal(self._params[k], other._params[k]) for k in self._params)
