"""Trigonometric orthonormal bases on a compact interval ``[l, u]``.

With ``L = u - l`` and ``y = (x - l) / L`` two families are available, both
giving nested spaces of dimension ``D_m = 2m + 1``:

``"fourier"``
    ``1/sqrt(L)``, then ``sqrt(2/L) cos(2 pi j y)``, ``sqrt(2/L) sin(2 pi j y)``
    for ``j = 1..m``. Periodic on the interval.
``"cosine"``
    ``1/sqrt(L)``, then ``sqrt(2/L) cos(pi j y)`` for ``j = 1..2m``.
    Not tied to periodic boundary values, so smooth non-periodic functions
    (a linear drift, say) are approximated with far fewer terms.

Every function vanishes outside the interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("cosine", "fourier")


def dimension(m: int) -> int:
    return 2 * m + 1


@dataclass(frozen=True)
class TrigBasis:
    lower: float = -1.0
    upper: float = 1.0
    max_m: int = 20
    kind: str = "cosine"

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("interval must satisfy lower < upper")
        if self.max_m < 0:
            raise ValueError("max_m must be >= 0")
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {KINDS}")

    @property
    def interval(self) -> tuple:
        return (self.lower, self.upper)

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.lower) & (x <= self.upper)

    def design_matrix(self, m: int, xs) -> np.ndarray:
        """``n x D_m`` matrix of basis values; rows for points outside the interval are zero."""
        if m > self.max_m or m < 0:
            raise ValueError(f"model index {m} outside 0..{self.max_m}")
        xs = np.asarray(xs, dtype=float).reshape(-1)
        length = self.length
        y = (xs - self.lower) / length
        scale = math.sqrt(2.0 / length)
        out = np.empty((xs.size, 2 * m + 1))
        out[:, 0] = 1.0 / math.sqrt(length)
        if self.kind == "fourier":
            angles = np.outer(y, 2.0 * math.pi * np.arange(1, m + 1))
            out[:, 1::2] = scale * np.cos(angles)
            out[:, 2::2] = scale * np.sin(angles)
        else:
            angles = np.outer(y, math.pi * np.arange(1, 2 * m + 1))
            out[:, 1:] = scale * np.cos(angles)
        out[~self.contains(xs)] = 0.0
        return out

    def eval(self, m: int, x: float) -> np.ndarray:
        """Vector ``(phi_0(x), ..., phi_{2m}(x))``."""
        return self.design_matrix(m, [x])[0]

    def sup_norm_constant(self) -> float:
        """``phi_1`` in ``||t||_inf^2 <= phi_1 D_m ||t||^2``; ``2 / L`` holds for both kinds."""
        return 2.0 / self.length
