"""Composite midpoint rule for the interface-flux integrals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Abscissas and weights on ``[a, b]``; never includes the endpoints."""

    a: float
    b: float
    points: np.ndarray
    weights: np.ndarray

    @property
    def N(self) -> int:
        return self.points.size

    @property
    def length(self) -> float:
        return self.b - self.a

    def apply(self, samples) -> float | np.ndarray:
        """Weighted sum of ``samples`` (sampled along the last axis)."""
        samples = np.asarray(samples, dtype=float)
        if samples.shape[-1] != self.N:
            raise ValueError(f"expected {self.N} samples, got {samples.shape[-1]}")
        return samples @ self.weights


def midpoint_rule(a: float, b: float, N: int) -> QuadratureRule:
    """N-point composite midpoint rule on ``[a, b]``.

    At least two abscissas are needed for the series truncation window to be
    non-empty.
    """
    if N < 2:
        raise ValueError(f"midpoint rule needs N >= 2, got {N}")
    if not b > a:
        raise ValueError(f"degenerate interval [{a}, {b}]")
    step = (b - a) / N
    pts = a + (np.arange(N) + 0.5) * step
    w = np.full(N, step)
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(float(a), float(b), pts, w)


def apply(rule: QuadratureRule, samples) -> float | np.ndarray:
    return rule.apply(samples)
