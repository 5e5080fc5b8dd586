"""Test geometries: checkerboards, aggregated random media, pixelation and the
named two-phase reference layouts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BlockGrid, GridError, from_array, refine

LOW, HIGH = 0.1, 1.0


def checkerboard(m: int, low: float = LOW, high: float = HIGH) -> BlockGrid:
    """``m`` x ``m`` checkerboard on the unit square with ``low`` in block (1, 1)."""
    if m < 2:
        raise GridError(f"checkerboard needs m >= 2, got {m}")
    parity = np.add.outer(np.arange(m), np.arange(m)) % 2
    return from_array(np.where(parity == 0, low, high))


@dataclass(frozen=True)
class AggregationConfig:
    """Parameters of the smoothing-and-threshold random medium generator.

    The generator is numpy's PCG64 seeded with ``seed``, so a configuration
    yields the same grid on every platform.
    """

    m: int
    iterations: int
    seed: int
    low: float = LOW
    high: float = HIGH

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise GridError(f"aggregation needs an even m >= 2, got {self.m}")
        if self.iterations < 0:
            raise GridError("iterations must be non-negative")
        if not (self.low > 0 and self.high > 0):
            raise GridError("phase diffusivities must be positive")


# 3 x 3 periodic stencil: centre 4/9, edge neighbours 1/9, corners 1/36
_STENCIL = ((0, 0, 4 / 9),
            (1, 0, 1 / 9), (-1, 0, 1 / 9), (0, 1, 1 / 9), (0, -1, 1 / 9),
            (1, 1, 1 / 36), (1, -1, 1 / 36), (-1, 1, 1 / 36), (-1, -1, 1 / 36))


def smooth(field: np.ndarray) -> np.ndarray:
    """One periodic weighted-average pass; the weights sum to one."""
    out = np.zeros_like(field, dtype=float)
    for di, dj, w in _STENCIL:
        out += w * np.roll(field, (di, dj), axis=(0, 1))
    return out


def aggregation_field(config: AggregationConfig) -> np.ndarray:
    """The smoothed random field before thresholding."""
    rng = np.random.default_rng(config.seed)
    field = rng.random((config.m, config.m))
    for _ in range(config.iterations):
        field = smooth(field)
    return field


def threshold_half(field: np.ndarray, low: float, high: float) -> np.ndarray:
    """Largest half of the entries become ``high``; ties go to the lower
    (row-major) index."""
    flat = field.ravel()
    order = np.lexsort((np.arange(flat.size), -flat))
    out = np.full(flat.size, low)
    out[order[:flat.size // 2]] = high
    return out.reshape(field.shape)


def aggregate_random(config: AggregationConfig) -> BlockGrid:
    field = aggregation_field(config)
    return from_array(threshold_half(field, config.low, config.high))


def pixelate(fine: BlockGrid, r: int, threshold: float = 0.55,
             low: float = LOW, high: float = HIGH) -> BlockGrid:
    """Coarsen a binary ``m`` x ``m`` grid to ``r`` x ``r`` blocks.

    Each coarse block covers a ``k`` x ``k`` patch (``r k = m``); it becomes
    ``high`` when the patch mean is at least ``threshold`` and ``low``
    otherwise.
    """
    m, n = fine.shape
    if m != n or not fine.is_uniform():
        raise GridError("pixelation needs a square grid of equal blocks")
    if r < 1 or m % r:
        raise GridError(f"r = {r} does not divide m = {m}")
    if not np.all(np.isin(fine.D, (low, high))):
        raise GridError(f"fine grid must only contain the phases {low} and {high}")
    k = m // r
    means = fine.D.reshape(r, k, r, k).mean(axis=(1, 3))
    return BlockGrid(fine.x_breaks[::k], fine.y_breaks[::k],
                     np.where(means >= threshold, high, low))


# --- reference layouts ------------------------------------------------------
# 8 x 8 two-phase cells; row index i runs with y.

def _dark(mask, low=LOW, high=HIGH) -> np.ndarray:
    return np.where(np.asarray(mask, bool), low, high)


def case_layout(k: int) -> BlockGrid:
    """Reference layouts 1-4 on an 8 x 8 grid of 0.125 blocks.

    1. central 4 x 4 inclusion;
    2. central 2 x 4 inclusion plus a 2 x 4 inclusion split over the corners;
    3. a horizontal low layer two blocks thick between two high layers;
    4. an L-shaped inclusion of four 2 x 2 tiles.
    """
    mask = np.zeros((8, 8), bool)
    if k == 1:
        mask[2:6, 2:6] = True
    elif k == 2:
        mask[3:5, 2:6] = True
        mask[np.ix_([7, 0], [6, 7, 0, 1])] = True
    elif k == 3:
        mask[3:5, :] = True
    elif k == 4:
        coarse = np.array([[1, 1, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0]], bool)
        mask = np.kron(coarse, np.ones((2, 2), bool))
    else:
        raise ValueError(f"no layout {k}; choose 1-4")
    return from_array(_dark(mask))


def convergence_case(name: str) -> BlockGrid:
    """Layouts 1 and 4 on 4 x 4 ("A", "B") and 16 x 16 ("C", "D") grids."""
    name = name.upper()
    coarse = {"A": 1, "C": 1, "B": 4, "D": 4}
    if name not in coarse:
        raise ValueError(f"no convergence case {name!r}; choose A-D")
    D8 = case_layout(coarse[name]).D
    if name in "AB":
        return from_array(D8[::2, ::2])
    return refine(from_array(D8), 2)
