"""Rectangular m x n block unit cell.

Block ``(i, j)`` (1-based in the maths, 0-based in the arrays) occupies
``[x_{j-1}, x_j] x [y_{i-1}, y_i]`` and carries a constant isotropic
diffusivity ``D[i-1, j-1]``.  Row 1 of an input file is block row 1, which
renderers draw at the top of the image.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GridError(ValueError):
    """Raised for malformed or physically invalid unit cells."""


@dataclass(frozen=True, eq=False)
class BlockGrid:
    """Immutable description of a block locally-isotropic unit cell.

    Attributes
    ----------
    x_breaks : ndarray, shape (n + 1,)
        Strictly increasing vertical interface coordinates ``x_0..x_n``.
    y_breaks : ndarray, shape (m + 1,)
        Strictly increasing horizontal interface coordinates ``y_0..y_m``.
    D : ndarray, shape (m, n)
        Block diffusivities, all positive.
    """

    x_breaks: np.ndarray
    y_breaks: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        x = np.array(self.x_breaks, dtype=float)
        y = np.array(self.y_breaks, dtype=float)
        D = np.array(self.D, dtype=float)
        if D.ndim != 2:
            raise GridError(f"D must be a 2-D array, got shape {D.shape}")
        for arr in (x, y, D):
            arr.setflags(write=False)
        object.__setattr__(self, "x_breaks", x)
        object.__setattr__(self, "y_breaks", y)
        object.__setattr__(self, "D", D)
        problems = validate(self)
        if problems:
            raise GridError("; ".join(problems))

    @property
    def m(self) -> int:
        return self.D.shape[0]

    @property
    def n(self) -> int:
        return self.D.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.D.shape

    @property
    def h(self) -> np.ndarray:
        """Block row heights ``h_i = y_i - y_{i-1}``."""
        return np.diff(self.y_breaks)

    @property
    def l(self) -> np.ndarray:  # noqa: E743
        """Block column widths ``l_j = x_j - x_{j-1}``."""
        return np.diff(self.x_breaks)

    @property
    def width(self) -> float:
        return float(self.x_breaks[-1] - self.x_breaks[0])

    @property
    def height(self) -> float:
        return float(self.y_breaks[-1] - self.y_breaks[0])

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def block_areas(self) -> np.ndarray:
        return np.outer(self.h, self.l)

    def block_of(self, x: float, y: float) -> tuple[int, int]:
        """Return the 0-based ``(i, j)`` of the block containing ``(x, y)``.

        Points on an interior breakpoint belong to the block on the
        greater-coordinate side; the outer edges ``x_n`` and ``y_m`` belong to
        the last column and row.
        """
        xb, yb = self.x_breaks, self.y_breaks
        if not (xb[0] <= x <= xb[-1] and yb[0] <= y <= yb[-1]):
            raise GridError(f"point ({x}, {y}) lies outside the unit cell")
        j = int(np.searchsorted(xb, x, side="right")) - 1
        i = int(np.searchsorted(yb, y, side="right")) - 1
        return min(i, self.m - 1), min(j, self.n - 1)

    def transpose(self) -> BlockGrid:
        """Swap the x and y axes."""
        return BlockGrid(self.y_breaks, self.x_breaks, self.D.T)

    def scaled(self, c: float) -> BlockGrid:
        return BlockGrid(self.x_breaks, self.y_breaks, c * self.D)

    def with_diffusivity(self, D) -> BlockGrid:
        return BlockGrid(self.x_breaks, self.y_breaks, D)

    def is_uniform(self) -> bool:
        return bool(np.allclose(self.h, self.h[0], rtol=1e-13, atol=0)
                    and np.allclose(self.l, self.l[0], rtol=1e-13, atol=0))

    def __eq__(self, other):
        if not isinstance(other, BlockGrid):
            return NotImplemented
        return (np.array_equal(self.x_breaks, other.x_breaks)
                and np.array_equal(self.y_breaks, other.y_breaks)
                and np.array_equal(self.D, other.D))

    def __hash__(self):
        return hash(self.digest())

    def digest(self) -> str:
        """SHA-256 of the canonical JSON serialisation."""
        return hashlib.sha256(to_json(self).encode()).hexdigest()


def validate(grid) -> list[str]:
    """List every violated invariant of ``grid``; empty when valid."""
    out = []
    D = np.asarray(grid.D, dtype=float)
    x = np.asarray(grid.x_breaks, dtype=float)
    y = np.asarray(grid.y_breaks, dtype=float)
    if D.ndim != 2 or D.shape[0] < 1 or D.shape[1] < 1:
        return [f"D must be a non-empty m x n array, got shape {D.shape}"]
    m, n = D.shape
    if x.shape != (n + 1,):
        out.append(f"x_breaks must have length n + 1 = {n + 1}, got {x.size}")
    if y.shape != (m + 1,):
        out.append(f"y_breaks must have length m + 1 = {m + 1}, got {y.size}")
    for name, arr in (("x", x), ("y", y)):
        if not np.all(np.isfinite(arr)):
            out.append(f"non-finite {name} breakpoint")
        for k in np.flatnonzero(np.diff(arr) <= 0):
            out.append(f"non-increasing breakpoint in {name} at index {k + 1}")
    for i, j in zip(*np.nonzero(~(D > 0) | ~np.isfinite(D))):
        out.append(f"non-positive diffusivity at ({i + 1},{j + 1})")
    return out


def new_uniform(m: int, n: int, D, x0: float = 0.0, xn: float = 1.0,
                y0: float = 0.0, ym: float = 1.0) -> BlockGrid:
    """Grid of ``m`` x ``n`` equal blocks on ``[x0, xn] x [y0, ym]``."""
    if m < 1 or n < 1:
        raise GridError(f"need m, n >= 1, got m={m}, n={n}")
    if not (xn > x0 and ym > y0):
        raise GridError("degenerate extents: require xn > x0 and ym > y0")
    D = np.asarray(D, dtype=float)
    if D.shape != (m, n):
        raise GridError(f"D has shape {D.shape}, expected {(m, n)}")
    return BlockGrid(np.linspace(x0, xn, n + 1), np.linspace(y0, ym, m + 1), D)


def from_array(D) -> BlockGrid:
    """Equal blocks on the unit square."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    return new_uniform(D.shape[0], D.shape[1], D)


def refine(grid: BlockGrid, k: int) -> BlockGrid:
    """Split every block into ``k`` x ``k`` equal sub-blocks (same medium)."""
    def split(b):
        return np.concatenate([np.linspace(b[s], b[s + 1], k + 1)[:-1]
                               for s in range(b.size - 1)] + [b[-1:]])
    return BlockGrid(split(grid.x_breaks), split(grid.y_breaks),
                     np.kron(grid.D, np.ones((k, k))))


# --- file formats -----------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def to_json(grid: BlockGrid) -> str:
    doc = {"x": [float(v) for v in grid.x_breaks],
           "y": [float(v) for v in grid.y_breaks],
           "D": [[float(v) for v in row] for row in grid.D]}
    return json.dumps(doc, separators=(",", ":"))


def from_json(text: str) -> BlockGrid:
    try:
        doc = json.loads(text)
        return BlockGrid(doc["x"], doc["y"], doc["D"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise GridError(f"malformed JSON grid: {exc}") from exc


def to_csv(grid: BlockGrid) -> str:
    """CSV holds only diffusivities; the domain is implied to be the unit
    square with equal blocks."""
    return "".join(",".join(_fmt(v) for v in row) + "\n" for row in grid.D)


def from_csv(text: str) -> BlockGrid:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        D = [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise GridError(f"malformed CSV grid: {exc}") from exc
    if not D or len({len(r) for r in D}) != 1:
        raise GridError("CSV grid must have rows of equal, non-zero length")
    return from_array(D)


def load(path) -> BlockGrid:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return from_json(text)
    return from_csv(text)


def save(grid: BlockGrid, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(to_json(grid) + "\n")
    else:
        path.write_text(to_csv(grid))
