"""Semi-analytical interface-flux solver for the periodic cell problem.

Each block carries the Laplace solution of a pure-Neumann problem whose
boundary data are the unknown normal fluxes on its four sides.  The fluxes
are sampled at midpoint abscissas; enforcing continuity of the solution at
every abscissa, zero net flux per block and a gauge condition gives a square
sparse system shared by both unit load directions.

Unknown layout (0-based ``i`` = block row, ``j`` = block column):

* ``g[i, j, p]`` -- flux ``D dv/dx`` on the vertical line ``x = x_j`` of row
  ``i`` at the ``p``-th y-abscissa; line ``x_n`` is identified with ``x_0``.
* ``q[i, j, p]`` -- flux ``D dv/dy`` on the horizontal line ``y = y_i`` of
  column ``j`` at the ``p``-th x-abscissa; line ``y_m`` is identified with
  ``y_0``.
* ``K[i, j]`` -- the additive constant of block ``(i, j)``.

They are stored as all ``g`` (ordered by ``i*n + j``), then all ``q``
(ordered by ``j*m + i``), then ``K`` row-major.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import BlockGrid
from .quadrature import midpoint_rule

NEIG_CAP = 100


class SolverError(RuntimeError):
    """The linear system could not be solved."""


class ParameterError(ValueError):
    """Solver parameters violate the truncation window."""


@dataclass(frozen=True)
class SolverParams:
    """Abscissas per block side and series truncation order.

    ``max(N_x, N_y) - 1 <= N_eig <= 2 min(N_x, N_y) - 3`` must hold: below
    the window the system is singular, above it the midpoint rule aliases.
    """

    N_x: int
    N_y: int
    N_eig: int

    def __post_init__(self):
        if self.N_x < 2 or self.N_y < 2:
            raise ParameterError(f"N_x and N_y must be >= 2, got {self.N_x}, {self.N_y}")
        lo, hi = neig_window(self.N_x, self.N_y)
        if not lo <= self.N_eig <= hi:
            raise ParameterError(
                f"N_eig={self.N_eig} outside the admissible window "
                f"max(N_x,N_y)-1 <= N_eig <= 2*min(N_x,N_y)-3, i.e. [{lo}, {hi}]")

    @classmethod
    def auto(cls, N_x: int, N_y: int | None = None) -> SolverParams:
        N_y = N_x if N_y is None else N_y
        return cls(N_x, N_y, default_neig(N_x, N_y))


def neig_window(N_x: int, N_y: int) -> tuple[int, int]:
    return max(N_x, N_y) - 1, 2 * min(N_x, N_y) - 3


def default_neig(N_x: int, N_y: int) -> int:
    """``min(2 min(N_x, N_y) - 3, 100)``, checked against the window."""
    if N_x < 2 or N_y < 2:
        raise ParameterError(f"N_x and N_y must be >= 2, got {N_x}, {N_y}")
    lo, hi = neig_window(N_x, N_y)
    if lo > hi:
        raise ParameterError(
            f"empty N_eig window for N_x={N_x}, N_y={N_y}: "
            f"max(N_x,N_y)-1 = {lo} > 2*min(N_x,N_y)-3 = {hi}")
    return max(lo, min(hi, NEIG_CAP))


# --- hyperbolic ratios ------------------------------------------------------

def _cosh_over_sinh(alpha, beta):
    """cosh(alpha)/sinh(beta) for 0 <= |alpha| <= beta, beta > 0, overflow-free."""
    a = np.abs(alpha)
    return np.exp(a - beta) * (1.0 + np.exp(-2.0 * a)) / -np.expm1(-2.0 * beta)


def _sinh_over_sinh(alpha, beta):
    a = np.abs(alpha)
    return np.sign(alpha) * np.exp(a - beta) * -np.expm1(-2.0 * a) / -np.expm1(-2.0 * beta)


# --- single-block basis -----------------------------------------------------
#
# Local coordinates X in [0, l], Y in [0, h].  The block solution is
#     v = K + (1/D) * sum_s phi_s(X, Y) * f_s
# where f = [g_left (N_y), g_right (N_y), q_bottom (N_x), q_top (N_x)].

@dataclass(frozen=True)
class _BlockBasis:
    h: float
    l: float
    N_x: int
    N_y: int
    N_eig: int

    @property
    def rx(self):
        return midpoint_rule(0.0, self.l, self.N_x)

    @property
    def ry(self):
        return midpoint_rule(0.0, self.h, self.N_y)

    def _modes(self):
        k = np.arange(1, self.N_eig + 1, dtype=float)
        return k * np.pi

    def values(self, X, Y) -> np.ndarray:
        """phi at points (X, Y); shape ``(npts, 2 N_y + 2 N_x)``."""
        X = np.atleast_1d(np.asarray(X, float))[:, None, None]
        Y = np.atleast_1d(np.asarray(Y, float))[:, None, None]
        h, l = self.h, self.l
        kp = self._modes()[None, None, :]
        yp = self.ry.points[None, :, None]
        xp = self.rx.points[None, :, None]
        wy = 2.0 * self.ry.weights / h
        wx = 2.0 * self.rx.weights / l

        cy = np.cos(kp * yp / h) * np.cos(kp * Y / h) / kp
        left = -(X[..., 0] - l) ** 2 / (4 * l) - h * np.sum(
            cy * _cosh_over_sinh(kp * (X - l) / h, kp * l / h), axis=-1)
        right = X[..., 0] ** 2 / (4 * l) + h * np.sum(
            cy * _cosh_over_sinh(kp * X / h, kp * l / h), axis=-1)
        cx = np.cos(kp * xp / l) * np.cos(kp * X / l) / kp
        bottom = -(Y[..., 0] - h) ** 2 / (4 * h) - l * np.sum(
            cx * _cosh_over_sinh(kp * (Y - h) / l, kp * h / l), axis=-1)
        top = Y[..., 0] ** 2 / (4 * h) + l * np.sum(
            cx * _cosh_over_sinh(kp * Y / l, kp * h / l), axis=-1)
        return np.hstack([left * wy, right * wy, bottom * wx, top * wx])

    def gradients(self, X, Y) -> tuple[np.ndarray, np.ndarray]:
        """(d phi/dX, d phi/dY) at points, each ``(npts, 2 N_y + 2 N_x)``."""
        X = np.atleast_1d(np.asarray(X, float))[:, None, None]
        Y = np.atleast_1d(np.asarray(Y, float))[:, None, None]
        h, l = self.h, self.l
        kp = self._modes()[None, None, :]
        yp = self.ry.points[None, :, None]
        xp = self.rx.points[None, :, None]
        wy = 2.0 * self.ry.weights / h
        wx = 2.0 * self.rx.weights / l
        X0, Y0 = X[..., 0], Y[..., 0]

        cyy = np.cos(kp * yp / h) * np.cos(kp * Y / h)
        syy = np.cos(kp * yp / h) * np.sin(kp * Y / h)
        cxx = np.cos(kp * xp / l) * np.cos(kp * X / l)
        sxx = np.cos(kp * xp / l) * np.sin(kp * X / l)
        bl, bh = kp * l / h, kp * h / l

        dx_left = -(X0 - l) / (2 * l) - np.sum(cyy * _sinh_over_sinh(kp * (X - l) / h, bl), -1)
        dx_right = X0 / (2 * l) + np.sum(cyy * _sinh_over_sinh(kp * X / h, bl), -1)
        dx_bottom = np.sum(sxx * _cosh_over_sinh(kp * (Y - h) / l, bh), -1)
        dx_top = -np.sum(sxx * _cosh_over_sinh(kp * Y / l, bh), -1)

        dy_left = np.sum(syy * _cosh_over_sinh(kp * (X - l) / h, bl), -1)
        dy_right = -np.sum(syy * _cosh_over_sinh(kp * X / h, bl), -1)
        dy_bottom = -(Y0 - h) / (2 * h) - np.sum(cxx * _sinh_over_sinh(kp * (Y - h) / l, bh), -1)
        dy_top = Y0 / (2 * h) + np.sum(cxx * _sinh_over_sinh(kp * Y / l, bh), -1)

        gx = np.hstack([dx_left * wy, dx_right * wy, dx_bottom * wx, dx_top * wx])
        gy = np.hstack([dy_left * wy, dy_right * wy, dy_bottom * wx, dy_top * wx])
        return gx, gy

    def boundary_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Local abscissas on the four sides, in flux ordering."""
        ys, xs = self.ry.points, self.rx.points
        X = np.concatenate([np.zeros(self.N_y), np.full(self.N_y, self.l), xs, xs])
        Y = np.concatenate([ys, ys, np.zeros(self.N_x), np.full(self.N_x, self.h)])
        return X, Y

    def integrals(self) -> np.ndarray:
        """Integral of phi over the block.

        The cosine-series terms integrate to zero; only the quadratic terms
        survive.
        """
        h, l = self.h, self.l
        wy, wx = self.ry.weights, self.rx.weights
        return np.concatenate([-l * l * wy / 6, l * l * wy / 6,
                               -h * h * wx / 6, h * h * wx / 6])

    def flux_integrals(self) -> np.ndarray:
        """Integrated net inflow weights (solvability condition)."""
        wy, wx = self.ry.weights, self.rx.weights
        return np.concatenate([wy, -wy, wx, -wx])

    def mean_gradient_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact integrals of d phi/dX and d phi/dY over the block."""
        h, l = self.h, self.l
        kp = self._modes()
        odd = (1.0 - (-1.0) ** np.arange(1, self.N_eig + 1)) / kp ** 2
        wy = 2.0 * self.ry.weights / h
        wx = 2.0 * self.rx.weights / l
        cy = np.cos(np.outer(self.ry.points, kp) / h) @ odd
        cx = np.cos(np.outer(self.rx.points, kp) / l) @ odd
        quarter = h * l / 4
        ix = np.concatenate([quarter * wy, quarter * wy, l * l * cx * wx, -l * l * cx * wx])
        iy = np.concatenate([h * h * cy * wy, -h * h * cy * wy, quarter * wx, quarter * wx])
        return ix, iy


class _BasisData(NamedTuple):
    basis: _BlockBasis
    E: np.ndarray       # phi at the block's own boundary abscissas
    ix: np.ndarray
    iy: np.ndarray
    flux: np.ndarray
    integ: np.ndarray


@lru_cache(maxsize=256)
def _block_basis(h: float, l: float, N_x: int, N_y: int, N_eig: int) -> _BasisData:
    basis = _BlockBasis(h, l, N_x, N_y, N_eig)
    E = basis.values(*basis.boundary_points())
    ix, iy = basis.mean_gradient_weights()
    data = _BasisData(basis, E, ix, iy, basis.flux_integrals(), basis.integrals())
    for arr in data[1:]:
        arr.setflags(write=False)
    return data


# --- global system ----------------------------------------------------------

@dataclass(frozen=True)
class IndexMap:
    """Positions of the unknowns in the solution vector."""

    m: int
    n: int
    N_x: int
    N_y: int

    @property
    def n_g(self) -> int:
        return self.m * self.n * self.N_y

    @property
    def n_q(self) -> int:
        return self.m * self.n * self.N_x

    @property
    def size(self) -> int:
        return self.m * self.n * (self.N_x + self.N_y + 1)

    def g(self, i, j, p=None):
        base = (np.asarray(i) * self.n + np.asarray(j)) * self.N_y
        return base if p is None else base + p

    def q(self, i, j, p=None):
        base = self.n_g + (np.asarray(j) * self.m + np.asarray(i)) * self.N_x
        return base if p is None else base + p

    def K(self, i, j):
        return self.n_g + self.n_q + np.asarray(i) * self.n + np.asarray(j)

    def local(self, i: int, j: int) -> np.ndarray:
        """Flux unknowns of block (i, j): left, right, bottom, top sides."""
        m, n = self.m, self.n
        return np.concatenate([
            self.g(i, j) + np.arange(self.N_y),
            self.g(i, (j + 1) % n) + np.arange(self.N_y),
            self.q(i, j) + np.arange(self.N_x),
            self.q((i + 1) % m, j) + np.arange(self.N_x),
        ])

    def local_all(self) -> np.ndarray:
        """:meth:`local` for every block at once, shape ``(m, n, 2 N_y + 2 N_x)``."""
        m, n = self.m, self.n
        i, j = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
        py, px = np.arange(self.N_y), np.arange(self.N_x)
        return np.concatenate([
            self.g(i, j)[..., None] + py,
            self.g(i, (j + 1) % n)[..., None] + py,
            self.q(i, j)[..., None] + px,
            self.q((i + 1) % m, j)[..., None] + px,
        ], axis=-1)


def _check(grid: BlockGrid, params: SolverParams) -> None:
    if grid.m < 1 or grid.n < 1:
        raise ParameterError("empty grid")
    if not isinstance(params, SolverParams):
        raise TypeError("params must be a SolverParams")


def _bases(grid: BlockGrid, params: SolverParams):
    """Per-block cached basis data, shared between equal-sized blocks."""
    h, l = grid.h, grid.l
    return [[_block_basis(float(h[i]), float(l[j]), params.N_x, params.N_y, params.N_eig)
             for j in range(grid.n)] for i in range(grid.m)]


def assemble_matrix(grid: BlockGrid, params: SolverParams) -> sp.csc_matrix:
    """Coefficient matrix, identical for both load directions.

    Rows follow the unknown layout: the row of ``g[i, j, p]`` holds continuity
    across the vertical line carrying it, likewise for ``q``; the row of
    ``K[i, j]`` holds the zero-net-flux condition of block ``(i, j)``, except
    for the last block whose row fixes the mean of the solution.
    """
    _check(grid, params)
    idx = IndexMap(grid.m, grid.n, params.N_x, params.N_y)
    bases = _bases(grid, params)
    nloc = 2 * (params.N_x + params.N_y)
    sign = np.concatenate([np.ones(params.N_y), -np.ones(params.N_y),
                           np.ones(params.N_x), -np.ones(params.N_x)])
    rows, cols, vals = [], [], []
    last = (grid.m - 1, grid.n - 1)
    A_total = grid.area
    locs = idx.local_all()
    for i in range(grid.m):
        for j in range(grid.n):
            basis, E, _, _, flux, integ = bases[i][j]
            D = grid.D[i, j]
            loc = locs[i, j]
            k_ij = int(idx.K(i, j))
            # continuity: sides on the block's left/bottom enter with +, right/top with -
            rows.append(np.repeat(loc, nloc))
            cols.append(np.tile(loc, nloc))
            vals.append((sign[:, None] * E / D).ravel())
            rows.append(loc)
            cols.append(np.full(nloc, k_ij))
            vals.append(sign)
            if (i, j) != last:
                rows.append(np.full(nloc, k_ij))
                cols.append(loc)
                vals.append(flux / D)
            # mean of v over the whole cell, normalised by the cell area
            rows.append(np.full(nloc + 1, int(idx.K(*last))))
            cols.append(np.append(loc, k_ij))
            vals.append(np.append(integ / D, basis.h * basis.l) / A_total)
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(idx.size, idx.size))
    return A.tocsc()


def assemble_rhs(grid: BlockGrid, params: SolverParams, xi: str) -> np.ndarray:
    """Right-hand side for load direction ``xi`` in {"x", "y"}."""
    _check(grid, params)
    idx = IndexMap(grid.m, grid.n, params.N_x, params.N_y)
    b = np.zeros(idx.size)
    i_all, j_all = np.arange(grid.m), np.arange(grid.n)
    last = idx.K(grid.m - 1, grid.n - 1)
    if xi == "x":
        # v jumps by x_n - x_0 across the periodic line x_0 == x_n
        rows = (idx.g(i_all, 0)[:, None] + np.arange(params.N_y)).ravel()
        b[rows] = -grid.width
        b[last] = 0.5 * (grid.x_breaks[0] + grid.x_breaks[-1])
    elif xi == "y":
        rows = (idx.q(0, j_all)[:, None] + np.arange(params.N_x)).ravel()
        b[rows] = -grid.height
        b[last] = 0.5 * (grid.y_breaks[0] + grid.y_breaks[-1])
    else:
        raise ValueError(f"xi must be 'x' or 'y', got {xi!r}")
    return b


def assemble(grid: BlockGrid, params: SolverParams, xi: str):
    """``(A_S, b_S)`` for one load direction."""
    return assemble_matrix(grid, params), assemble_rhs(grid, params, xi)


@dataclass(frozen=True)
class InterfaceSolution:
    """Solved flux samples and block constants for one load direction.

    ``g_vals[i, j]`` are the ``N_y`` samples on line ``x_j`` of row ``i``;
    ``q_vals[i, j]`` the ``N_x`` samples on line ``y_i`` of column ``j``.
    """

    xi: str
    g_vals: np.ndarray
    q_vals: np.ndarray
    K: np.ndarray
    x_S: np.ndarray
    index_map: IndexMap

    @classmethod
    def unpack(cls, x: np.ndarray, idx: IndexMap, xi: str) -> InterfaceSolution:
        m, n = idx.m, idx.n
        g = x[:idx.n_g].reshape(m, n, idx.N_y)
        q = x[idx.n_g:idx.n_g + idx.n_q].reshape(n, m, idx.N_x).transpose(1, 0, 2)
        K = x[idx.n_g + idx.n_q:].reshape(m, n)
        return cls(xi, g.copy(), q.copy(), K.copy(), x.copy(), idx)

    def block_fluxes(self, i: int, j: int) -> np.ndarray:
        idx = self.index_map
        return self.x_S[idx.local(i, j)]


def _nested_dissection(idx: IndexMap) -> tuple[np.ndarray, np.ndarray]:
    """Geometric fill-reducing ordering for the factorisation.

    Interface lines are natural separators: the cell is first cut open along
    the periodic lines ``x_0`` and ``y_0``, then block regions are bisected
    recursively and each cutting line is ordered after both halves.  Each
    ``K[i, j]`` travels with the left segment of its block, paired with that
    segment's continuity row, while the first flux sample of the segment takes
    the block's solvability row; this keeps every pivot block-local.

    Returns ``(rows, cols)`` so that ``A[rows][:, cols]`` is to be factorised.
    """
    m, n = idx.m, idx.n
    order: list[np.ndarray] = []

    def vertical(i, j):
        return np.append(idx.g(i, j) + np.arange(idx.N_y), idx.K(i, j))

    def horizontal(i, j):
        return idx.q(i, j) + np.arange(idx.N_x)

    def bisect(i0, i1, j0, j1):
        if (i1 - i0) * (j1 - j0) == 1:
            return
        if j1 - j0 >= i1 - i0:
            jm = (j0 + j1) // 2
            bisect(i0, i1, j0, jm)
            bisect(i0, i1, jm, j1)
            order.extend(vertical(i, jm) for i in range(i0, i1))
        else:
            im = (i0 + i1) // 2
            bisect(i0, im, j0, j1)
            bisect(im, i1, j0, j1)
            order.extend(horizontal(im, j) for j in range(j0, j1))

    bisect(0, m, 0, n)
    order.extend(vertical(i, 0) for i in range(m))
    order.extend(horizontal(0, j) for j in range(n))
    cols = np.concatenate(order)
    k_last = int(idx.K(m - 1, n - 1))
    cols = np.append(cols[cols != k_last], k_last)

    pair = np.arange(idx.size)
    g0 = idx.g(*np.divmod(np.arange(m * n - 1), n))
    kk = idx.K(*np.divmod(np.arange(m * n - 1), n))
    pair[g0], pair[kk] = kk, g0
    return pair[cols], cols


@lru_cache(maxsize=32)
def _ordering(m: int, n: int, N_x: int, N_y: int):
    rows, cols = _nested_dissection(IndexMap(m, n, N_x, N_y))
    inv_r, inv_c = np.empty_like(rows), np.empty_like(cols)
    inv_r[rows] = np.arange(rows.size)
    inv_c[cols] = np.arange(cols.size)
    for arr in (rows, cols, inv_r, inv_c):
        arr.setflags(write=False)
    return rows, cols, inv_r, inv_c


def _factorize(A, idx: IndexMap, pivot_thresh: float = 0.0):
    """Sparse LU in the dissection order.

    With ``pivot_thresh = 0`` pivots stay on the diagonal and the fill is that
    of the ordering; one refinement step restores full accuracy.  Row
    interchanges (``pivot_thresh = 1``) are the robust but slower choice.
    """
    rows, cols, inv_r, inv_c = _ordering(idx.m, idx.n, idx.N_x, idx.N_y)
    C = A.tocoo()
    M = sp.csc_matrix((C.data, (inv_r[C.row], inv_c[C.col])), shape=A.shape)
    try:
        lu = spla.splu(M, permc_spec="NATURAL", diag_pivot_thresh=pivot_thresh,
                       options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise SolverError(
            f"coefficient matrix is numerically singular ({exc}); check that "
            "max(N_x,N_y)-1 <= N_eig <= 2*min(N_x,N_y)-3") from exc

    def solve_with(B):
        rhs = np.ascontiguousarray(B[rows])
        Y = lu.solve(rhs)
        Y += lu.solve(rhs - M @ Y)
        X = np.empty_like(B)
        X[cols] = Y
        return X
    return solve_with


@dataclass(frozen=True)
class SASolution:
    grid: BlockGrid
    params: SolverParams
    x: InterfaceSolution
    y: InterfaceSolution
    residual_norm_x: float
    residual_norm_y: float

    def __getitem__(self, xi: str) -> InterfaceSolution:
        return {"x": self.x, "y": self.y}[xi]


def solve(grid: BlockGrid, params: SolverParams, A=None, b_x=None, b_y=None) -> SASolution:
    """Factorise once and solve for both load directions."""
    if A is None:
        A = assemble_matrix(grid, params)
    b_x = assemble_rhs(grid, params, "x") if b_x is None else b_x
    b_y = assemble_rhs(grid, params, "y") if b_y is None else b_y
    idx = IndexMap(grid.m, grid.n, params.N_x, params.N_y)
    B = np.column_stack([b_x, b_y])
    scale = max(1.0, np.linalg.norm(B))
    for thresh, tol in ((0.0, 1e-11), (1.0, 1e-6)):
        with np.errstate(all="ignore"):
            try:
                X = _factorize(A, idx, thresh)(B)
            except SolverError:
                if thresh:
                    raise
                continue
            R = A @ X - B
        if np.all(np.isfinite(X)) and np.linalg.norm(R) <= tol * scale:
            break
    else:
        raise SolverError(
            "coefficient matrix is numerically singular; check that "
            "max(N_x,N_y)-1 <= N_eig <= 2*min(N_x,N_y)-3")
    return SASolution(grid, params,
                      InterfaceSolution.unpack(X[:, 0], idx, "x"),
                      InterfaceSolution.unpack(X[:, 1], idx, "y"),
                      float(np.linalg.norm(R[:, 0])), float(np.linalg.norm(R[:, 1])))


# --- evaluation -------------------------------------------------------------

def _locate(grid: BlockGrid, x, y):
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    xb, yb = grid.x_breaks, grid.y_breaks
    if np.any((x < xb[0]) | (x > xb[-1]) | (y < yb[0]) | (y > yb[-1])):
        raise ValueError("point outside the unit cell")
    j = np.minimum(np.searchsorted(xb, x, side="right") - 1, grid.n - 1)
    i = np.minimum(np.searchsorted(yb, y, side="right") - 1, grid.m - 1)
    return x, y, i, j


def evaluate_v(sol: InterfaceSolution, grid: BlockGrid, params: SolverParams,
               x, y, block: tuple[int, int] | None = None) -> np.ndarray:
    """Transformed solution ``v = psi + xi`` at the given points.

    ``block`` forces evaluation of one block's series (useful on interfaces,
    where either neighbour may be used).
    """
    x, y, i, j = _locate(grid, x, y)
    if block is not None:
        i = np.full_like(i, block[0])
        j = np.full_like(j, block[1])
    out = np.empty(x.shape)
    for bi, bj in set(zip(i.tolist(), j.tolist())):
        sel = (i == bi) & (j == bj)
        basis = _block_basis(float(grid.h[bi]), float(grid.l[bj]),
                             params.N_x, params.N_y, params.N_eig)[0]
        phi = basis.values(x[sel] - grid.x_breaks[bj], y[sel] - grid.y_breaks[bi])
        out[sel] = phi @ sol.block_fluxes(bi, bj) / grid.D[bi, bj] + sol.K[bi, bj]
    return out


def evaluate_psi(sol: InterfaceSolution, grid: BlockGrid, params: SolverParams,
                 x, y, block=None) -> np.ndarray:
    v = evaluate_v(sol, grid, params, x, y, block)
    return v - (np.atleast_1d(np.asarray(x, float)) if sol.xi == "x"
                else np.atleast_1d(np.asarray(y, float)))


def evaluate_grad_v(sol: InterfaceSolution, grid: BlockGrid, params: SolverParams,
                    x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y, i, j = _locate(grid, x, y)
    gx, gy = np.empty(x.shape), np.empty(x.shape)
    for bi, bj in set(zip(i.tolist(), j.tolist())):
        sel = (i == bi) & (j == bj)
        basis = _block_basis(float(grid.h[bi]), float(grid.l[bj]),
                             params.N_x, params.N_y, params.N_eig)[0]
        dX, dY = basis.gradients(x[sel] - grid.x_breaks[bj], y[sel] - grid.y_breaks[bi])
        f = sol.block_fluxes(bi, bj) / grid.D[bi, bj]
        gx[sel], gy[sel] = dX @ f, dY @ f
    return gx, gy


# --- effective tensor -------------------------------------------------------

@dataclass(frozen=True)
class EffectiveTensor:
    """2 x 2 effective diffusivity with solver diagnostics."""

    tensor: np.ndarray
    residual_norm_x: float = 0.0
    residual_norm_y: float = 0.0
    wall_time: float = 0.0
    method: str = "sa"
    system_size: int = 0

    @property
    def d11(self) -> float:
        return float(self.tensor[0, 0])

    @property
    def d12(self) -> float:
        return float(self.tensor[0, 1])

    @property
    def d21(self) -> float:
        return float(self.tensor[1, 0])

    @property
    def d22(self) -> float:
        return float(self.tensor[1, 1])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.tensor + self.tensor.T))


def effective_tensor(solution: SASolution) -> np.ndarray:
    """Closed-form block integrals of ``D grad v``.

    Per block, ``D int dv/dx = D [A (a_0 + b_0)/4 + l^2 sum_k (c_k - d_k)
    (1 - (-1)^k) / (k pi)^2]`` and symmetrically for ``dv/dy``; with ``D``
    cancelling against the ``1/D`` in the coefficients this is linear in the
    flux samples alone.
    """
    grid, params = solution.grid, solution.params
    bases = _bases(grid, params)
    IX = np.array([[b.ix for b in row] for row in bases])
    IY = np.array([[b.iy for b in row] for row in bases])
    locs = solution.x.index_map.local_all()
    T = np.zeros((2, 2))
    for col, sol in enumerate((solution.x, solution.y)):
        F = sol.x_S[locs]
        T[0, col] = np.sum(IX * F)
        T[1, col] = np.sum(IY * F)
    return T / grid.area


def effective_tensor_quadrature(solution: SASolution, order: int = 96) -> np.ndarray:
    """Gauss-Legendre integration of ``D grad v`` from the analytic gradient.

    Independent check of :func:`effective_tensor`.
    """
    grid, params = solution.grid, solution.params
    t, w = np.polynomial.legendre.leggauss(order)
    T = np.zeros((2, 2))
    for i in range(grid.m):
        for j in range(grid.n):
            h, l = grid.h[i], grid.l[j]
            basis = _block_basis(float(h), float(l), params.N_x, params.N_y, params.N_eig)[0]
            X = 0.5 * l * (t + 1)
            Y = 0.5 * h * (t + 1)
            XX, YY = np.meshgrid(X, Y, indexing="ij")
            W = np.outer(w, w).ravel() * 0.25 * h * l
            dX, dY = basis.gradients(XX.ravel(), YY.ravel())
            for col, sol in enumerate((solution.x, solution.y)):
                f = sol.block_fluxes(i, j)
                T[0, col] += W @ (dX @ f)
                T[1, col] += W @ (dY @ f)
    return T / grid.area


def compute(grid: BlockGrid, params: SolverParams) -> EffectiveTensor:
    """Assemble, solve and integrate; timing covers the whole pipeline."""
    t0 = time.perf_counter()
    sol = solve(grid, params)
    T = effective_tensor(sol)
    elapsed = time.perf_counter() - t0
    return EffectiveTensor(T, sol.residual_norm_x, sol.residual_norm_y, elapsed, "sa",
                           sol.x.index_map.size)
