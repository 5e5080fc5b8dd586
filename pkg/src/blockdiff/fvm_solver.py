"""Vertex-centred finite volume benchmark solver.

Nodes sit on a uniform periodic mesh whose lines pass through every block
interface, so each half-edge of a control volume lies inside one block.
Normal derivatives on control-volume faces use central differences between
the two nodes the face separates, giving a 5-point stencil; the tensor is
integrated from the bilinear interpolant of the nodal field.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import BlockGrid
from .sa_solver import EffectiveTensor, SolverError


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class FvmMesh:
    """Uniform periodic node set; nodes ``x_0 + k h_x``, ``k = 0..N_F_x - 1``.

    ``D_elem[q, p]`` is the diffusivity of element ``[x_p, x_p+1] x [y_q, y_q+1]``.
    """

    N_F_x: int
    N_F_y: int
    h_x: float
    h_y: float
    x0: float
    y0: float
    D_elem: np.ndarray

    @property
    def size(self) -> int:
        return self.N_F_x * self.N_F_y

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.x0 + self.h_x * np.arange(self.N_F_x),
                self.y0 + self.h_y * np.arange(self.N_F_y))


def _align(breaks: np.ndarray, N: int, axis: str) -> np.ndarray:
    h = (breaks[-1] - breaks[0]) / N
    k = (breaks - breaks[0]) / h
    kr = np.rint(k)
    bad = np.flatnonzero(np.abs(k - kr) > 1e-9 * max(1.0, N))
    if bad.size:
        b = int(bad[0])
        raise MeshError(f"{axis} interface {axis}_{b} = {breaks[b]!r} does not coincide "
                        f"with a node of the {N}-node mesh")
    return kr.astype(int)


def build_mesh(grid: BlockGrid, N_F_x: int, N_F_y: int | None = None) -> FvmMesh:
    N_F_y = N_F_x if N_F_y is None else N_F_y
    if N_F_x < 1 or N_F_y < 1:
        raise MeshError("node counts must be positive")
    kx = _align(grid.x_breaks, N_F_x, "x")
    ky = _align(grid.y_breaks, N_F_y, "y")
    col = np.repeat(np.arange(grid.n), np.diff(kx))
    row = np.repeat(np.arange(grid.m), np.diff(ky))
    D_elem = grid.D[np.ix_(row, col)]
    D_elem.setflags(write=False)
    return FvmMesh(N_F_x, N_F_y, grid.width / N_F_x, grid.height / N_F_y,
                   float(grid.x_breaks[0]), float(grid.y_breaks[0]), D_elem)


def _node(q, p, mesh):
    return (q % mesh.N_F_y) * mesh.N_F_x + (p % mesh.N_F_x)


def _face_coefficients(mesh: FvmMesh):
    """Summed diffusivity of the two half-edges on each face.

    ``ex[q, p]``: face between nodes (q, p) and (q, p+1), made of the
    half-edges in elements (q-1, p) and (q, p).
    ``ey[q, p]``: face between nodes (q, p) and (q+1, p).
    """
    D = mesh.D_elem
    ex = D + np.roll(D, 1, axis=0)
    ey = D + np.roll(D, 1, axis=1)
    return ex, ey


def assemble_fvm(mesh: FvmMesh, pin: int = 0):
    """Matrix and both right-hand sides; row ``pin`` is replaced by ``psi = 0``.

    Returns ``(A_F, b_x, b_y)``.
    """
    ny, nx = mesh.N_F_y, mesh.N_F_x
    hx, hy = mesh.h_x, mesh.h_y
    ex, ey = _face_coefficients(mesh)
    cx = ex * hy / (2 * hx)
    cy = ey * hx / (2 * hy)
    Q, P = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    me = _node(Q, P, mesh).ravel()
    east = _node(Q, P + 1, mesh).ravel()
    north = _node(Q + 1, P, mesh).ravel()
    cx, cy = cx.ravel(), cy.ravel()
    # each face couples its two nodes symmetrically
    rows = np.concatenate([me, east, me, east, me, north, me, north])
    cols = np.concatenate([east, me, me, east, north, me, me, north])
    vals = np.concatenate([cx, cx, -cx, -cx, cy, cy, -cy, -cy])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(mesh.size, mesh.size)).tolil()

    # source: divergence of D e_xi, i.e. outward face flux of the unit load
    fx = (ex * hy / 2).ravel()
    fy = (ey * hx / 2).ravel()
    b_x = np.zeros(mesh.size)
    np.add.at(b_x, me, -fx)
    np.add.at(b_x, east, fx)
    b_y = np.zeros(mesh.size)
    np.add.at(b_y, me, -fy)
    np.add.at(b_y, north, fy)

    A.rows[pin] = [pin]
    A.data[pin] = [1.0]
    b_x[pin] = b_y[pin] = 0.0
    return A.tocsc(), b_x, b_y


@dataclass(frozen=True)
class FvmField:
    """Nodal psi values, shape ``(N_F_y, N_F_x)``."""

    xi: str
    psi: np.ndarray


def solve_fvm(A, b_x, b_y, mesh: FvmMesh):
    """One factorisation, two right-hand sides.

    Returns ``(field_x, field_y, residual_x, residual_y)``.
    """
    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SolverError(f"finite volume matrix is singular: {exc}") from exc
    B = np.column_stack([b_x, b_y])
    X = lu.solve(B)
    R = np.linalg.norm(A @ X - B, axis=0)
    shape = (mesh.N_F_y, mesh.N_F_x)
    return (FvmField("x", X[:, 0].reshape(shape)), FvmField("y", X[:, 1].reshape(shape)),
            float(R[0]), float(R[1]))


def element_gradients(field: FvmField, mesh: FvmMesh):
    """Gradient of the bilinear interpolant at each element centroid."""
    u = field.psi
    ue = np.roll(u, -1, axis=1)
    un = np.roll(u, -1, axis=0)
    une = np.roll(ue, -1, axis=0)
    gx = (ue - u + une - un) / (2 * mesh.h_x)
    gy = (un - u + une - ue) / (2 * mesh.h_y)
    return gx, gy


def effective_tensor_fvm(field_x: FvmField, field_y: FvmField, mesh: FvmMesh) -> np.ndarray:
    T = np.empty((2, 2))
    D = mesh.D_elem
    cell = mesh.h_x * mesh.h_y
    area = cell * mesh.size
    for col, (f, e) in enumerate(((field_x, (1.0, 0.0)), (field_y, (0.0, 1.0)))):
        gx, gy = element_gradients(f, mesh)
        T[0, col] = np.sum(D * (gx + e[0])) * cell / area
        T[1, col] = np.sum(D * (gy + e[1])) * cell / area
    return T


def compute_fvm(grid: BlockGrid, N_F_x: int, N_F_y: int | None = None,
                pin: int = 0) -> EffectiveTensor:
    t0 = time.perf_counter()
    mesh = build_mesh(grid, N_F_x, N_F_y)
    A, b_x, b_y = assemble_fvm(mesh, pin)
    fx, fy, rx, ry = solve_fvm(A, b_x, b_y, mesh)
    T = effective_tensor_fvm(fx, fy, mesh)
    return EffectiveTensor(T, rx, ry, time.perf_counter() - t0, "fvm", mesh.size)
