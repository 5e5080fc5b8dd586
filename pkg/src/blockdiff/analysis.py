"""Error metrics, principal directions and the solver comparison harness."""
from __future__ import annotations

import hashlib
import statistics
from dataclasses import dataclass, field

import numpy as np

from . import fvm_solver, sa_solver
from .geometry import convergence_case
from .grid import BlockGrid

BENCHMARK_NF = 1024


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorReport:
    """Entrywise relative error ``|(D - D_hat) / D_hat|``.

    Entries where both tensors vanish (below ``atol``) are structural zeros:
    they report 0 and are flagged in ``structural_zero_mask``.
    """

    E: np.ndarray
    structural_zero_mask: np.ndarray

    def max(self) -> float:
        return float(self.E.max())


def relative_error(D, D_hat, atol: float = 1e-12) -> ErrorReport:
    D = np.asarray(D, float)
    D_hat = np.asarray(D_hat, float)
    if D.shape != (2, 2) or D_hat.shape != (2, 2):
        raise AnalysisError("relative_error expects two 2 x 2 tensors")
    ref_zero = np.abs(D_hat) < atol
    mask = ref_zero & (np.abs(D) < atol)
    if np.any(ref_zero & ~mask):
        bad = tuple(int(v) + 1 for v in np.argwhere(ref_zero & ~mask)[0])
        raise AnalysisError(f"entry {bad} is zero in the reference but not in the "
                            "compared tensor; relative error is undefined")
    E = np.zeros((2, 2))
    E[~mask] = np.abs((D[~mask] - D_hat[~mask]) / D_hat[~mask])
    return ErrorReport(E, mask)


@dataclass(frozen=True)
class PrincipalDecomposition:
    """``tensor = P diag(eigenvalues) P^T``.

    Columns of ``eigenvectors`` pair with the ascending ``eigenvalues`` and
    have a non-negative first component.  ``angle_deg`` is the anticlockwise
    rotation of the principal frame from the Cartesian axes, measured on the
    eigenvector nearest the x axis, so it lies in (-45, 45].
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    angle_deg: float

    def reconstruct(self) -> np.ndarray:
        P = self.eigenvectors
        return P @ np.diag(self.eigenvalues) @ P.T


def principal_directions(tensor, tol: float = 1e-8) -> PrincipalDecomposition:
    T = np.asarray(tensor, float)
    scale = max(np.abs(T).max(), np.finfo(float).tiny)
    if abs(T[0, 1] - T[1, 0]) > tol * scale:
        raise AnalysisError(f"tensor is not symmetric: |D12 - D21| = {abs(T[0, 1] - T[1, 0]):.3e}")
    S = 0.5 * (T + T.T)
    lam, P = np.linalg.eigh(S)
    if lam[1] - lam[0] <= tol * scale:
        # isotropic: every frame is principal, keep the Cartesian one
        P = np.eye(2)
    for c in range(2):
        v = P[:, c]
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            P[:, c] = -v
    near_x = 0 if abs(P[0, 0]) >= abs(P[0, 1]) else 1
    v = P[:, near_x]
    angle = float(np.degrees(np.arctan2(v[1], v[0])))
    if angle <= -45.0 + 1e-12:
        angle += 90.0
    return PrincipalDecomposition(lam, P, angle)


# --- benchmarking -----------------------------------------------------------

_benchmark_cache: dict[str, np.ndarray] = {}


def _mesh_key(grid: BlockGrid, nf: int) -> str:
    mesh = fvm_solver.build_mesh(grid, nf)
    h = hashlib.sha256(np.ascontiguousarray(mesh.D_elem).tobytes())
    h.update(np.array([mesh.h_x, mesh.h_y, mesh.x0, mesh.y0, nf]).tobytes())
    return h.hexdigest()


def benchmark_tensor(grid: BlockGrid, nf: int = BENCHMARK_NF) -> np.ndarray:
    """Fine-mesh finite volume tensor, memoised on the meshed medium.

    Grids describing the same medium at different block resolutions share
    one entry.
    """
    key = _mesh_key(grid, nf)
    if key not in _benchmark_cache:
        _benchmark_cache[key] = fvm_solver.compute_fvm(grid, nf).tensor
    return _benchmark_cache[key].copy()


@dataclass(frozen=True)
class BenchmarkReport:
    sa: sa_solver.EffectiveTensor
    fvm: fvm_solver.EffectiveTensor
    sa_time: float
    fvm_time: float
    sa_size: int
    fvm_size: int
    mutual_error: ErrorReport


def _median_run(fn, repeats: int):
    results = [fn() for _ in range(max(1, repeats))]
    return results[0], statistics.median(r.wall_time for r in results)


def benchmark(grid: BlockGrid, sa_params: sa_solver.SolverParams, fvm_density: int,
              repeats: int = 10) -> BenchmarkReport:
    """Median wall times of both pipelines and the SA error relative to FVM."""
    sa, t_sa = _median_run(lambda: sa_solver.compute(grid, sa_params), repeats)
    fv, t_fv = _median_run(lambda: fvm_solver.compute_fvm(grid, fvm_density), repeats)
    return BenchmarkReport(sa, fv, t_sa, t_fv, sa.system_size, fv.system_size,
                           relative_error(sa.tensor, fv.tensor, atol=1e-10))


@dataclass(frozen=True)
class StudyRow:
    case: str
    method: str
    N: int
    N_eig: int | None
    N_F: int | None
    tensor: np.ndarray
    error: ErrorReport
    wall_time: float
    system_size: int

    def as_dict(self) -> dict:
        E = self.error.E
        return {"case": self.case, "method": self.method, "N": self.N,
                "N_eig": self.N_eig, "N_F": self.N_F,
                "D11": self.tensor[0, 0], "D12": self.tensor[0, 1],
                "D21": self.tensor[1, 0], "D22": self.tensor[1, 1],
                "E11": E[0, 0], "E12": E[0, 1], "E21": E[1, 0], "E22": E[1, 1],
                "wall_time_s": self.wall_time, "system_size": self.system_size}


DEFAULT_RESOLUTIONS = {"A": (4, 8, 16, 32, 64), "B": (4, 8, 16, 32, 64),
                       "C": (4, 8, 16), "D": (4, 8, 16)}


@dataclass
class ConvergenceStudy:
    case: str
    benchmark: np.ndarray
    rows: list[StudyRow] = field(default_factory=list)

    def select(self, method: str) -> list[StudyRow]:
        return [r for r in self.rows if r.method == method]


def convergence_study(case, resolutions=None, benchmark_nf: int = BENCHMARK_NF,
                      neig_cap: int | None = None, repeats: int = 1,
                      methods=("sa", "fvm")) -> ConvergenceStudy:
    """Errors of both solvers against the fine-mesh benchmark.

    ``case`` is a letter A-D or a :class:`BlockGrid`.  For ``N`` abscissas per
    interface the finite volume mesh has ``N`` nodes per block edge, so both
    methods sample interfaces at the same spacing.  ``N_eig`` is the upper
    limit ``2 N - 3``, optionally clipped to ``neig_cap``.
    """
    if isinstance(case, BlockGrid):
        grid, label = case, "grid"
        resolutions = resolutions or (4, 8, 16)
    else:
        label = str(case).upper()
        grid = convergence_case(label)
        resolutions = resolutions or DEFAULT_RESOLUTIONS[label]
    if grid.m != grid.n or not grid.is_uniform():
        raise AnalysisError("convergence studies need a square grid of equal blocks")
    ref = benchmark_tensor(grid, benchmark_nf)
    study = ConvergenceStudy(label, ref)
    for N in resolutions:
        if "sa" in methods:
            neig = 2 * N - 3 if neig_cap is None else min(2 * N - 3, neig_cap)
            params = sa_solver.SolverParams(N, N, neig)
            res, t = _median_run(lambda: sa_solver.compute(grid, params), repeats)
            study.rows.append(StudyRow(label, "sa", N, neig, None, res.tensor,
                                       relative_error(res.tensor, ref), t, res.system_size))
        if "fvm" in methods:
            nf = grid.n * N
            res, t = _median_run(lambda: fvm_solver.compute_fvm(grid, nf), repeats)
            study.rows.append(StudyRow(label, "fvm", N, None, nf, res.tensor,
                                       relative_error(res.tensor, ref), t, res.system_size))
    return study
