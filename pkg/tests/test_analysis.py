import numpy as np
import pytest

from blockdiff import analysis as an
from blockdiff.grid import from_array
from blockdiff.sa_solver import SolverParams

CASE1 = np.array([[0.6473857, 0.0], [0.0, 0.6473857]])
CASE4 = np.array([[0.533, -0.0286], [-0.0286, 0.676]])


def test_relative_error_zero_on_equal():
    rep = an.relative_error(CASE1, CASE1)
    assert np.all(rep.E == 0)
    assert rep.structural_zero_mask.tolist() == [[False, True], [True, False]]


def test_relative_error_masks_structural_zeros():
    D = np.diag([0.651, 0.651])
    rep = an.relative_error(D, CASE1)
    assert rep.E[0, 1] == 0 and rep.E[1, 0] == 0
    assert rep.E[0, 0] == pytest.approx(abs(0.651 - 0.6473857) / 0.6473857)


def test_relative_error_uniform_scaling():
    rep = an.relative_error(1.01 * CASE4, CASE4)
    assert np.allclose(rep.E, 0.01, rtol=1e-12)
    assert rep.max() == pytest.approx(0.01)


def test_relative_error_undefined():
    with pytest.raises(an.AnalysisError, match="undefined"):
        an.relative_error([[1, 0.1], [0, 1]], np.eye(2))
    with pytest.raises(an.AnalysisError):
        an.relative_error(np.eye(3), np.eye(3))


def test_principal_directions_case4():
    pd = an.principal_directions(CASE4)
    assert pd.eigenvalues == pytest.approx([0.527, 0.682], abs=1e-3)
    assert pd.angle_deg == pytest.approx(10.9, abs=0.1)
    assert pd.eigenvectors[:, 0] == pytest.approx([0.982, 0.189], abs=1e-3)
    assert pd.eigenvectors[:, 1] == pytest.approx([0.189, -0.982], abs=1e-3)


def test_principal_directions_degenerate_and_diagonal():
    pd = an.principal_directions(np.eye(2))
    assert pd.eigenvalues.tolist() == [1, 1] and pd.angle_deg == 0
    pd = an.principal_directions(np.diag([0.775, 0.308]))
    assert pd.angle_deg == 0
    assert np.allclose(np.abs(pd.eigenvectors), [[0, 1], [1, 0]])


def test_principal_directions_rejects_asymmetric():
    with pytest.raises(an.AnalysisError, match="symmetric"):
        an.principal_directions([[1.0, 0.2], [0.1, 1.0]])


def test_principal_reconstruction():
    pd = an.principal_directions(CASE4)
    P = pd.eigenvectors
    assert np.allclose(P.T @ P, np.eye(2), atol=1e-10)
    assert np.allclose(pd.reconstruct(), CASE4, atol=1e-10)


def test_benchmark_homogeneous():
    rep = an.benchmark(from_array(np.full((2, 2), 0.4)), SolverParams.auto(4), 8, repeats=3)
    assert rep.sa_size == 4 * 9 and rep.fvm_size == 64
    assert np.allclose(rep.sa.tensor, rep.fvm.tensor, atol=1e-10)
    assert rep.mutual_error.max() < 1e-10
    assert rep.sa_time > 0 and rep.fvm_time > 0


def test_benchmark_tensors_repeat_exactly():
    grid = from_array([[0.1, 1.0], [1.0, 1.0]])
    a = an.benchmark(grid, SolverParams.auto(4), 16, repeats=1)
    b = an.benchmark(grid, SolverParams.auto(4), 16, repeats=1)
    assert np.array_equal(a.sa.tensor, b.sa.tensor) and np.array_equal(a.fvm.tensor, b.fvm.tensor)


def test_checkerboard_sizes():
    from blockdiff.geometry import checkerboard
    rep = an.benchmark(checkerboard(3), SolverParams(16, 16, 29), 48, repeats=1)
    assert rep.sa_size == 33 * 9 and rep.fvm_size == 256 * 9


def test_convergence_study_on_grid():
    grid = from_array([[0.1, 1.0], [1.0, 1.0]])
    study = an.convergence_study(grid, (4, 8), benchmark_nf=128)
    sa_rows, fv_rows = study.select("sa"), study.select("fvm")
    assert [r.N for r in sa_rows] == [4, 8] and [r.N_F for r in fv_rows] == [8, 16]
    assert sa_rows[1].error.max() < sa_rows[0].error.max()
    assert set(sa_rows[0].as_dict()) >= {"E11", "D22", "wall_time_s"}


def test_benchmark_cache_shared_between_resolutions():
    from blockdiff.geometry import convergence_case
    from blockdiff.grid import refine
    a = convergence_case("A")
    t1 = an.benchmark_tensor(a, 64)
    n = len(an._benchmark_cache)
    t2 = an.benchmark_tensor(refine(a, 4), 64)
    assert len(an._benchmark_cache) == n and np.array_equal(t1, t2)
