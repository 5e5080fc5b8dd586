import numpy as np
import pytest

from blockdiff import sa_solver as sa
from blockdiff.geometry import case_layout, checkerboard
from blockdiff.grid import BlockGrid, from_array, new_uniform

P16 = sa.SolverParams(16, 16, 29)


@pytest.mark.parametrize("N_x, N_y, expected", [(16, 16, 29), (4, 4, 5), (64, 64, 100),
                                                (2, 2, 1), (8, 6, 9)])
def test_default_neig(N_x, N_y, expected):
    assert sa.default_neig(N_x, N_y) == expected


def test_default_neig_empty_window():
    with pytest.raises(sa.ParameterError, match="empty N_eig window"):
        sa.default_neig(16, 2)


@pytest.mark.parametrize("args", [(4, 4, 2), (4, 4, 6), (16, 8, 14)])
def test_params_outside_window(args):
    with pytest.raises(sa.ParameterError, match="window"):
        sa.SolverParams(*args)


def test_params_need_two_abscissas():
    with pytest.raises(sa.ParameterError, match=">= 2"):
        sa.SolverParams(1, 4, 3)


@pytest.mark.parametrize("m, n, N, size", [(4, 4, 4, 144), (8, 8, 16, 2112), (16, 16, 4, 2304)])
def test_system_size(m, n, N, size):
    grid = from_array(np.ones((m, n)))
    A = sa.assemble_matrix(grid, sa.SolverParams.auto(N))
    assert A.shape == (size, size)
    assert sa.IndexMap(m, n, N, N).size == size


def test_matrix_shared_by_both_directions():
    grid = case_layout(4)
    A1, b_x = sa.assemble(grid, P16, "x")
    A2, b_y = sa.assemble(grid, P16, "y")
    assert (A1 != A2).nnz == 0
    assert not np.array_equal(b_x, b_y)


def test_rhs_rejects_bad_direction():
    with pytest.raises(ValueError):
        sa.assemble_rhs(from_array([[1.0]]), sa.SolverParams.auto(4), "z")


def test_index_map_wraps_periodically():
    idx = sa.IndexMap(3, 4, 5, 6)
    loc = idx.local(2, 3)
    # right side of the last column is the left line of column 0, top of the last row is row 0
    assert loc[6:12].tolist() == (idx.g(2, 0) + np.arange(6)).tolist()
    assert loc[17:].tolist() == (idx.q(0, 3) + np.arange(5)).tolist()
    assert np.array_equal(idx.local_all()[2, 3], loc)


def test_homogeneous_fluxes_and_constant_psi():
    d = 2.5
    grid = from_array(np.full((2, 2), d))
    sol = sa.solve(grid, sa.SolverParams.auto(6))
    assert np.allclose(sol.x.g_vals, d, atol=1e-12)
    assert np.allclose(sol.x.q_vals, 0.0, atol=1e-12)
    assert np.allclose(sol.y.q_vals, d, atol=1e-12)
    pts = np.random.default_rng(0).random((2, 20))
    psi = sa.evaluate_psi(sol.x, grid, sol.params, *pts)
    assert np.abs(psi).max() < 1e-10


def test_layered_flux_is_harmonic_mean(layered):
    # layers stacked in y: flux across them is the harmonic mean, constant everywhere
    sol = sa.solve(layered, sa.SolverParams.auto(8))
    assert np.allclose(sol.y.q_vals, 2 / (1 / 0.1 + 1 / 1.0), atol=1e-12)


def test_continuity_at_shared_abscissa():
    grid = case_layout(1)
    sol = sa.solve(grid, P16)
    xs = sa.midpoint_rule(0, 0.125, 16).points
    for xi in "xy":
        below = sa.evaluate_v(sol[xi], grid, P16, xs, np.full(16, 0.125), block=(0, 0))
        above = sa.evaluate_v(sol[xi], grid, P16, xs, np.full(16, 0.125), block=(1, 0))
        assert np.abs(below - above).max() <= 1e-9


def test_psi_has_zero_mean():
    grid = case_layout(3)
    sol = sa.solve(grid, P16)
    c = (np.arange(64) + 0.5) / 64
    X, Y = np.meshgrid(c, c)
    for xi in "xy":
        psi = sa.evaluate_psi(sol[xi], grid, P16, X.ravel(), Y.ravel())
        assert abs(psi.mean()) < 1e-3


def test_evaluate_outside_domain():
    grid = from_array([[1.0]])
    sol = sa.solve(grid, sa.SolverParams.auto(4))
    with pytest.raises(ValueError):
        sa.evaluate_v(sol.x, grid, sol.params, 1.5, 0.5)


def test_grad_matches_finite_difference():
    grid = case_layout(4)
    sol = sa.solve(grid, P16)
    x, y, e = np.array([0.31, 0.66]), np.array([0.44, 0.07]), 1e-6
    gx, gy = sa.evaluate_grad_v(sol.x, grid, P16, x, y)
    fd_x = (sa.evaluate_v(sol.x, grid, P16, x + e, y) - sa.evaluate_v(sol.x, grid, P16, x - e, y)) / (2 * e)
    fd_y = (sa.evaluate_v(sol.x, grid, P16, x, y + e) - sa.evaluate_v(sol.x, grid, P16, x, y - e)) / (2 * e)
    assert np.allclose(gx, fd_x, atol=1e-6) and np.allclose(gy, fd_y, atol=1e-6)


@pytest.mark.parametrize("k, expected", [
    (1, [[0.648, 0.0], [0.0, 0.648]]),
    (3, [[0.775, 0.0], [0.0, 0.308]]),
    (4, [[0.533, -0.0286], [-0.0286, 0.676]]),
])
def test_reference_layouts(k, expected):
    T = sa.compute(case_layout(k), P16).tensor
    assert np.allclose(T, expected, atol=1e-3)


def test_homogeneous_tensor():
    T = sa.compute(from_array(np.full((3, 3), 7.3)), sa.SolverParams.auto(4)).tensor
    assert np.allclose(T, 7.3 * np.eye(2), atol=1e-12)


@pytest.mark.parametrize("D", [[[0.1], [1.0]], [[0.1, 1.0]]])
def test_layered_tensor(D):
    T = sa.compute(from_array(D), sa.SolverParams.auto(8)).tensor
    par, perp = 0.55, 2 / 11
    expected = np.diag([par, perp]) if len(D) == 2 else np.diag([perp, par])
    assert np.allclose(T, expected, atol=1e-12)


def test_unequal_layers_with_extra_cuts():
    # vertical cuts through each layer must not perturb the layered result
    grid = BlockGrid([-1, 0.3, 2.0], [0, 0.3, 0.5, 1.5], [[0.1, 0.1], [1, 1], [7, 7]])
    T = sa.compute(grid, sa.SolverParams.auto(8)).tensor
    assert T[0, 0] == pytest.approx((0.3 * 0.1 + 0.2 + 7) / 1.5, rel=1e-12)
    assert T[1, 1] == pytest.approx(1.5 / (3 + 0.2 + 1 / 7), rel=1e-12)


def test_checkerboard_converges_to_geometric_mean():
    # the two-phase checkerboard has D_eff = sqrt(D1 D2) exactly; corners make
    # convergence slow but monotone
    errs = [abs(sa.compute(checkerboard(2), sa.SolverParams.auto(N)).tensor[0, 0] - np.sqrt(0.1))
            for N in (4, 8, 16, 32)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.05 * np.sqrt(0.1)


def test_closed_form_matches_quadrature_oracle():
    grid = new_uniform(2, 3, [[0.1, 1.0, 0.4], [2.0, 0.3, 1.0]], 0, 1.5, 0, 1)
    sol = sa.solve(grid, sa.SolverParams.auto(8))
    closed, oracle = sa.effective_tensor(sol), sa.effective_tensor_quadrature(sol)
    assert np.allclose(closed, oracle, rtol=1e-8, atol=1e-12)


def test_high_aspect_blocks_stay_finite():
    # kpi * l / h reaches ~ 2900 here; plain cosh would overflow
    grid = new_uniform(1, 2, [[1.0, 0.1]], 0, 1, 0, 0.02)
    res = sa.compute(grid, sa.SolverParams.auto(16))
    assert np.all(np.isfinite(res.tensor))
    assert res.tensor[0, 0] == pytest.approx(2 / 11, rel=2e-3)


def test_hyperbolic_ratios():
    a, b = np.array([0.0, 1.0, -3.0, 700.0]), np.array([1.0, 2.0, 3.0, 800.0])
    expected = np.cosh(a[:3]) / np.sinh(b[:3])
    assert np.allclose(sa._cosh_over_sinh(a, b)[:3], expected, rtol=1e-14)
    assert sa._cosh_over_sinh(a, b)[3] == pytest.approx(np.exp(-100.0), rel=1e-12)
    assert np.allclose(sa._sinh_over_sinh(a[:3], b[:3]), np.sinh(a[:3]) / np.sinh(b[:3]), rtol=1e-14)


def test_effective_tensor_fields():
    res = sa.compute(case_layout(1), P16)
    assert res.method == "sa" and res.system_size == 2112
    assert res.wall_time > 0
    assert res.d11 == res.tensor[0, 0] and res.d22 == res.tensor[1, 1]
    assert res.eigenvalues() == pytest.approx([res.d11, res.d11], abs=1e-10)
