import numpy as np
import pytest

from problem.matrix_io import HEADER, MAGIC, load_matrix, save_matrix
from problem.plasma_model import (PlasmaParams, ProblemError, SingularMatrixError,
                                  StateLayout, apply_operator, assemble_operator, assemble_rhs,
                                  condition_number, dv_maxwellian, gradient_matrix, make_grid,
                                  maxwellian, signed_values, solve_classical, zeta_mask)


class TestGrid:
    def test_spacings_and_points(self, small_params):
        grid = make_grid(small_params, 3, 2)
        assert grid.dx == pytest.approx(1.0)
        assert grid.dv == pytest.approx(0.5)
        np.testing.assert_allclose(grid.v_points, [0.0, 0.5, -1.0, -0.5])
        np.testing.assert_allclose(grid.x_points, np.arange(8.0))

    @pytest.mark.parametrize("n_x, n_v", [(2, 2), (3, 0)])
    def test_rejects_small_registers(self, params, n_x, n_v):
        with pytest.raises(ProblemError):
            make_grid(params, n_x, n_v)

    def test_rejects_non_positive_extent(self):
        with pytest.raises(ProblemError):
            make_grid(PlasmaParams.default(v_max=-1.0), 3, 2)

    def test_signed_values(self):
        np.testing.assert_array_equal(signed_values(2), [0, 1, -2, -1])
        np.testing.assert_array_equal(signed_values(3), [0, 1, 2, 3, -4, -3, -2, -1])


class TestLayout:
    def test_index_is_register_major(self):
        layout = StateLayout(3, 2)
        assert layout.dim == 64
        assert layout.index(5, 2, 1) == 5 + 8 * 2 + 32

    def test_masks_partition_space(self):
        layout = StateLayout(3, 2)
        assert layout.g_mask.sum() == 32
        assert layout.e_mask.sum() == 8
        assert layout.unused_mask.sum() == 24
        assert not np.any(layout.g_mask & layout.e_mask)


class TestBackground:
    def test_maxwellian_peak(self, params):
        assert maxwellian(0.0, 0.0, params) == pytest.approx(1 / np.sqrt(2 * np.pi))

    def test_dv_maxwellian(self, params):
        v = np.array([-1.0, 0.5, 2.0])
        expected = -v * maxwellian(0.0, v, params)
        np.testing.assert_allclose(dv_maxwellian(0.0, v, params), expected)


class TestOperator:
    def test_gradient_annihilates_constants(self, grid):
        np.testing.assert_allclose(gradient_matrix(grid) @ np.ones(grid.nx_points), 0.0,
                                   atol=1e-12)

    def test_gradient_boundary_rows(self, small_params):
        grid = make_grid(small_params, 3, 2)
        grad = gradient_matrix(grid)
        np.testing.assert_allclose(grad[0, :3], [-1.5, 2.0, -0.5])
        np.testing.assert_allclose(grad[-1, -3:], [0.5, -2.0, 1.5])
        np.testing.assert_allclose(grad[3, 2:5], [-0.5, 0.0, 0.5])

    def test_gradient_exact_on_linear_functions(self, grid):
        np.testing.assert_allclose(gradient_matrix(grid) @ grid.x_points, 1.0, atol=1e-12)

    def test_zeta_masks_inflow_velocities(self, grid):
        mask = zeta_mask(grid).reshape(grid.nv_points, grid.nx_points)
        np.testing.assert_array_equal(mask[:, 0] == 0, grid.v_points > 0)
        np.testing.assert_array_equal(mask[:, -1] == 0, grid.v_points <= 0)
        assert np.sum(mask == 0) == grid.nv_points
        assert np.all(mask[:, 1:-1] == 1)

    @pytest.mark.parametrize("n_x, n_v", [(3, 2), (4, 3)])
    def test_matrix_free_agrees_with_assembly(self, params, rng, n_x, n_v):
        grid = make_grid(params, n_x, n_v)
        u = rng.normal(size=grid.layout.dim) + 1j * rng.normal(size=grid.layout.dim)
        np.testing.assert_allclose(apply_operator(grid, params, u),
                                   assemble_operator(grid, params) @ u, atol=1e-12)

    def test_unused_slots_only_carry_omega(self, grid, params):
        matrix = assemble_operator(grid, params)
        unused = np.flatnonzero(grid.layout.unused_mask)
        block = matrix[np.ix_(unused, unused)]
        np.testing.assert_allclose(block, 1j * params.omega0 * np.eye(len(unused)))
        assert np.all(matrix[unused][:, ~grid.layout.unused_mask] == 0)

    def test_a_disabled_is_scaled_identity(self, grid):
        params = PlasmaParams.default(include_a=False)
        matrix = assemble_operator(grid, params)
        np.testing.assert_allclose(matrix, 1j * params.omega0 * np.eye(grid.layout.dim))

    def test_rhs_lives_on_field_slots(self, grid, params):
        b = assemble_rhs(grid, params)
        assert np.all(b[~grid.layout.e_mask] == 0)
        assert np.linalg.norm(b) > 0


class TestSolve:
    def test_residual(self, grid, params):
        matrix = assemble_operator(grid, params)
        b = assemble_rhs(grid, params)
        u = solve_classical(matrix, b)
        assert np.linalg.norm(matrix @ u - b) / np.linalg.norm(b) <= 1e-10

    def test_singular_matrix(self):
        with pytest.raises(SingularMatrixError):
            solve_classical(np.zeros((4, 4)), np.ones(4))

    def test_shape_mismatch(self):
        with pytest.raises(ProblemError):
            solve_classical(np.eye(3), np.ones(4))

    def test_condition_number(self):
        report = condition_number(np.diag([4.0, 2.0, 0.5]), scale=2.0)
        assert report.ratio == pytest.approx(8.0)
        assert report.scaled == pytest.approx(4.0)
        assert report.sigma_min == pytest.approx(0.5)

    def test_singular_condition_is_infinite(self):
        report = condition_number(np.diag([1.0, 0.0]), scale=1.0)
        assert report.ratio == float('inf')
        assert report.scaled == float('inf')


class TestMatrixDump:
    def test_header_and_layout(self, tmp_path):
        path = tmp_path / 'm.bin'
        matrix = np.array([[1 + 2j, 3], [4, 5 - 1j]])
        save_matrix(path, matrix)
        raw = path.read_bytes()
        magic, version, rows, cols = HEADER.unpack(raw[:HEADER.size])
        assert (magic, rows, cols) == (MAGIC, 2, 2)
        # column-major: second stored value is matrix[1, 0]
        second = np.frombuffer(raw[HEADER.size + 16:HEADER.size + 32], dtype='<c16')[0]
        assert second == 4
        np.testing.assert_array_equal(load_matrix(path), matrix)

    def test_vector_is_a_column(self, tmp_path):
        path = tmp_path / 'v.bin'
        save_matrix(path, np.arange(3) * 1j)
        assert load_matrix(path).shape == (3, 1)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / 'junk.bin'
        path.write_bytes(b'NOPE' + bytes(12))
        with pytest.raises(ProblemError):
            load_matrix(path)
