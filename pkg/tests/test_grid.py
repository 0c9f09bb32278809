import numpy as np
import pytest

from sixch import grid as gr
from sixch.errors import MeanError, ShapeError
from sixch.grid import Grid, ScalarField, constant_field
from sixch.snapshots import read_snapshot, write_snapshot


def random_field(grid, seed=0, zero_mean=False):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(grid.shape)
    if zero_mean:
        vals -= vals.mean()
    return ScalarField(grid, vals)


def band_limited(grid, seed=0, cutoff=8, amplitude=1.0):
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(grid.shape, dtype=complex if grid.bc == gr.PERIODIC else float)
    box = tuple(slice(0, cutoff) for _ in grid.shape)
    coeffs[box] = rng.standard_normal(coeffs[box].shape)
    coeffs.flat[0] = 0.0
    u = gr.transform_backward(coeffs, grid)
    peak = np.max(np.abs(u.values))
    return ScalarField(grid, amplitude * u.values / peak)


class TestGridValidation:
    def test_counts_floor(self):
        with pytest.raises(ValueError):
            Grid((1.0,), (3,))

    def test_dim_range(self):
        with pytest.raises(ValueError):
            Grid((1.0,) * 4, (8,) * 4)

    def test_mismatched_axes(self):
        with pytest.raises(ValueError):
            Grid((1.0, 2.0), (8,))

    def test_cell_volume(self):
        g = Grid((2.0, 3.0), (8, 16), gr.NEUMANN)
        assert g.cell_volume == pytest.approx((2.0 / 8) * (3.0 / 16), rel=1e-15)
        assert g.volume == pytest.approx(6.0)

    def test_field_shape_check(self):
        g = Grid((1.0,), (8,))
        with pytest.raises(ShapeError):
            ScalarField(g, np.zeros(9))
        with pytest.raises(ShapeError):
            ScalarField(g, np.full(8, np.nan))


class TestTransforms:
    @pytest.mark.parametrize("bc", [gr.NEUMANN, gr.PERIODIC])
    def test_round_trip_white_noise(self, bc):
        grid = Grid((1.0,), (256,), bc)
        u = random_field(grid, seed=1)
        v = gr.transform_backward(gr.transform_forward(u), grid)
        assert np.max(np.abs(v.values - u.values)) <= 1e-12

    @pytest.mark.parametrize("bc", [gr.NEUMANN, gr.PERIODIC])
    def test_round_trip_3d(self, bc):
        grid = Grid((1.0, 1.5, 0.7), (8, 4, 16), bc)
        u = random_field(grid, seed=2)
        v = gr.transform_backward(gr.transform_forward(u), grid)
        assert np.max(np.abs(v.values - u.values)) <= 1e-13

    def test_constant_goes_to_mode_zero(self):
        grid = Grid((2.0,), (32,), gr.NEUMANN)
        coeffs = gr.transform_forward(constant_field(grid, 3.5))
        others = coeffs.copy()
        others.flat[0] = 0.0
        assert np.max(np.abs(others)) <= 1e-13 * abs(coeffs.flat[0])
        assert coeffs.flat[0] == pytest.approx(3.5 * np.sqrt(32), rel=1e-14)

    def test_single_cosine_is_single_mode(self):
        grid = Grid((2.0,), (32,), gr.NEUMANN)
        x = grid.axis_coords(0)
        coeffs = gr.transform_forward(ScalarField(grid, np.cos(np.pi * x / 2.0)))
        mask = np.ones(32, bool)
        mask[1] = False
        assert abs(coeffs[1]) > 1.0
        assert np.max(np.abs(coeffs[mask])) <= 1e-14 * abs(coeffs[1])


class TestOperatorA:
    def test_eigenfunction_periodic(self):
        grid = Grid((1.0,), (64,), gr.PERIODIC)
        k = 2 * np.pi * 3
        u = ScalarField(grid, np.cos(k * grid.axis_coords(0)))
        au = gr.apply_A(u)
        assert np.allclose(au.values, k**2 * u.values, rtol=1e-10, atol=1e-10)

    def test_constant_in_kernel(self):
        grid = Grid((1.0, 1.0), (8, 8), gr.NEUMANN)
        c = constant_field(grid, 2.0)
        for power in (1, 2, 3):
            assert np.max(np.abs(gr.apply_A(c, power).values)) == 0.0

    def test_power_three_matches_composition(self):
        grid = Grid((2.0,), (64,), gr.PERIODIC)
        u = band_limited(grid, seed=3, cutoff=12)
        once = gr.apply_A(gr.apply_A(gr.apply_A(u)))
        direct = gr.apply_A(u, 3)
        scale = np.max(np.abs(direct.values))
        assert np.max(np.abs(once.values - direct.values)) <= 1e-12 * scale

    def test_apply_A_zero_mean(self):
        grid = Grid((1.0,), (64,), gr.NEUMANN)
        u = random_field(grid, 4)
        au = gr.apply_A(u)
        assert abs(gr.mean(au)) <= 1e-13 * gr.lp_norm(au, np.inf)

    def test_self_adjoint_and_positive(self):
        grid = Grid((1.3,), (64,), gr.NEUMANN)
        u, v = random_field(grid, 5), random_field(grid, 6)
        lhs, rhs = gr.inner(gr.apply_A(u), v), gr.inner(u, gr.apply_A(v))
        assert lhs == pytest.approx(rhs, rel=1e-12)
        assert gr.inner(gr.apply_A(u), u) >= 0.0
        assert gr.inner(gr.apply_A(constant_field(grid, 1.0)), constant_field(grid, 1.0)) == 0.0


class TestInverseLaplacian:
    def test_eigenfunction(self):
        grid = Grid((1.0,), (64,), gr.PERIODIC)
        k = 2 * np.pi * 2
        g = ScalarField(grid, np.cos(k * grid.axis_coords(0)))
        v = gr.inv_A_zero_mean(g)
        assert np.allclose(v.values, g.values / k**2, atol=1e-12)

    def test_round_trip(self):
        grid = Grid((1.0,), (128,), gr.NEUMANN)
        u = band_limited(grid, seed=7, cutoff=30)
        dev = ScalarField(grid, u.values - gr.mean(u))
        back = gr.inv_A_zero_mean(gr.apply_A(u))
        assert np.max(np.abs(back.values - dev.values)) <= 1e-12

    def test_mean_precondition(self):
        grid = Grid((1.0,), (32,), gr.NEUMANN)
        with pytest.raises(MeanError):
            gr.inv_A_zero_mean(constant_field(grid, 0.1))

    def test_propN1(self):
        grid = Grid((1.0,), (64,), gr.NEUMANN)
        u = random_field(grid, 8)
        g = random_field(grid, 9, zero_mean=True)
        lhs = gr.inner(gr.apply_A(u), gr.inv_A_zero_mean(g))
        rhs = gr.inner(g, u)
        assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-12)

    def test_propN2_symmetry(self):
        grid = Grid((1.0,), (64,), gr.NEUMANN)
        g = random_field(grid, 10, zero_mean=True)
        h = random_field(grid, 11, zero_mean=True)
        assert gr.inner(g, gr.inv_A_zero_mean(h)) == pytest.approx(
            gr.inner(h, gr.inv_A_zero_mean(g)), rel=1e-11, abs=1e-13)


class TestResolvent:
    def test_constant_unchanged(self):
        grid = Grid((1.0,), (16,), gr.NEUMANN)
        c = constant_field(grid, 0.7)
        out = gr.resolvent(c, 2.5)
        assert np.allclose(out.values, 0.7, atol=1e-15)

    def test_eigenfunction(self):
        grid = Grid((2 * np.pi,), (64,), gr.PERIODIC)
        u = ScalarField(grid, np.cos(grid.axis_coords(0)))
        out = gr.resolvent(u, 1.0)
        assert np.allclose(out.values, u.values / 2.0, atol=1e-13)

    def test_mean_preserved(self):
        grid = Grid((1.0,), (64,), gr.NEUMANN)
        u = random_field(grid, 12)
        assert gr.mean(gr.resolvent(u, 0.37)) == pytest.approx(gr.mean(u), abs=1e-14)


class TestNormsAndMeans:
    def test_constant(self):
        grid = Grid((1.0,), (32,), gr.NEUMANN)
        u = constant_field(grid, 3.0)
        assert gr.mean(u) == 3.0
        assert gr.integral(u) == pytest.approx(3.0, rel=1e-14)
        assert gr.lp_norm(u, 2) == pytest.approx(3.0, rel=1e-14)
        assert gr.lp_norm(u, 1) == pytest.approx(3.0, rel=1e-14)
        assert gr.lp_norm(u, np.inf) == 3.0

    def test_cosine_l2(self):
        grid = Grid((1.0,), (64,), gr.PERIODIC)
        u = ScalarField(grid, np.cos(2 * np.pi * grid.axis_coords(0)))
        assert gr.mean(u) == pytest.approx(0.0, abs=1e-15)
        assert gr.lp_norm(u, 2) == pytest.approx(1 / np.sqrt(2), rel=1e-13)

    def test_h1_matches_quadratic_form(self):
        grid = Grid((1.7,), (128,), gr.NEUMANN)
        u = random_field(grid, 13)
        qf = gr.inner(gr.apply_A(u), u)
        assert gr.h1_seminorm(u) ** 2 == pytest.approx(qf, rel=1e-12)

    def test_h1_cosine_closed_form(self):
        L = 2.0
        grid = Grid((L,), (64,), gr.NEUMANN)
        k = 3 * np.pi / L
        u = ScalarField(grid, np.cos(k * grid.axis_coords(0)))
        assert gr.h1_seminorm(u) == pytest.approx(k * np.sqrt(L / 2), rel=1e-12)


class TestDualNorm:
    def test_cosine_closed_form(self):
        L, alpha, j = 3.0, 0.8, 2
        grid = Grid((L,), (64,), gr.NEUMANN)
        k = j * np.pi / L
        g = ScalarField(grid, alpha * np.cos(k * grid.axis_coords(0)))
        assert gr.v0_dual_norm(g) == pytest.approx((alpha / k) * np.sqrt(L / 2), rel=1e-12)

    def test_zero(self):
        grid = Grid((1.0,), (16,), gr.NEUMANN)
        assert gr.v0_dual_norm(constant_field(grid, 0.0)) == 0.0

    def test_interpolation_inequality(self):
        grid = Grid((1.5,), (64,), gr.NEUMANN)
        for seed in range(100):
            g = random_field(grid, seed, zero_mean=True)
            lhs = gr.lp_norm(g, 2) ** 2
            rhs = gr.v0_dual_norm(g) * gr.h1_seminorm(g)
            assert lhs <= rhs * (1 + 1e-10)

    def test_mean_error(self):
        grid = Grid((1.0,), (16,), gr.NEUMANN)
        with pytest.raises(MeanError):
            gr.v0_dual_norm(constant_field(grid, 0.1))


class TestGradients:
    def test_constant_gives_zero(self):
        grid = Grid((1.0, 2.0), (16, 8), gr.NEUMANN)
        out = gr.grad_norm_sq_field(constant_field(grid, 1.2))
        assert np.max(out.values) == 0.0

    def test_sine_closed_form(self):
        grid = Grid((1.0,), (128,), gr.PERIODIC)
        k = 2 * np.pi * 3
        x = grid.axis_coords(0)
        u = ScalarField(grid, np.sin(k * x))
        out = gr.grad_norm_sq_field(u)
        assert np.max(np.abs(out.values - k**2 * np.cos(k * x) ** 2)) <= 1e-10 * k**2

    def test_cosine_neumann(self):
        L = 2.0
        grid = Grid((L,), (128,), gr.NEUMANN)
        k = 5 * np.pi / L
        x = grid.axis_coords(0)
        u = ScalarField(grid, np.cos(k * x))
        out = gr.gradient_axis(u, 0)
        assert np.max(np.abs(out + k * np.sin(k * x))) <= 1e-11 * k

    def test_integral_matches_h1(self):
        for bc in (gr.NEUMANN, gr.PERIODIC):
            grid = Grid((1.0, 1.3), (32, 32), bc)
            u = band_limited(grid, seed=14, cutoff=10)
            integral = gr.integral(gr.grad_norm_sq_field(u))
            assert integral == pytest.approx(gr.h1_seminorm(u) ** 2, rel=1e-10, abs=1e-12)

    def test_nonnegative(self):
        grid = Grid((1.0,), (64,), gr.NEUMANN)
        out = gr.grad_norm_sq_field(random_field(grid, 15))
        assert np.min(out.values) >= 0.0


class TestPoincare:
    @pytest.mark.parametrize("bc", [gr.NEUMANN, gr.PERIODIC])
    def test_wirtinger_bound(self, bc):
        grid = Grid((2.0, 0.9), (32, 16), bc)
        cp = max(grid.lengths) / np.pi
        for seed in range(25):
            u = random_field(grid, seed)
            dev = ScalarField(grid, u.values - gr.mean(u))
            assert gr.lp_norm(dev, 2) <= cp * gr.h1_seminorm(u) * (1 + 1e-12)


class TestOperatorSymbol:
    def test_neumann_symbol_monotone_per_axis(self):
        grid = Grid((1.0, 2.0), (16, 8), gr.NEUMANN)
        ev = grid.symbol().eigenvalues
        assert ev.flat[0] == 0.0
        assert np.all(ev >= 0.0)
        for ax in range(2):
            assert np.all(np.diff(ev, axis=ax) >= 0.0)

    def test_periodic_symbol_kernel_and_sign(self):
        grid = Grid((1.0,), (16,), gr.PERIODIC)
        ev = grid.symbol().eigenvalues
        assert ev.flat[0] == 0.0
        assert np.all(ev >= 0.0)

    def test_neumann_basis_has_zero_boundary_derivative(self):
        # every basis function is cos(m*pi*x/L); its derivative is a sine
        # series, which vanishes identically at x = 0 and x = L
        L, n = 1.7, 16
        m = np.arange(n)
        assert np.all(np.sin(m * np.pi * 0.0 / L) == 0.0)
        assert np.max(np.abs(np.sin(m * np.pi * L / L))) <= 1e-14


class TestPadEval:
    def test_identity_on_band_limited(self):
        grid = Grid((1.0,), (64,), gr.NEUMANN)
        u = band_limited(grid, seed=16, cutoff=10)
        out = gr.pad_eval(lambda v: v, u)
        assert np.max(np.abs(out.values - u.values)) <= 1e-12

    def test_product_dealiasing_improves(self):
        # cubic of a high-mode cosine aliases at N; padding must reduce the error
        grid = Grid((1.0,), (32,), gr.NEUMANN)
        fine = Grid((1.0,), (256,), gr.NEUMANN)
        x, xf = grid.axis_coords(0), fine.axis_coords(0)
        u = ScalarField(grid, 0.9 * np.cos(11 * np.pi * x))
        cube = lambda v: v**3
        direct = ScalarField(grid, cube(u.values))
        padded = gr.pad_eval(cube, u)
        exact_fine = ScalarField(fine, cube(0.9 * np.cos(11 * np.pi * xf)))
        exact_coeffs = gr.transform_forward(exact_fine)[:32]

        def coeff_err(f):
            c = gr.transform_forward(f)
            scale = np.sqrt(fine.counts[0] / grid.counts[0])
            return np.max(np.abs(c - exact_coeffs / scale))

        assert coeff_err(padded) < 0.5 * coeff_err(direct)


class TestSnapshots:
    def test_round_trip(self, tmp_path):
        grid = Grid((1.0, 2.0), (8, 16), gr.PERIODIC)
        u = random_field(grid, 17)
        write_snapshot(u, tmp_path / "snap", time=0.25, label="x")
        v, meta = read_snapshot(tmp_path / "snap")
        assert np.array_equal(v.values, u.values)
        assert v.grid == grid
        assert meta["time"] == 0.25 and meta["label"] == "x"
        assert meta["dim"] == 2 and meta["bc"] == gr.PERIODIC

    def test_raw_is_little_endian_row_major(self, tmp_path):
        grid = Grid((1.0,), (4,), gr.NEUMANN)
        u = ScalarField(grid, np.array([1.0, 2.0, 3.0, 4.0]))
        raw, _ = write_snapshot(u, tmp_path / "s")
        data = np.frombuffer(raw.read_bytes(), dtype="<f8")
        assert np.array_equal(data, u.values)
