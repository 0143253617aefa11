"""Steppers for the constant- and variable-density systems, the pressure
solve, the within-step linearized iteration, and the dilation experiment."""

import numpy as np
import pytest

from fins2d.errors import BlowupDetected, GridMismatch, InvalidExponent, \
    PicardNotContracting, PressureIterationDiverged
from fins2d.grid import ScalarField, VectorField2
from fins2d.spectral import (
    FractionalParams,
    fractional_laplacian,
    heat_semigroup,
    inverse_laplacian,
    leray_project,
)
from fins2d.solver import (
    SimState,
    biot_savart,
    curl,
    dt_refinement_error,
    initial_state,
    perturbation_of,
    picard_iterate,
    rescaled_initial_data,
    scaling_residual,
    simulate,
    solve_pressure,
    step_homogeneous,
    step_inhomogeneous,
    step_vorticity,
    _convect,
)

from conftest import band_limited_divfree, band_limited_scalar


def taylor_green(grid, amp=0.8):
    X, Y = grid.meshes()
    return VectorField2(grid, -amp * np.cos(X) * np.sin(Y),
                        amp * np.sin(X) * np.cos(Y))


def ones_field(grid):
    return ScalarField(grid, np.ones((grid.n, grid.n)))


def bump_density(grid, eps=0.01):
    X, Y = grid.meshes()
    return ScalarField(grid, 1.0 + eps * np.exp(
        -((X - np.pi) ** 2 + (Y - np.pi) ** 2)))


def classical_vorticity_reference(u0, dt, n_steps, nu):
    """Independent classical (alpha = 1) pseudo-spectral solver: vorticity
    form, integrating factor exp(-nu k^2 t), explicit RK4 on the advection.
    Used only as an oracle."""
    grid = u0.grid
    k2 = grid.k2
    mask = grid.dealias_mask
    om = curl(u0).hat.copy()

    def rhs(w_hat):
        ksafe = k2.copy()
        ksafe[0, 0] = 1.0
        psi = w_hat / ksafe
        psi[0, 0] = 0.0
        ux = np.fft.ifft2(1j * grid.ky * psi).real
        uy = np.fft.ifft2(-1j * grid.kx * psi).real
        gx = np.fft.ifft2(1j * grid.kx * w_hat).real
        gy = np.fft.ifft2(1j * grid.ky * w_hat).real
        return -np.fft.fft2(ux * gx + uy * gy) * mask

    ef = np.exp(-nu * k2 * dt)
    eh = np.exp(-nu * k2 * dt / 2.0)
    for _ in range(n_steps):
        k1 = rhs(om)
        k2s = rhs(eh * (om + 0.5 * dt * k1))
        k3s = rhs(eh * om + 0.5 * dt * k2s)
        k4s = rhs(ef * om + dt * eh * k3s)
        om = ef * om + dt / 6.0 * (ef * k1 + 2.0 * eh * (k2s + k3s) + k4s)
    u = biot_savart(ScalarField.from_hat(grid, om))
    return u


class TestHomogeneousStep:
    def test_linear_regime_matches_semigroup(self, grid64):
        _, Y = grid64.meshes()
        u = VectorField2(grid64, 1e-8 * np.cos(3 * Y), np.zeros((64, 64)))
        p = FractionalParams(0.75, nu=1.0)
        got = step_homogeneous(u, 0.01, p)
        ref = heat_semigroup(u, 0.01, p)
        assert np.abs(got.vx - ref.vx).max() <= 1e-10 * np.abs(ref.vx).max()

    def test_energy_strictly_decreases(self, grid64, rng):
        u = band_limited_divfree(grid64, rng, mmax=4) * 0.5
        p = FractionalParams(0.75, nu=0.5)
        e0 = u.l2_norm()
        for _ in range(5):
            u = step_homogeneous(u, 0.01, p)
            e1 = u.l2_norm()
            assert e1 < e0
            e0 = e1

    def test_classical_limit_against_independent_solver(self, grid64):
        # oracle: independent vorticity-form RK4 integrating-factor solver
        nu = 0.05
        X, Y = grid64.meshes()
        u0 = leray_project(VectorField2(
            grid64,
            -np.cos(X) * np.sin(Y) + 0.3 * np.sin(Y + 1.0),
            np.sin(X) * np.cos(Y) + 0.3 * np.sin(2 * X)))
        p = FractionalParams(1.0, nu=nu)
        dt, n = 2.5e-4, 400
        u = u0
        for _ in range(n):
            u = step_homogeneous(u, dt, p)
        ref = classical_vorticity_reference(u0, dt, n, nu)
        e_got = u.l2_norm() ** 2
        e_ref = ref.l2_norm() ** 2
        assert abs(e_got - e_ref) <= 1e-6 * e_ref

    def test_mean_velocity_conserved(self, grid64, rng):
        u = band_limited_divfree(grid64, rng, mmax=4) + VectorField2(
            grid64, np.full((64, 64), 0.3), np.full((64, 64), -0.2))
        p = FractionalParams(0.75)
        out = step_homogeneous(u, 0.01, p)
        assert abs(out.vx.mean() - 0.3) <= 1e-13
        assert abs(out.vy.mean() + 0.2) <= 1e-13

    def test_blowup_cap(self, grid64, rng):
        u = band_limited_divfree(grid64, rng, mmax=4)
        with pytest.raises(BlowupDetected):
            step_homogeneous(u, 0.01, FractionalParams(0.75),
                             max_norm_cap=1e-6)


class TestVorticityStep:
    def test_zero_field(self, grid64):
        out = step_vorticity(ScalarField.zeros(grid64), 0.01,
                             FractionalParams(0.75))
        assert np.abs(out.values).max() == 0.0

    def test_radial_vortex_pure_decay(self, grid64):
        # the periodic Poisson kernel is only square-symmetric, so a radial
        # vortex self-advects at the image-anisotropy floor (~1e-6 for this
        # core size); otherwise the profile undergoes pure dissipative decay
        X, Y = grid64.meshes()
        r2 = (X - np.pi) ** 2 + (Y - np.pi) ** 2
        vals = np.exp(-8.0 * r2)
        vals -= vals.mean()  # zero circulation on the torus
        om = ScalarField(grid64, vals)
        p = FractionalParams(0.75, nu=1.0)
        out = om
        for _ in range(5):
            out = step_vorticity(out, 0.01, p)
        ref = heat_semigroup(om, 0.05, p)
        assert (out - ref).l2_norm() <= 5e-6 * ref.l2_norm()

    def test_enstrophy_nonincreasing(self, grid64, rng):
        om = band_limited_scalar(grid64, rng, mmax=5)
        p = FractionalParams(0.75)
        prev = om.l2_norm()
        for _ in range(5):
            om = step_vorticity(om, 0.01, p)
            cur = om.l2_norm()
            assert cur <= prev
            prev = cur

    def test_cross_validates_velocity_stepper(self, grid64, rng):
        u = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        om = curl(u)
        p = FractionalParams(0.75, nu=0.5)
        for _ in range(10):
            om = step_vorticity(om, 0.01, p)
            u = step_homogeneous(u, 0.01, p)
        assert (curl(u) - om).l2_norm() <= 1e-6 * om.l2_norm()


class TestPressure:
    def test_constant_density_single_sweep(self, grid64, rng):
        u = band_limited_divfree(grid64, rng, mmax=4)
        p = FractionalParams(0.75)
        pi, iters = solve_pressure(ones_field(grid64), u, p)
        assert iters == 1
        # oracle: -(inverse Laplacian) div(u . grad u)
        conv = _convect(u, u)
        bh = (1j * grid64.kx * np.fft.fft2(conv.vx)
              + 1j * grid64.ky * np.fft.fft2(conv.vy))
        oracle = inverse_laplacian(ScalarField.from_hat(grid64, -bh))
        assert (pi - oracle).l2_norm() <= 1e-12 * max(oracle.l2_norm(), 1e-300)

    def test_zero_velocity(self, grid64):
        pi, _ = solve_pressure(ones_field(grid64), VectorField2.zeros(grid64),
                               FractionalParams(0.75))
        assert np.abs(pi.values).max() == 0.0

    def test_variable_density_contraction(self, grid64, rng):
        X, _ = grid64.meshes()
        rho = ScalarField(grid64, 1.0 + 0.05 * np.cos(X))
        u = band_limited_divfree(grid64, rng, mmax=4)
        hist = []
        pi, iters = solve_pressure(rho, u, FractionalParams(0.75),
                                   residual_history=hist)
        assert iters <= 10
        assert abs(pi.mean()) <= 1e-12
        # measured contraction against the density-deviation prediction
        rates = [b / a for a, b in zip(hist, hist[1:])]
        tau = np.abs(1.0 / rho.values - 1.0).max()
        assert max(rates) <= 2.0 * tau / (1.0 - tau)

    def test_positivity_guard(self, grid64, rng):
        X, _ = grid64.meshes()
        rho = ScalarField(grid64, 1.0 + 1.5 * np.cos(X))  # touches negative
        u = band_limited_divfree(grid64, rng, mmax=4)
        with pytest.raises(PressureIterationDiverged):
            solve_pressure(rho, u, FractionalParams(0.75))


class TestInhomogeneousStep:
    def test_reduces_to_homogeneous_at_unit_density(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        p = FractionalParams(0.75)
        state = initial_state(grid64, ones_field(grid64), u0, p)
        got = step_inhomogeneous(state, 0.01)
        ref = step_homogeneous(state.u, 0.01, p)
        scale = ref.max_norm()
        assert np.abs(got.u.vx - ref.vx).max() <= 1e-10 * scale
        assert np.abs(got.u.vy - ref.vy).max() <= 1e-10 * scale

    def test_density_deviation_never_grows(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.5
        rho0 = bump_density(grid64, eps=0.01)
        p = FractionalParams(0.75)
        state = initial_state(grid64, rho0, u0, p)
        prev_inf = np.abs(state.rho.values - 1.0).max()
        prev_l2 = (state.rho - ones_field(grid64)).l2_norm()
        for _ in range(20):
            state = step_inhomogeneous(state, 0.005, interpolant="clamped")
            cur_inf = np.abs(state.rho.values - 1.0).max()
            cur_l2 = (state.rho - ones_field(grid64)).l2_norm()
            assert cur_inf <= prev_inf
            assert cur_l2 <= prev_l2 * (1.0 + 1e-6)
            prev_inf, prev_l2 = cur_inf, cur_l2

    def test_second_order_dt_convergence(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        rho0 = bump_density(grid64, eps=0.01)
        p = FractionalParams(0.75)
        e1 = dt_refinement_error(grid64, rho0, u0, p, 0.02, 10)
        e2 = dt_refinement_error(grid64, rho0, u0, p, 0.01, 20)
        assert 3.2 <= e1 / e2 <= 4.8

    def test_energy_balance_constant_density(self, grid64):
        nu = 0.5 / 2.0 ** 0.75
        p = FractionalParams(0.75, nu=nu)
        state = initial_state(grid64, ones_field(grid64), taylor_green(grid64), p)
        dt = 1e-3
        e0 = state.u.l2_norm() ** 2
        diss = 0.0
        prev = fractional_laplacian(state.u, 0.75).l2_norm() ** 2
        for _ in range(200):
            state = step_inhomogeneous(state, dt)
            cur = fractional_laplacian(state.u, 0.75).l2_norm() ** 2
            diss += nu * dt * (prev + cur)  # trapezoid of 2 nu |Lam^a u|^2
            prev = cur
        assert abs(state.u.l2_norm() ** 2 + diss - e0) <= 1e-6 * e0

    def test_weighted_energy_residual_second_order(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=3) * 0.4
        rho0 = bump_density(grid64, eps=0.05)
        p = FractionalParams(0.75, nu=0.5)

        def per_step_residual(dt):
            state = initial_state(grid64, rho0, u0, p)
            nxt = step_inhomogeneous(state, dt)
            w0 = (np.sqrt(state.rho.values) * state.u.magnitude())
            w1 = (np.sqrt(nxt.rho.values) * nxt.u.magnitude())
            e0 = (w0 ** 2).sum() * grid64.cell_area
            e1 = (w1 ** 2).sum() * grid64.cell_area
            mid = 0.5 * (fractional_laplacian(state.u, 0.75).l2_norm() ** 2
                         + fractional_laplacian(nxt.u, 0.75).l2_norm() ** 2)
            return abs((e1 - e0) / dt + 2.0 * p.nu * mid)

        r1 = per_step_residual(0.02)
        r2 = per_step_residual(0.01)
        assert r1 / r2 >= 3.0  # O(dt^2) per-step defect

    def test_invariants_after_steps(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        state = initial_state(grid64, bump_density(grid64), u0,
                              FractionalParams(0.75))
        state = simulate(state, 0.01, 5)
        state.check_invariants()

    def test_solver_range_enforced(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4)
        with pytest.raises(InvalidExponent):
            initial_state(grid64, ones_field(grid64), u0, FractionalParams(0.3))


class TestPerturbationState:
    def test_zero_deviation_initially(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        state = initial_state(grid64, ones_field(grid64), u0,
                              FractionalParams(0.75))
        dev = perturbation_of(state)
        assert dev.w.max_norm() == 0.0
        assert np.abs(dev.a.values).max() == 0.0
        assert dev.forcing.max_norm() == 0.0

    def test_divergence_free_deviation(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        state = initial_state(grid64, bump_density(grid64), u0,
                              FractionalParams(0.75))
        state = simulate(state, 0.01, 3)
        dev = perturbation_of(state)
        hx, hy = dev.w.hat
        div = np.abs(1j * grid64.kx * hx + 1j * grid64.ky * hy).max()
        assert div <= 1e-8 * max(np.abs(hx).max(), 1e-300)

    def test_deviation_range_contained(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.5
        state = initial_state(grid64, bump_density(grid64, 0.02), u0,
                              FractionalParams(0.75))
        a0_max = np.abs(state.rho.values - 1.0).max()
        state = simulate(state, 0.01, 5, interpolant="clamped")
        dev = perturbation_of(state)
        assert np.abs(dev.a.values).max() <= a0_max


class TestPicard:
    def test_zero_deviation_single_sweep(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        state = initial_state(grid64, ones_field(grid64), u0,
                              FractionalParams(0.75))
        _, sweeps, _ = picard_iterate(state, 0.01)
        assert sweeps == 1

    def test_contraction_ratio_small_deviation(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        rho0 = bump_density(grid64, eps=0.01)   # deviation 0.01 in sup norm
        state = initial_state(grid64, rho0, u0, FractionalParams(0.75))
        _, sweeps, ratios = picard_iterate(state, 0.01)
        assert sweeps >= 3
        assert max(ratios) < 0.5

    def test_agrees_with_split_stepper(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        rho0 = bump_density(grid64, eps=0.01)
        p = FractionalParams(0.75)
        dt, n = 0.01, 10
        s_split = initial_state(grid64, rho0, u0, p)
        s_pic = initial_state(grid64, rho0, u0, p)
        for _ in range(n):
            s_split = step_inhomogeneous(s_split, dt)
            s_pic, _, _ = picard_iterate(s_pic, dt)
        gap = np.sqrt(((s_split.u.vx - s_pic.u.vx) ** 2
                       + (s_split.u.vy - s_pic.u.vy) ** 2).mean())
        gap /= np.sqrt((s_split.u.vx ** 2 + s_split.u.vy ** 2).mean())
        halving = dt_refinement_error(grid64, rho0, u0, p, dt, n)
        assert gap <= 2.0 * halving

    def test_not_contracting_guard(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        rho0 = bump_density(grid64, eps=0.3)
        state = initial_state(grid64, rho0, u0, FractionalParams(0.75))
        with pytest.raises(PicardNotContracting):
            picard_iterate(state, 0.01, n_max=2, tol=1e-15)


class TestScaling:
    def test_lambda_one_is_exact(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        rho0 = bump_density(grid64)
        res = scaling_residual(grid64, rho0, u0, FractionalParams(0.75),
                               0.02, 5, 1.0)
        assert res == 0.0

    def test_lambda_two_within_self_error(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        rho0 = bump_density(grid64)
        p = FractionalParams(0.75)
        res = scaling_residual(grid64, rho0, u0, p, 0.02, 10, 2.0)
        halving = dt_refinement_error(grid64, rho0, u0, p, 0.02, 10)
        assert res <= 5.0 * halving

    def test_wrong_exponent_negative_control(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4) * 0.3
        rho0 = bump_density(grid64)
        p = FractionalParams(0.75)
        good = scaling_residual(grid64, rho0, u0, p, 0.02, 10, 2.0)
        bad = scaling_residual(grid64, rho0, u0, p, 0.02, 10, 2.0,
                               velocity_exponent_offset=2.0 - 2.0 * p.alpha)
        assert bad >= 10.0 * max(good, 1e-12)

    def test_power_of_two_guard(self, grid64, rng):
        u0 = band_limited_divfree(grid64, rng, mmax=4)
        with pytest.raises(GridMismatch):
            rescaled_initial_data(grid64, bump_density(grid64), u0,
                                  FractionalParams(0.75), 3.0)
