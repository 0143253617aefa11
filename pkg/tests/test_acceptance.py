"""Acceptance gate: every quantitative criterion of the build contract, one
test per criterion, each printing a pass/fail line with the measured value.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
pass; tolerances are pinned here and nowhere else.
"""

import math
import time

import numpy as np
import pytest

from fins2d.besov import (
    BesovParams,
    DyadicPartition,
    besov_norm,
    chi_profile,
    fd_besov_norm,
    semigroup_besov_norm,
)
from fins2d.flow import (
    VelocitySeries,
    gronwall_gradient_envelope,
    holder_gradient_norm,
    integrate_flow,
    velocity_holder_integral,
)
from fins2d.grid import Grid2D, ScalarField, VectorField2
from fins2d.lagrangian import (
    contraction_experiment,
    dissipation_norm_identity,
    lagrangian_state,
    pv_fractional_gradient,
    pv_fractional_laplacian,
)
from fins2d.patch import (
    advect_contour,
    c1gamma_seminorm,
    init_contour,
    rasterize_patch,
    second_moment_axes,
    tangent_angles,
)
from fins2d.singular import pv_kernel_constant, pv_kernel_constant_2d
from fins2d.solver import (
    dt_refinement_error,
    initial_state,
    picard_iterate,
    scaling_residual,
    simulate,
    step_inhomogeneous,
)
from fins2d.spectral import (
    FractionalParams,
    fractional_laplacian,
    heat_semigroup,
    kernel_decay_product,
    kernel_profile,
)

from conftest import band_limited_divfree, band_limited_scalar


def report(name, value, bound, ok=None):
    ok = (value <= bound) if ok is None else ok
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {value:.6e} vs {bound:.6e}")
    assert ok
    return ok


def smooth_steady_series(grid, rng, scale, t1, mmax=2, n_samples=2):
    u = band_limited_divfree(grid, rng, mmax=mmax) * scale
    return VelocitySeries(np.linspace(0.0, t1, max(n_samples, 2)),
                          [u] * max(n_samples, 2))


class TestAcceptance:
    def test_01_fractional_heat_exactness(self):
        # single mode |k| = 5, alpha = 0.75, nu = 1, t = 0.1 decays by
        # exp(-0.1 * 5^1.5); relative error <= 1e-8, runtime < 1 s at N=64
        start = time.time()
        grid = Grid2D(64, 2 * np.pi)
        X, Y = grid.meshes()
        f = ScalarField(grid, np.cos(3.0 * X + 4.0 * Y))
        out = heat_semigroup(f, 0.1, FractionalParams(0.75, nu=1.0))
        exact = math.exp(-0.1 * 5.0 ** 1.5)
        err = np.abs(out.values - exact * f.values).max() / exact
        elapsed = time.time() - start
        report("fractional-heat-exactness", err, 1e-8)
        report("fractional-heat-runtime-s", elapsed, 1.0)

    def test_02_kernel_closed_form_and_decay(self):
        radii = np.linspace(0.0, 10.0, 41)
        prof = kernel_profile(radii, alpha=0.5, d=2)
        exact = (1.0 / (2.0 * np.pi)) * (1.0 + radii ** 2) ** (-1.5)
        report("kernel-poisson-closed-form",
               np.max(np.abs(prof - exact) / exact), 1e-4)
        tail = np.linspace(5.0, 25.0, 41)
        for alpha in (0.6, 0.75, 0.9):
            prod = kernel_decay_product(tail, kernel_profile(tail, alpha, d=2),
                                        alpha, d=2)
            ok = bool(np.all(np.isfinite(prod)) and prod.max() <= 10.0)
            report(f"kernel-decay-bounded-alpha-{alpha}", prod.max(), 10.0, ok)

    def test_03_gamma_constant_identity(self):
        worst = 0.0
        for alpha in np.linspace(0.05, 0.95, 20):
            a = pv_kernel_constant(alpha, d=2)
            b = pv_kernel_constant_2d(alpha)
            worst = max(worst, abs(a - b) / b)
        report("gamma-constant-identity", worst, 1e-12)

    def test_04_pv_vs_spectral_multipliers(self):
        start = time.time()
        grid = Grid2D(128, 2 * np.pi)
        alpha = 0.75
        f = band_limited_scalar(grid, np.random.default_rng(0), mmax=3)
        mult = np.zeros_like(grid.kmag)
        nzk = grid.kmag > 0
        mult[nzk] = grid.kmag[nzk] ** (2 * alpha - 2)
        ref_g = ScalarField.from_hat(grid, 1j * grid.kx * mult * f.hat)
        err_g = (pv_fractional_gradient(f, 0, alpha) - ref_g).l2_norm() \
            / ref_g.l2_norm()
        ref_l = fractional_laplacian(f, 2 * alpha)
        err_l = (pv_fractional_laplacian(f, alpha) - ref_l).l2_norm() \
            / ref_l.l2_norm()
        elapsed = time.time() - start
        report("pv-gradient-vs-multiplier", err_g, 1e-3)
        report("pv-dissipation-vs-multiplier", err_l, 1e-3)
        report("pv-runtime-s", elapsed, 300.0)

    def test_05_lagrangian_norm_identity_three_flows(self):
        grid = Grid2D(64, 2 * np.pi)
        pa = FractionalParams(0.75, nu=0.5)
        X, Y = grid.meshes()
        rho0 = ScalarField(grid, 1.0 + 0.01 * np.exp(
            -((X - np.pi) ** 2 + (Y - np.pi) ** 2)))
        for seed in (1, 2, 3):
            u0 = band_limited_divfree(grid, np.random.default_rng(seed),
                                      mmax=3) * 0.5
            run = simulate(initial_state(grid, rho0, u0, pa), 0.02, 6,
                           keep_states=True)
            series = VelocitySeries(np.array([s.t for s in run]),
                                    [s.u for s in run])
            ls = lagrangian_state(series, run[-1].t, run[-1].pi, run[-1].rho,
                                  run[0].rho, pa)
            lo, hi = ls.window_ratios(n_pairs=10 ** 4, seed=seed)
            ok = 0.75 <= lo and hi <= 4.0 / 3.0
            report(f"bi-lipschitz-window-seed{seed}", hi, 4.0 / 3.0, ok)
            lhs, rhs = dissipation_norm_identity(ls, run[-1].u)
            report(f"norm-identity-seed{seed}", abs(lhs - rhs) / rhs, 1e-3)

    def test_06_energy_balance(self):
        # constant-density run, N = 128, dt = 1e-3, T = 1
        grid = Grid2D(128, 2 * np.pi)
        nu = 0.5 / 2.0 ** 0.75
        pa = FractionalParams(0.75, nu=nu)
        X, Y = grid.meshes()
        u0 = VectorField2(grid, -0.8 * np.cos(X) * np.sin(Y),
                          0.8 * np.sin(X) * np.cos(Y))
        rho0 = ScalarField(grid, np.ones((128, 128)))
        state = initial_state(grid, rho0, u0, pa)
        dt = 1e-3
        e0 = state.u.l2_norm() ** 2
        diss = 0.0
        prev = fractional_laplacian(state.u, pa.alpha).l2_norm() ** 2
        for _ in range(1000):
            state = step_inhomogeneous(state, dt)
            cur = fractional_laplacian(state.u, pa.alpha).l2_norm() ** 2
            diss += nu * dt * (prev + cur)
            prev = cur
        defect = abs(state.u.l2_norm() ** 2 + diss - e0) / e0
        report("energy-balance", defect, 1e-6)

    def test_07_max_principle_patch(self):
        # clamped transport keeps sup|rho - 1| nonincreasing over 1000 steps
        grid = Grid2D(64, 2 * np.pi)
        pa = FractionalParams(0.75, nu=0.5)
        contour = init_contour("disk", 256, sigma=0.05)
        rho0 = rasterize_patch(contour, grid)
        u0 = band_limited_divfree(grid, np.random.default_rng(4), mmax=2) * 0.4
        state = initial_state(grid, rho0, u0, pa)
        dev = np.abs(state.rho.values - 1.0).max()
        violations = 0
        for _ in range(1000):
            state = step_inhomogeneous(state, 2e-3, interpolant="clamped")
            new_dev = np.abs(state.rho.values - 1.0).max()
            if new_dev > dev:
                violations += 1
            dev = new_dev
        report("max-principle-violations", violations, 0.0,
               ok=violations == 0)

    def test_08_scaling_invariance(self):
        grid = Grid2D(64, 2 * np.pi)
        pa = FractionalParams(0.75)
        u0 = band_limited_divfree(grid, np.random.default_rng(5), mmax=4) * 0.3
        X, Y = grid.meshes()
        rho0 = ScalarField(grid, 1.0 + 0.01 * np.exp(
            -((X - np.pi) ** 2 + (Y - np.pi) ** 2)))
        res = scaling_residual(grid, rho0, u0, pa, 0.02, 10, 2.0)
        halving = dt_refinement_error(grid, rho0, u0, pa, 0.02, 10)
        report("scaling-residual", res, 5.0 * halving)
        bad = scaling_residual(grid, rho0, u0, pa, 0.02, 10, 2.0,
                               velocity_exponent_offset=2.0 - 2.0 * pa.alpha)
        report("scaling-negative-control", 10.0 * max(res, 1e-12), bad,
               ok=bad >= 10.0 * max(res, 1e-12))

    def test_09_besov_equivalences(self):
        grid = Grid2D(64, 2 * np.pi)
        part = DyadicPartition.for_grid(grid)
        kmag = grid.kmag
        total = chi_profile(kmag / part.ref_freq)
        for j in range(0, 12):
            total = total + part.shell_weight(j, kmag)
        report("partition-of-unity", np.abs(total - 1.0).max(), 1e-10)
        rng = np.random.default_rng(11)
        pa = FractionalParams(0.75)
        worst_fd, worst_sg = 1.0, 1.0
        for _ in range(20):
            f = band_limited_scalar(grid, rng, mmax=8)
            bn = besov_norm(f, BesovParams(0.5, 2, 2, part))
            r_fd = fd_besov_norm(f, BesovParams(0.5, 2, 2, part)) / bn
            bneg = besov_norm(f, BesovParams(-0.5, 2, 2, part))
            r_sg = semigroup_besov_norm(f, 0.5, pa) / bneg
            worst_fd = max(worst_fd, r_fd, 1.0 / r_fd)
            worst_sg = max(worst_sg, r_sg, 1.0 / r_sg)
        report("fd-equivalence-ratio-cap", worst_fd, 10.0)
        report("semigroup-equivalence-ratio-cap", worst_sg, 10.0)

    def test_10_picard_contraction(self):
        grid = Grid2D(64, 2 * np.pi)
        pa = FractionalParams(0.75)
        u0 = band_limited_divfree(grid, np.random.default_rng(6), mmax=4) * 0.3
        X, Y = grid.meshes()
        rho0 = ScalarField(grid, 1.0 + 0.01 * np.exp(
            -((X - np.pi) ** 2 + (Y - np.pi) ** 2)))
        assert abs(np.abs(rho0.values - 1.0).max() - 0.01) <= 1e-12
        state = initial_state(grid, rho0, u0, pa)
        _, sweeps, ratios = picard_iterate(state, 0.01)
        report("picard-contraction-ratio", max(ratios), 0.5)
        # agreement with the split stepper at t = 0.1
        dt, n = 0.01, 10
        s_split = initial_state(grid, rho0, u0, pa)
        s_pic = initial_state(grid, rho0, u0, pa)
        for _ in range(n):
            s_split = step_inhomogeneous(s_split, dt)
            s_pic, _, _ = picard_iterate(s_pic, dt)
        gap = np.sqrt(((s_split.u.vx - s_pic.u.vx) ** 2
                       + (s_split.u.vy - s_pic.u.vy) ** 2).mean())
        gap /= np.sqrt((s_split.u.vx ** 2 + s_split.u.vy ** 2).mean())
        halving = dt_refinement_error(grid, rho0, u0, pa, dt, n)
        report("picard-vs-split", gap, 2.0 * halving)

    def test_11_patch_geometry(self):
        # rigid rotation: area drift at machine scale
        grid = Grid2D(64, 2 * np.pi)
        c = init_contour("disk", 256, radius=1.0)
        center = np.pi

        def rot(t, X, Y):
            return -(Y - center), (X - center)

        series = VelocitySeries.from_callable(grid, rot, [0.0, 1.0])
        rotated = advect_contour(c, series, 0.0, 1.0, substeps=128)
        report("rotating-disk-area-drift",
               abs(rotated.area() - c.area()) / c.area(), 1e-10)

        # steady shear maps the disk onto the golden-ratio ellipse at t = 1
        fine = Grid2D(128, 2 * np.pi)

        def shear(t, X, Y):
            return Y - center, np.zeros_like(X)

        sh_series = VelocitySeries.from_callable(fine, shear, [0.0, 1.0])
        c2 = init_contour("disk", 1024, radius=1.0)
        sheared = advect_contour(c2, sh_series, 0.0, 1.0, substeps=64)
        major, minor = second_moment_axes(sheared)
        report("shear-ellipse-major-axis",
               abs(major - 1.618033988749895), 1e-4)
        report("shear-ellipse-minor-axis",
               abs(minor - 0.6180339887498948), 1e-4)

        # smooth run, T = 1: the flow-gradient Holder seminorm stays under
        # its Gronwall envelope, and the advected boundary's tangent-angle
        # seminorm stays under the induced bound
        gamma = 0.5
        rng = np.random.default_rng(12)
        series = smooth_steady_series(grid, rng, 0.25, 1.0, mmax=2)
        fm = integrate_flow(series, 0.0, 1.0)
        measured = holder_gradient_norm(fm, gamma)
        envelope = gronwall_gradient_envelope(series, fm, gamma)
        report("flow-gradient-vs-envelope", measured, envelope)
        c3 = init_contour("disk", 512, radius=1.2, gamma=gamma)
        moved = advect_contour(c3, series, 0.0, 1.0, substeps=64)
        semi = c1gamma_seminorm(moved, gamma)
        # induced bound: pi (sup|gradX| [theta0]_gamma + envelope) / m^(1+gamma)
        g11, g12, g21, g22 = fm.gradient_arrays()
        aa = g11 ** 2 + g12 ** 2 + g21 ** 2 + g22 ** 2
        det = g11 * g22 - g12 * g21
        smax = 0.5 * (np.sqrt(np.maximum(aa + 2 * det, 0))
                      + np.sqrt(np.maximum(aa - 2 * det, 0)))
        sup_m = float(smax.max())
        min_m = float((np.abs(det) / smax).min())
        theta0 = c1gamma_seminorm(c3, gamma)
        bound = np.pi * (sup_m * theta0 + envelope) / min_m ** (1.0 + gamma)
        report("patch-seminorm-vs-envelope", semi, bound)

    def test_12_contraction_experiment(self):
        grid = Grid2D(32, 2 * np.pi)
        pa = FractionalParams(0.75, nu=0.5)
        u0 = band_limited_divfree(grid, np.random.default_rng(7), mmax=3) * 0.5
        X, Y = grid.meshes()
        rho0 = ScalarField(grid, 1.0 + 0.01 * np.exp(
            -((X - np.pi) ** 2 + (Y - np.pi) ** 2)))
        rep = contraction_experiment(grid, u0, rho0, u0, rho0, pa,
                                     [0.04, 0.08], 0.005, ledger_knots=0)
        ok = rep.vanishes()
        report("identical-run-difference-energy",
               max(r.delta_e for r in rep.rows), 0.0, ok)
        u0b = band_limited_divfree(grid, np.random.default_rng(8), mmax=3) * 0.5
        rep2 = contraction_experiment(grid, u0, rho0, u0b, rho0, pa,
                                      [0.02, 0.04, 0.08], 0.005,
                                      ledger_knots=0)
        des = [r.delta_e for r in rep2.rows]
        ok = min(des) > 0.25 * max(des) and min(des) > 0.01
        report("distinct-data-negative-control", min(des), 0.01,
               ok=ok)
