"""Named verification suites behind the command line: each check computes a
value, compares it against its documented bound, and reports a line.  Exit
status of the CLI is zero only when every hard check passes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .besov import (
    BesovParams,
    DyadicPartition,
    besov_norm,
    chi_profile,
    fd_besov_norm,
    semigroup_besov_norm,
)
from .flow import VelocitySeries
from .grid import Grid2D, ScalarField, VectorField2
from .lagrangian import (
    dissipation_norm_identity,
    lagrangian_state,
    pv_fractional_gradient,
    pv_fractional_laplacian,
)
from .singular import pv_kernel_constant, pv_kernel_constant_2d
from .solver import (
    dt_refinement_error,
    initial_state,
    scaling_residual,
    simulate,
    step_homogeneous,
)
from .spectral import (
    FractionalParams,
    divergence,
    fractional_laplacian,
    gradient,
    heat_semigroup,
    kernel_decay_product,
    kernel_profile,
    leray_project,
    maximal_regularity_operator,
)

SUITE_NAMES = ("kernels", "besov", "lagrangian", "scaling")


@dataclass
class CheckResult:
    suite: str
    name: str
    value: float
    bound: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        note = f"  ({self.note})" if self.note else ""
        return (f"[{mark}] {self.suite}/{self.name}: "
                f"value {self.value:.3e} vs bound {self.bound:.3e}{note}")


def _check(results, suite, name, value, bound, note=""):
    results.append(CheckResult(suite, name, float(value), float(bound),
                               bool(value <= bound), note))


def _random_scalar(grid, rng, mmax=4):
    hat = np.zeros((grid.n, grid.n), dtype=complex)
    for m1 in range(-mmax, mmax + 1):
        for m2 in range(-mmax, mmax + 1):
            if (m1, m2) == (0, 0) or m1 * m1 + m2 * m2 > mmax * mmax:
                continue
            hat[m1, m2] = rng.normal() + 1j * rng.normal()
    vals = np.fft.ifft2(hat).real
    return ScalarField(grid, vals / max(np.abs(vals).max(), 1e-300))


def _random_divfree(grid, rng, mmax=4):
    psi = _random_scalar(grid, rng, mmax)
    return VectorField2.from_hat(grid, -1j * grid.ky * psi.hat,
                                 1j * grid.kx * psi.hat)


def verify_kernels(n: int = 128, seed: int = 0) -> list:
    out = []
    grid = Grid2D(n, 2.0 * np.pi)
    rng = np.random.default_rng(seed)
    pa = FractionalParams(0.75, nu=1.0)

    X, Y = grid.meshes()
    mode = ScalarField(grid, np.cos(3.0 * X + 4.0 * Y))
    decayed = heat_semigroup(mode, 0.1, pa)
    exact = math.exp(-0.1 * 5.0 ** 1.5)
    _check(out, "kernels", "heat-single-mode",
           np.abs(decayed.values - exact * mode.values).max() / exact, 1e-8,
           "single mode |k|=5, factor exp(-0.1*5^1.5)")

    f = _random_scalar(grid, rng, mmax=10)
    once = heat_semigroup(f, 0.1, pa)
    twice = heat_semigroup(heat_semigroup(f, 0.05, pa), 0.05, pa)
    _check(out, "kernels", "semigroup-composition",
           (twice - once).l2_norm() / once.l2_norm(), 1e-12)

    two = fractional_laplacian(fractional_laplacian(f, 0.7), 0.6)
    onestep = fractional_laplacian(f, 1.3)
    _check(out, "kernels", "multiplier-composition",
           (two - onestep).l2_norm() / onestep.l2_norm(), 1e-11)

    u = _random_divfree(grid, rng, mmax=8)
    g = gradient(_random_scalar(grid, rng, mmax=8))
    proj = leray_project(u + g)
    _check(out, "kernels", "leray-helmholtz",
           (proj - u).l2_norm() / u.l2_norm(), 1e-11)
    _check(out, "kernels", "leray-divergence",
           divergence(proj).l2_norm() / proj.l2_norm(), 1e-11)

    times = np.linspace(0.0, 1.0, 33)
    mode2 = ScalarField(grid, np.cos(2.0 * X))
    duh = maximal_regularity_operator([mode2] * times.size, times, pa)
    factor = -math.expm1(-2.0 ** 1.5)
    _check(out, "kernels", "duhamel-constant-mode",
           np.abs(duh.values - factor * mode2.values).max() / factor, 1e-9)

    radii = np.linspace(0.0, 10.0, 41)
    prof = kernel_profile(radii, alpha=0.5, d=2)
    poisson = (1.0 / (2.0 * np.pi)) * (1.0 + radii ** 2) ** (-1.5)
    _check(out, "kernels", "kernel-poisson-closed-form",
           np.abs(prof - poisson).max() / poisson.max(), 1e-4)

    for alpha in (0.6, 0.75, 0.9):
        radii = np.linspace(0.0, 20.0, 41)
        prod = kernel_decay_product(radii, kernel_profile(radii, alpha, d=2),
                                    alpha, d=2)
        _check(out, "kernels", f"kernel-decay-bounded-a{alpha}",
               prod.max(), 10.0, "boundedness of |K| (1+r)^(2+2a)")

    radii = np.linspace(0.1, 4.0, 9)
    base = kernel_profile(radii * 2.0 ** (-1.0 / 1.5), 0.75, d=2, rtol=1e-9)
    left = kernel_profile(radii, 0.75, d=2, t=2.0, rtol=1e-9)
    right = 2.0 ** (-2.0 / 1.5) * base
    _check(out, "kernels", "kernel-self-similarity",
           np.abs(left - right).max() / np.abs(right).max(), 1e-6)
    return out


def verify_besov(n: int = 64, seed: int = 0) -> list:
    out = []
    grid = Grid2D(n, 2.0 * np.pi)
    part = DyadicPartition.for_grid(grid)
    rng = np.random.default_rng(seed)
    pa = FractionalParams(0.75)

    kmag = grid.kmag
    total = chi_profile(kmag / part.ref_freq)
    for j in range(0, 12):
        total = total + part.shell_weight(j, kmag)
    _check(out, "besov", "partition-of-unity",
           np.abs(total - 1.0).max(), 1e-10)

    ratios_fd, ratios_sg, ratios_sob = [], [], []
    for _ in range(20):
        f = _random_scalar(grid, rng, mmax=8)
        bn = besov_norm(f, BesovParams(0.5, 2, 2, part))
        ratios_fd.append(fd_besov_norm(f, BesovParams(0.5, 2, 2, part)) / bn)
        bneg = besov_norm(f, BesovParams(-0.5, 2, 2, part))
        ratios_sg.append(semigroup_besov_norm(f, 0.5, pa) / bneg)
        ratios_sob.append(bn / fractional_laplacian(f, 0.5).l2_norm())
    for name, ratios, cap in (("fd-equivalence", ratios_fd, 10.0),
                              ("semigroup-equivalence", ratios_sg, 10.0),
                              ("sobolev-agreement", ratios_sob, 3.0)):
        worst = max(max(ratios), 1.0 / min(ratios))
        _check(out, "besov", name, worst, cap,
               f"ratio range [{min(ratios):.3f}, {max(ratios):.3f}]")

    c_prod = 0.0
    c_leib = 0.0
    for _ in range(10):
        u = _random_scalar(grid, rng, mmax=8)
        v = _random_scalar(grid, rng, mmax=8)
        bp = BesovParams(0.5, 4, 2, part)
        lhs = besov_norm(ScalarField(grid, u.values * v.values), bp)
        rhs = (besov_norm(u, bp) * np.abs(v.values).max()
               + besov_norm(v, bp) * np.abs(u.values).max())
        c_prod = max(c_prod, lhs / rhs)
        fg = ScalarField(grid, u.values * v.values)
        lhs2 = fractional_laplacian(fg, 0.8).l2_norm()
        rhs2 = (fractional_laplacian(u, 0.8).lp_norm(4) * v.lp_norm(4)
                + u.lp_norm(4) * fractional_laplacian(v, 0.8).lp_norm(4))
        c_leib = max(c_leib, lhs2 / rhs2)
    _check(out, "besov", "product-estimate-constant", c_prod, 20.0)
    _check(out, "besov", "fractional-leibniz-constant", c_leib, 20.0)
    return out


def verify_lagrangian(n: int = 128, seed: int = 0) -> list:
    out = []
    worst = 0.0
    for alpha in np.linspace(0.05, 0.95, 20):
        a = pv_kernel_constant(alpha, d=2)
        b = pv_kernel_constant_2d(alpha)
        worst = max(worst, abs(a - b) / b)
    _check(out, "lagrangian", "kernel-constant-identity", worst, 1e-12,
           "two Gamma-function forms of the planar constant")

    grid = Grid2D(n, 2.0 * np.pi)
    rng = np.random.default_rng(seed)
    f = _random_scalar(grid, rng, mmax=3)
    alpha = 0.75
    mult = np.zeros_like(grid.kmag)
    nzk = grid.kmag > 0
    mult[nzk] = grid.kmag[nzk] ** (2 * alpha - 2)
    ref = ScalarField.from_hat(grid, 1j * grid.kx * mult * f.hat)
    pv = pv_fractional_gradient(f, 0, alpha)
    _check(out, "lagrangian", "pv-gradient-vs-multiplier",
           (pv - ref).l2_norm() / ref.l2_norm(), 1e-3)
    pvl = pv_fractional_laplacian(f, alpha)
    refl = fractional_laplacian(f, 2 * alpha)
    _check(out, "lagrangian", "pv-dissipation-vs-multiplier",
           (pvl - refl).l2_norm() / refl.l2_norm(), 1e-3)

    small = Grid2D(64, 2.0 * np.pi)
    pa = FractionalParams(alpha, nu=0.5)
    u0 = _random_divfree(small, rng, mmax=3) * 0.5
    Xs, Ys = small.meshes()
    rho0 = ScalarField(small, 1.0 + 0.01 * np.exp(
        -((Xs - np.pi) ** 2 + (Ys - np.pi) ** 2)))
    run = simulate(initial_state(small, rho0, u0, pa), 0.02, 6,
                   keep_states=True)
    series = VelocitySeries(np.array([s.t for s in run]), [s.u for s in run])
    ls = lagrangian_state(series, run[-1].t, run[-1].pi, run[-1].rho,
                          run[0].rho, pa)
    lo, hi = ls.window_ratios()
    _check(out, "lagrangian", "pair-window-upper", hi, 4.0 / 3.0)
    _check(out, "lagrangian", "pair-window-lower", 1.0 / lo, 4.0 / 3.0)
    lhs, rhs = dissipation_norm_identity(ls, run[-1].u)
    _check(out, "lagrangian", "norm-identity",
           abs(lhs - rhs) / rhs, 1e-3, "change of variables, short flow")
    return out


def verify_scaling(n: int = 64, seed: int = 0) -> list:
    out = []
    grid = Grid2D(n, 2.0 * np.pi)
    rng = np.random.default_rng(seed)
    pa = FractionalParams(0.75)
    u0 = _random_divfree(grid, rng, mmax=4) * 0.3
    X, Y = grid.meshes()
    rho0 = ScalarField(grid, 1.0 + 0.01 * np.exp(
        -((X - np.pi) ** 2 + (Y - np.pi) ** 2)))
    res1 = scaling_residual(grid, rho0, u0, pa, 0.02, 5, 1.0)
    _check(out, "scaling", "identity-factor-exact", res1, 0.0)
    res2 = scaling_residual(grid, rho0, u0, pa, 0.02, 10, 2.0)
    halving = dt_refinement_error(grid, rho0, u0, pa, 0.02, 10)
    _check(out, "scaling", "dilation-residual", res2, 5.0 * halving,
           f"dt-halving self-error {halving:.3e}")
    bad = scaling_residual(grid, rho0, u0, pa, 0.02, 10, 2.0,
                           velocity_exponent_offset=2.0 - 2.0 * pa.alpha)
    _check(out, "scaling", "mis-scaled-control",
           10.0 * max(res2, 1e-12), bad,
           "wrong exponent must stand out by 10x")
    return out


def run_suites(names, n_kernels: int = 128, seed: int = 0,
               threads: int = 1) -> list:
    """Run the named suites, optionally on a thread pool (every check is a
    pure function of its inputs, so suites can execute concurrently)."""
    runners = {
        "kernels": lambda: verify_kernels(n_kernels, seed),
        "besov": lambda: verify_besov(64, seed),
        "lagrangian": lambda: verify_lagrangian(n_kernels, seed),
        "scaling": lambda: verify_scaling(64, seed),
    }
    results = []
    if threads > 1 and len(names) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(lambda n: runners[n](), names):
                results.extend(chunk)
    else:
        for name in names:
            results.extend(runners[name]())
    return results
