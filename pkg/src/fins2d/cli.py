"""Command-line entry point: run simulations, verification suites, the patch
demonstration, and the dilation-invariance check.

Outputs are deterministic for a fixed configuration and seed: diagnostics go
to a CSV ledger, fields to bit-exact binary snapshots, and every run writes a
plain-text summary with no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .diagnostics import DiagnosticsMonitor, estimate_report, records_to_csv
from .errors import ConfigError, Fins2dError
from .flow import VelocitySeries
from .grid import Grid2D, ScalarField, VectorField2
from .patch import PatchContour, advect_contour, init_contour, rasterize_patch, \
    tangent_angles
from .snapshot import Snapshot, write_snapshot
from .solver import SimState, dt_refinement_error, initial_state, \
    scaling_residual, simulate, step_inhomogeneous
from .spectral import FractionalParams, leray_project
from .verify import SUITE_NAMES, run_suites


def build_initial_fields(cfg: RunConfig):
    grid = Grid2D(cfg.n, cfg.box_length)
    X, Y = grid.meshes()
    rng = np.random.default_rng(cfg.seed)
    if cfg.velocity == "taylor-green":
        k0 = grid.base_frequency
        u0 = VectorField2(grid,
                          -cfg.velocity_amplitude * np.cos(k0 * X) * np.sin(k0 * Y),
                          cfg.velocity_amplitude * np.sin(k0 * X) * np.cos(k0 * Y))
    elif cfg.velocity == "random":
        hat = np.zeros((cfg.n, cfg.n), dtype=complex)
        m = cfg.velocity_modes
        for m1 in range(-m, m + 1):
            for m2 in range(-m, m + 1):
                if (m1, m2) == (0, 0) or m1 * m1 + m2 * m2 > m * m:
                    continue
                hat[m1, m2] = rng.normal() + 1j * rng.normal()
        psi = np.fft.ifft2(hat).real
        psi /= max(np.abs(psi).max(), 1e-300)
        phat = np.fft.fft2(cfg.velocity_amplitude * psi)
        u0 = VectorField2.from_hat(grid, -1j * grid.ky * phat, 1j * grid.kx * phat)
    else:
        u0 = VectorField2.zeros(grid)
    u0 = leray_project(u0)

    contour = None
    center = (cfg.box_length / 2.0, cfg.box_length / 2.0)
    if cfg.density == "uniform":
        rho0 = ScalarField(grid, np.ones((cfg.n, cfg.n)))
    elif cfg.density == "bump":
        r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2
        rho0 = ScalarField(grid, 1.0 + cfg.density_amplitude * np.exp(-r2))
    else:
        contour = init_contour(cfg.patch_shape, cfg.patch_markers,
                               sigma=cfg.density_amplitude, gamma=cfg.gamma,
                               center=center, radius=cfg.patch_radius)
        rho0 = rasterize_patch(contour, grid)
    return grid, rho0, u0, contour


def contour_csv(contour: PatchContour) -> str:
    """Marker table: arclength, position, tangent angle, curvature."""
    s = contour.arclengths()
    theta = tangent_angles(contour)
    # curvature from centered differences of the tangent angle
    ds_f = np.roll(s, -1) - s
    ds_f[-1] = contour.perimeter() - s[-1]
    dth = np.roll(theta, -1) - theta
    dth[-1] = theta[0] + 2.0 * np.pi - theta[-1]
    kappa = dth / np.where(ds_f == 0.0, 1.0, ds_f)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["s", "x1", "x2", "theta", "kappa"])
    for i in range(contour.m):
        writer.writerow([repr(float(s[i])), repr(float(contour.markers[i, 0])),
                         repr(float(contour.markers[i, 1])),
                         repr(float(theta[i])), repr(float(kappa[i]))])
    return buf.getvalue()


def _write_state_snapshot(path: Path, state: SimState):
    fields = {
        "rho": state.rho.values,
        "u1": state.u.vx,
        "u2": state.u.vy,
        "pi": state.pi.values,
    }
    write_snapshot(path, Snapshot(state.u.grid.n, state.u.grid.box_length,
                                  state.t, state.params.alpha, fields))


def cmd_simulate(cfg: RunConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, rho0, u0, contour = build_initial_fields(cfg)
    params = FractionalParams(cfg.alpha, cfg.nu)
    state = initial_state(grid, rho0, u0, params)
    monitor = DiagnosticsMonitor(besov_p=cfg.besov_p, gamma=cfg.gamma,
                                 patch=contour)
    n_steps = int(round(cfg.t_end / cfg.dt))
    _write_state_snapshot(out_dir / "snap_000000.fins", state)
    if contour is not None:
        (out_dir / "contour_000000.csv").write_text(contour_csv(contour))
    monitor.observe(state, patch=contour)
    cap = 1e3 * max(u0.max_norm(), 1e-300)
    for step in range(1, n_steps + 1):
        prev_u = state.u
        state = step_inhomogeneous(state, cfg.dt, interpolant=cfg.interpolant,
                                   max_norm_cap=cap)
        if contour is not None:
            series = VelocitySeries(np.array([state.t - cfg.dt, state.t]),
                                    [prev_u, state.u])
            contour = advect_contour(contour, series, state.t - cfg.dt, state.t)
        if step % cfg.diag_every == 0 or step == n_steps:
            monitor.observe(state, patch=contour)
        if cfg.snapshot_every and step % cfg.snapshot_every == 0:
            _write_state_snapshot(out_dir / f"snap_{step:06d}.fins", state)
            if contour is not None:
                (out_dir / f"contour_{step:06d}.csv").write_text(
                    contour_csv(contour))
    _write_state_snapshot(out_dir / f"snap_{n_steps:06d}.fins", state)
    if contour is not None:
        (out_dir / f"contour_{n_steps:06d}.csv").write_text(contour_csv(contour))
    (out_dir / "diagnostics.csv").write_text(records_to_csv(monitor.records))
    report = estimate_report(monitor.records, monitor.initial_norms, cfg.alpha) \
        if len(monitor.records) >= 2 else None
    lines = [f"steps: {n_steps}", f"final_time: {state.t!r}",
             f"final_energy: {state.u.l2_norm() ** 2!r}"]
    if report is not None:
        lines.extend(report.lines())
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def cmd_verify(suites, n_kernels: int, seed: int, threads: int = 1) -> int:
    results = run_suites(suites, n_kernels=n_kernels, seed=seed,
                         threads=threads)
    for res in results:
        print(res.line())
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 1 if n_fail else 0


def cmd_patch_demo(cfg: RunConfig, out_dir: Path) -> int:
    cfg.density = "patch"
    cfg.validate()
    return cmd_simulate(cfg, out_dir)


def cmd_scaling_check(cfg: RunConfig, out_dir: Path, lam: float) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, rho0, u0, _ = build_initial_fields(cfg)
    params = FractionalParams(cfg.alpha, cfg.nu)
    n_steps = int(round(cfg.t_end / cfg.dt))
    res = scaling_residual(grid, rho0, u0, params, cfg.dt, n_steps, lam,
                           interpolant=cfg.interpolant)
    halving = dt_refinement_error(grid, rho0, u0, params, cfg.dt, n_steps,
                                  interpolant=cfg.interpolant)
    bad = scaling_residual(grid, rho0, u0, params, cfg.dt, n_steps, lam,
                           velocity_exponent_offset=2.0 - 2.0 * cfg.alpha,
                           interpolant=cfg.interpolant)
    ok = res <= 5.0 * halving and bad >= 10.0 * max(res, 1e-12)
    lines = [
        f"lambda: {lam!r}",
        f"dilation_residual: {res!r}",
        f"dt_halving_error: {halving!r}",
        f"mis_scaled_residual: {bad!r}",
        f"passed: {ok}",
    ]
    (out_dir / "scaling.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fins2d",
        description="pseudo-spectral simulator and verification harness for "
                    "2D fractional inhomogeneous Navier-Stokes flow")
    parser.add_argument("--config", type=Path, help="key=value run file")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--threads", type=int,
                        help="worker threads for FFT-heavy stages")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="advance the system and write artifacts")
    p_verify = sub.add_parser("verify", help="run a named property suite")
    p_verify.add_argument("--suite", default="all",
                          help="kernels|besov|lagrangian|scaling|all")
    p_verify.add_argument("--n", type=int, default=128,
                          help="grid size for the heavy checks")
    sub.add_parser("patch-demo", help="disk-patch run with contour output")
    p_scale = sub.add_parser("scaling-check",
                             help="dilation-invariance residuals")
    p_scale.add_argument("--factor", type=float, default=2.0)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else RunConfig().validate()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads is not None:
            cfg.threads = args.threads
        out_dir = Path(args.out) if args.out else Path(cfg.out_dir)

        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir)
        if args.command == "verify":
            if args.suite == "all":
                suites = list(SUITE_NAMES)
            elif args.suite in SUITE_NAMES:
                suites = [args.suite]
            else:
                print(f"unknown suite {args.suite!r}; choose from "
                      f"{', '.join(SUITE_NAMES)} or all", file=sys.stderr)
                return 2
            return cmd_verify(suites, args.n, cfg.seed, threads=cfg.threads)
        if args.command == "patch-demo":
            return cmd_patch_demo(cfg, out_dir)
        if args.command == "scaling-check":
            return cmd_scaling_check(cfg, out_dir, args.factor)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Fins2dError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
