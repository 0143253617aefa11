"""Per-step monitors that turn the analytic a priori bounds into pass/warn
records, and the run-level report of empirical constants.

Quantities with non-constructive constants are never asserted against a
prescribed value: the report instead returns the smallest constant making
each inequality hold over the run, so regressions show up as ledger growth.
Monitors only warn; they never abort a run.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .besov import BesovParams, DyadicPartition, besov_norm
from .errors import InsufficientData
from .grid import ScalarField, VectorField2
from .patch import PatchContour, c1gamma_seminorm
from .solver import SimState, perturbation_of
from .spectral import fractional_laplacian


@dataclass
class DiagnosticsRecord:
    """One row of the run ledger; cumulative fields integrate from t = 0."""

    t: float
    energy_l2: float              # |u|_L2^2
    dissipation_cum: float        # 2 nu int_0^t |Lam^a u|_L2^2
    besov_alpha_p2: float         # |u| in the (alpha, p, 2) dyadic norm
    rho_dev_linf: float
    rho_dev_l2: float
    w_energy_e2: float            # sup|w|_L2 + sqrt(int |Lam^a w|_L2^2)
    w_maxreg_ep: float            # sup besov(w) + sqrt(int lp-norms^2)
    patch_area: float
    patch_c1gamma: float
    pressure_iters: int
    divergence_residual: float
    warnings: tuple = field(default_factory=tuple)

    @classmethod
    def csv_header(cls):
        names = [f.name for f in dc_fields(cls) if f.name != "warnings"]
        return names + ["warnings"]

    def csv_row(self):
        vals = [repr(getattr(self, f.name)) for f in dc_fields(self)
                if f.name != "warnings"]
        return vals + [";".join(self.warnings)]


# column meanings, written into the CSV header block
COLUMN_NOTES = {
    "t": "simulation time",
    "energy_l2": "squared L2 norm of velocity; balance partner of dissipation_cum",
    "dissipation_cum": "2 nu int_0^t |Lam^alpha u|_L2^2 (trapezoid in t)",
    "besov_alpha_p2": "dyadic norm of u at indices (alpha, p, 2)",
    "rho_dev_linf": "sup |rho - 1|; transport keeps it nonincreasing",
    "rho_dev_l2": "L2 norm of rho - 1",
    "w_energy_e2": "energy functional of the deviation from the reference run",
    "w_maxreg_ep": "maximal-regularity functional of the deviation",
    "patch_area": "patch contour area; conserved by divergence-free flows",
    "patch_c1gamma": "tangent-angle Holder seminorm of the patch boundary",
    "pressure_iters": "sweeps used by the variable-coefficient pressure solve",
    "divergence_residual": "relative spectral divergence of the velocity",
    "warnings": "semicolon-joined monitor warnings for this step",
}


class DiagnosticsMonitor:
    """Accumulates records across a run; cheap enough to call every step."""

    def __init__(self, besov_p: float = 4.0, gamma: float = 0.5,
                 patch: PatchContour | None = None,
                 energy_warn: float = 1e-5, rho_warn: float = 0.0,
                 div_warn: float = 1e-9):
        self.besov_p = besov_p
        self.gamma = gamma
        self.patch = patch
        self.energy_warn = energy_warn
        self.rho_warn = rho_warn
        self.div_warn = div_warn
        self.records: list[DiagnosticsRecord] = []
        self._prev = None            # (t, state, perturbation, lam_a_sq)
        self._weighted0 = 0.0
        self._diss_cum = 0.0
        self._w_sup_l2 = 0.0
        self._w_diss_cum = 0.0
        self._w_besov_sup = 0.0
        self._w_lp_cum = 0.0
        self.initial_norms: dict = {}

    def observe(self, state: SimState,
                patch: PatchContour | None = None) -> DiagnosticsRecord:
        grid = state.u.grid
        part = DyadicPartition.for_grid(grid)
        params = state.params
        patch = patch if patch is not None else self.patch
        warnings = []

        energy = state.u.l2_norm() ** 2
        weighted = float((state.rho.values
                          * (state.u.vx ** 2 + state.u.vy ** 2)).sum()
                         * grid.cell_area)
        lam_a_sq = fractional_laplacian(state.u, params.alpha).l2_norm() ** 2
        dev = perturbation_of(state)
        w_l2 = dev.w.l2_norm()
        w_lam_sq = fractional_laplacian(dev.w, params.alpha).l2_norm() ** 2
        w_besov = besov_norm(dev.w, BesovParams(params.alpha, self.besov_p, 2.0,
                                                part))

        if self._prev is not None:
            t0, prev_state, prev_dev, prev_lam_sq, prev_wlam = self._prev
            dt = state.t - t0
            self._diss_cum += params.nu * dt * (prev_lam_sq + lam_a_sq)
            self._w_diss_cum += 0.5 * dt * (prev_wlam + w_lam_sq)
            # deviation maximal-regularity integrand, midpoint-in-time
            dt_w = (dev.w - prev_dev.w) * (1.0 / dt)
            lam2w = fractional_laplacian(dev.w, 2.0 * params.alpha)
            gpx = np.fft.ifft2(1j * grid.kx * dev.p.hat).real
            gpy = np.fft.ifft2(1j * grid.ky * dev.p.hat).real
            gp = VectorField2(grid, gpx, gpy)
            self._w_lp_cum += dt * (dt_w.lp_norm(self.besov_p) ** 2
                                    + lam2w.lp_norm(self.besov_p) ** 2
                                    + gp.lp_norm(self.besov_p) ** 2)
            # balance of the density-weighted energy, exact for any density
            defect = abs(weighted + self._diss_cum - self._weighted0)
            if defect > self.energy_warn * max(self._weighted0, 1e-300):
                warnings.append(f"energy balance defect {defect:.3e}")
            rho_prev = self.records[-1].rho_dev_linf
            rho_now = float(np.abs(state.rho.values - 1.0).max())
            if rho_now > rho_prev + self.rho_warn + 1e-15:
                warnings.append(
                    f"density deviation grew {rho_prev:.6e} -> {rho_now:.6e}")

        self._w_sup_l2 = max(self._w_sup_l2, w_l2)
        self._w_besov_sup = max(self._w_besov_sup, w_besov)

        hx, hy = state.u.hat
        div = np.abs(1j * grid.kx * hx + 1j * grid.ky * hy).max()
        div_rel = float(div / max(np.abs(hx).max(), np.abs(hy).max(), 1e-300))
        if div_rel > self.div_warn:
            warnings.append(f"divergence residual {div_rel:.3e}")

        if not self.records:
            self.initial_norms = self._initial_norms(state, part)
            self._weighted0 = weighted

        rec = DiagnosticsRecord(
            t=state.t,
            energy_l2=energy,
            dissipation_cum=self._diss_cum,
            besov_alpha_p2=besov_norm(
                state.u, BesovParams(params.alpha, self.besov_p, 2.0, part)),
            rho_dev_linf=float(np.abs(state.rho.values - 1.0).max()),
            rho_dev_l2=(state.rho - ScalarField(
                grid, np.ones((grid.n, grid.n)))).l2_norm(),
            w_energy_e2=self._w_sup_l2 + math.sqrt(self._w_diss_cum),
            w_maxreg_ep=self._w_besov_sup + math.sqrt(self._w_lp_cum),
            patch_area=patch.area() if patch is not None else math.nan,
            patch_c1gamma=(c1gamma_seminorm(patch, self.gamma)
                           if patch is not None else math.nan),
            pressure_iters=state.pressure_iters,
            divergence_residual=div_rel,
            warnings=tuple(warnings),
        )
        self.records.append(rec)
        self._prev = (state.t, state, dev, lam_a_sq, w_lam_sq)
        return rec

    def _initial_norms(self, state: SimState, part) -> dict:
        grid = state.u.grid
        params = state.params
        gxx = np.fft.ifft2(1j * grid.kx * state.u.hat[0]).real
        gyx = np.fft.ifft2(1j * grid.ky * state.u.hat[0]).real
        gxy = np.fft.ifft2(1j * grid.kx * state.u.hat[1]).real
        gyy = np.fft.ifft2(1j * grid.ky * state.u.hat[1]).real
        grad_l2 = math.sqrt(((gxx ** 2 + gyx ** 2 + gxy ** 2 + gyy ** 2).sum())
                            * grid.cell_area)
        h1 = state.u.l2_norm() + grad_l2
        bes = besov_norm(state.u, BesovParams(params.alpha, self.besov_p, 2.0,
                                              part))
        a = state.rho - ScalarField(grid, np.ones((grid.n, grid.n)))
        return {
            "u0_h1": h1,
            "u0_besov": bes,
            "u0_h1_besov": h1 + bes,
            "a0_l2_linf": a.l2_norm() + float(np.abs(a.values).max()),
        }


def records_to_csv(records) -> str:
    buf = io.StringIO()
    for name in DiagnosticsRecord.csv_header():
        buf.write(f"# {name}: {COLUMN_NOTES[name]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DiagnosticsRecord.csv_header())
    for rec in records:
        writer.writerow(rec.csv_row())
    return buf.getvalue()


def records_from_csv(text: str):
    rows = [r for r in text.splitlines() if r and not r.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader)
    assert header == DiagnosticsRecord.csv_header()
    out = []
    for row in reader:
        vals = dict(zip(header, row))
        warn = tuple(w for w in vals.pop("warnings").split(";") if w)
        kwargs = {k: (int(v) if k == "pressure_iters" else float(v))
                  for k, v in vals.items()}
        out.append(DiagnosticsRecord(warnings=warn, **kwargs))
    return out


@dataclass
class EstimateReport:
    """Boundedness trends and the smallest constants closing each bound."""

    trend_slopes: dict
    empirical_constants: dict
    warning_count: int
    bounded: bool

    def lines(self):
        out = []
        for name, slope in self.trend_slopes.items():
            out.append(f"trend[{name}] slope {slope:+.3e}")
        for name, c in self.empirical_constants.items():
            out.append(f"constant[{name}] = {c:.6g}")
        out.append(f"warnings observed: {self.warning_count}")
        out.append(f"bounded: {self.bounded}")
        return out


def _smallest_grow_constant(lhs: float, base: float, exponent_arg: float,
                            hi: float = 1e6) -> float:
    """Smallest C with lhs <= C * base * exp(C * exponent_arg), by bisection
    (the right side is monotone in C)."""
    if lhs <= 0.0:
        return 0.0
    if base <= 0.0:
        return math.inf

    def ok(c):
        return lhs <= c * base * math.exp(min(c * exponent_arg, 700.0))

    lo_c, hi_c = 0.0, 1.0
    while not ok(hi_c):
        hi_c *= 2.0
        if hi_c > hi:
            return math.inf
    for _ in range(80):
        mid = 0.5 * (lo_c + hi_c)
        if ok(mid):
            hi_c = mid
        else:
            lo_c = mid
    return hi_c


def estimate_report(records, initial_norms: dict, alpha: float,
                    rel_growth_tol: float = 0.05) -> EstimateReport:
    """Fit growth trends over the final half of the run and extract the
    smallest multiplicative constants closing the a priori bounds.

    A quantity counts as growing when the fitted slope, projected over
    another half-run, would move it by more than rel_growth_tol of its final
    value; cumulative functionals therefore settle once the run is long
    enough to saturate them.
    """
    records = list(records)
    if len(records) < 2:
        raise InsufficientData("need at least two records")
    ts = np.array([r.t for r in records])
    half = len(records) // 2

    def slope(values):
        v = np.asarray(values)[half:]
        t = ts[half:]
        if np.allclose(v, v[0]):
            return 0.0
        return float(np.polyfit(t, v, 1)[0])

    trends = {
        "energy_l2": slope([r.energy_l2 for r in records]),
        "besov_alpha_p2": slope([r.besov_alpha_p2 for r in records]),
        "rho_dev_linf": slope([r.rho_dev_linf for r in records]),
        "w_energy_e2": slope([r.w_energy_e2 for r in records]),
        "w_maxreg_ep": slope([r.w_maxreg_ep for r in records]),
    }
    u0 = initial_norms.get("u0_h1_besov", 0.0)
    power = (4.0 * alpha - 1.0) / (2.0 * alpha - 1.0)
    lhs_thm = max(math.sqrt(r.energy_l2) + r.besov_alpha_p2 for r in records)
    constants = {
        "velocity_bound": lhs_thm / (1.0 + u0 ** power),
        "deviation_energy": _smallest_grow_constant(
            max(r.w_energy_e2 for r in records),
            initial_norms.get("a0_l2_linf", 0.0),
            initial_norms.get("u0_h1", 0.0) ** 2),
        "deviation_maxreg": _smallest_grow_constant(
            max(r.w_maxreg_ep for r in records),
            initial_norms.get("a0_l2_linf", 0.0),
            initial_norms.get("u0_h1_besov", 0.0) ** 2),
    }
    n_warn = sum(len(r.warnings) for r in records)
    finals = {
        "energy_l2": records[-1].energy_l2,
        "besov_alpha_p2": records[-1].besov_alpha_p2,
        "rho_dev_linf": records[-1].rho_dev_linf,
        "w_energy_e2": records[-1].w_energy_e2,
        "w_maxreg_ep": records[-1].w_maxreg_ep,
    }
    horizon = 0.5 * (ts[-1] - ts[0])
    growing = [k for k, s in trends.items()
               if s * horizon > rel_growth_tol * max(abs(finals[k]), 1e-12)]
    return EstimateReport(trends, constants, n_warn, bounded=not growing)
