"""Label-coordinate (trajectory-pulled-back) operators by principal-value
quadrature, and the difference-system terms used to certify short-time
uniqueness numerically.

The fractional operators are evaluated in real space as punctured lattice
sums of power-law kernels summed over periodic images, with the first-shell
Epstein correction of `singular`.  For the identity flow they reduce to the
flat operators and match the Fourier multipliers; under a flow the kernel is
deformed by the trajectories and no spectral shortcut exists, which is what
makes the quadrature an independent check of the change-of-variables
identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutsideBiLipschitzWindow
from .flow import FlowMap, VelocitySeries, advect_points, \
    interp_periodic, invert_flow, jacobian_from_flow
from .grid import Grid2D, ScalarField, VectorField2
from .singular import (
    DeformedKernelTable,
    first_shell_coefficient,
    lattice_gradient_kernel,
    pv_convolve,
    pv_kernel_constant,
    pv_kernel_constant_2d,
)
from .spectral import FractionalParams, fractional_laplacian, grad_hat

WINDOW_LO = 0.75
WINDOW_HI = 4.0 / 3.0

_DEFORMED_TABLES: dict = {}


def _deformed_table(box_length: float, alpha: float) -> DeformedKernelTable:
    key = (round(box_length, 12), round(alpha, 12))
    if key not in _DEFORMED_TABLES:
        _DEFORMED_TABLES[key] = DeformedKernelTable(box_length, alpha)
    return _DEFORMED_TABLES[key]


def _spectral_gradient_arrays(f: ScalarField):
    gx, gy = grad_hat(f.grid, f.hat)
    return np.fft.ifft2(gx).real, np.fft.ifft2(gy).real


def pv_fractional_gradient(f: ScalarField, axis: int, alpha: float,
                           images: int = 64) -> ScalarField:
    """d/dx_axis of the order-(2 alpha - 2) fractional integral, evaluated as
    the punctured lattice sum of the odd power-law kernel with first-shell
    correction.  Matches the Fourier multiplier i k_axis |k|^(2 alpha - 2) on
    band-limited fields to quadrature accuracy."""
    grid = f.grid
    ca = pv_kernel_constant(alpha, d=2)
    kernels = lattice_gradient_kernel(grid.n, grid.box_length, alpha, images)
    raw = ca * pv_convolve(grid, kernels[axis], f.values)
    shell = ca * first_shell_coefficient(alpha, grid.spacing)
    grad = _spectral_gradient_arrays(f)[axis]
    return ScalarField(grid, raw - shell * grad)


def pv_fractional_laplacian(f: ScalarField, alpha: float,
                            images: int = 64) -> ScalarField:
    """Fractional dissipation operator as a pair-difference quadrature on the
    gradient field: -c_a sum_d K(d) . (grad f(x) - grad f(x-d)) h^2 plus the
    first-shell correction, matching the |k|^(2 alpha) multiplier."""
    grid = f.grid
    ca = pv_kernel_constant(alpha, d=2)
    k1, k2 = lattice_gradient_kernel(grid.n, grid.box_length, alpha, images)
    gx, gy = _spectral_gradient_arrays(f)
    raw = -ca * (pv_convolve(grid, k1, gx) + pv_convolve(grid, k2, gy))
    lap = np.fft.ifft2(-grid.k2 * f.hat).real
    shell = ca * first_shell_coefficient(alpha, grid.spacing)
    return ScalarField(grid, raw + shell * lap)


# ---------------------------------------------------------------------------
# label-coordinate state


@dataclass
class LagrangianState:
    """Fields pulled back along the flow: v = u o X, Pi = pi o X, eta =
    rho o X (time-constant), with the flow map and its inverse Jacobian."""

    t: float
    fm: FlowMap
    v: VectorField2
    Pi: ScalarField
    eta: ScalarField
    rho0: ScalarField
    A: np.ndarray                       # (2, 2, n, n), (grad X)^(-1)
    B: np.ndarray                       # (2, 2, n, n), grad X - Id
    params: FractionalParams
    v_times: np.ndarray = field(default=None)
    v_fields: list = field(default=None)

    @property
    def grid(self) -> Grid2D:
        return self.v.grid

    def density_constancy_error(self) -> float:
        return float(np.abs(self.eta.values - self.rho0.values).max())

    def l2_isometry_error(self, u: VectorField2) -> float:
        return abs(self.v.l2_norm() - u.l2_norm()) / max(u.l2_norm(), 1e-300)

    def window_ratios(self, n_pairs: int = 10 ** 4, seed: int = 0):
        return self.fm.pair_ratio_range(n_pairs=n_pairs, seed=seed)

    def require_window(self):
        lo, hi = self.window_ratios()
        if lo < WINDOW_LO or hi > WINDOW_HI:
            raise OutsideBiLipschitzWindow(
                f"pair stretch ratios [{lo:.3f}, {hi:.3f}] left "
                f"[{WINDOW_LO}, {WINDOW_HI:.3f}]")

    def dv_dt(self) -> VectorField2:
        """One-sided second-order time derivative of v at the final knot."""
        if self.v_fields is None or len(self.v_fields) < 3:
            raise ValueError("need a velocity history of >= 3 knots")
        dt = self.v_times[-1] - self.v_times[-2]
        f0, f1, f2 = self.v_fields[-3], self.v_fields[-2], self.v_fields[-1]
        return (1.5 / dt) * f2 - (2.0 / dt) * f1 + (0.5 / dt) * f0


def lagrangian_state(u_series: VelocitySeries, t: float, pi: ScalarField,
                     rho: ScalarField, rho0: ScalarField,
                     params: FractionalParams,
                     substeps_per_knot: int = 8) -> LagrangianState:
    """Pull a run back to label coordinates at time t.

    Trajectories start at the series origin and are advanced knot to knot;
    the composed velocity is recorded at every knot so time derivatives and
    gradient time-integrals are available.
    """
    grid = u_series.grid
    ts = u_series.times
    t0 = float(ts[0])
    knots = np.unique(np.concatenate([[t0], ts[(ts > t0) & (ts < t)], [t]]))
    X, Y = grid.meshes()
    px, py = X.copy(), Y.copy()
    v_fields = []
    for i, tau in enumerate(knots):
        if i > 0:
            px, py = advect_points(u_series, px, py, knots[i - 1], tau,
                                   substeps_per_knot)
        ux, uy = u_series.sample_arrays(tau)
        v_fields.append(VectorField2(grid,
                                     interp_periodic(ux, grid, px, py),
                                     interp_periodic(uy, grid, px, py)))
    disp = VectorField2(grid, grid.min_image(px - X), grid.min_image(py - Y))
    fm = FlowMap(grid, disp, t - t0)
    fm = invert_flow(fm, u_series, t0)
    jac = jacobian_from_flow(fm, method="spectral")
    eta = ScalarField(grid, interp_periodic(rho.values, grid, px, py))
    Pi = ScalarField(grid, interp_periodic(pi.values, grid, px, py))
    return LagrangianState(t, fm, v_fields[-1], Pi, eta, rho0, jac.A, jac.B,
                           params, v_times=knots, v_fields=v_fields)


def _pulled_gradient(ls: LagrangianState, w: VectorField2) -> np.ndarray:
    """G_ij = (A^t grad w)_ij = sum_k A_ki d w_j / d y_k, shape (2,2,n,n)."""
    gxx, gyx = _spectral_gradient_arrays(ScalarField(ls.grid, w.vx))
    gxy, gyy = _spectral_gradient_arrays(ScalarField(ls.grid, w.vy))
    dw = np.array([[gxx, gxy], [gyx, gyy]])   # dw[k][j] = d w_j / d y_k
    return np.einsum("kixy,kjxy->ijxy", ls.A, dw)


def _deformed_pv_apply(ls: LagrangianState, G: np.ndarray,
                       row_chunk: int = 4) -> tuple:
    """Components of -c_a sum_z k_per(X(y)-X(z)) . (G(y) - G(z)) h^2."""
    grid = ls.grid
    n = grid.n
    alpha = ls.params.alpha
    ca = pv_kernel_constant(alpha, d=2)
    table = _deformed_table(grid.box_length, alpha)
    Xf, Yf = ls.fm.forward_nodes()
    xs = Xf.ravel()
    ys = Yf.ravel()
    g = G.reshape(2, 2, n * n)
    out = np.zeros((2, n * n))
    area = grid.cell_area
    for start in range(0, n * n, row_chunk * n):
        stop = min(start + row_chunk * n, n * n)
        D1 = xs[start:stop, None] - xs[None, :]
        D2 = ys[start:stop, None] - ys[None, :]
        K1, K2 = table.evaluate(D1, D2)
        for j in range(2):
            dG1 = g[0, j, start:stop, None] - g[0, j, None, :]
            dG2 = g[1, j, start:stop, None] - g[1, j, None, :]
            out[j, start:stop] = -ca * area * (K1 * dG1 + K2 * dG2).sum(axis=1)
    return out[0].reshape(n, n), out[1].reshape(n, n)


def _shell_correction_tensor(ls: LagrangianState, G: np.ndarray) -> tuple:
    """Leading-shell contraction sum_{i,j} R_ij dG_il/dy_j with R the polar
    rotation factor of M = grad X.

    The punctured-sum defect near the singular node involves the lattice sum
    of (M m)_i m_j |M m|^(-2-2a); for orthogonal M this equals (Z/2) M_ij
    exactly and the strain part only enters through fourth-moment lattice
    sums of the same order as the strain itself.  Contracting through the
    polar rotation keeps the correction exact for isometries and reduces it
    to the flat form under pure strain.
    """
    grid = ls.grid
    n = grid.n
    M = ls.B.copy()
    M[0, 0] += 1.0
    M[1, 1] += 1.0
    a = M[0, 0] + M[1, 1]
    b = M[1, 0] - M[0, 1]
    r = np.hypot(a, b)
    R = np.empty_like(M)
    R[0, 0] = a / r
    R[1, 1] = a / r
    R[1, 0] = b / r
    R[0, 1] = -b / r
    dG = np.empty((2, 2, 2, n, n))   # dG[j][i][l] = d G_il / d y_j
    for i in range(2):
        for l in range(2):
            hat = np.fft.fft2(G[i, l])
            dG[0, i, l] = np.fft.ifft2(1j * grid.kx * hat).real
            dG[1, i, l] = np.fft.ifft2(1j * grid.ky * hat).real
    corr = np.einsum("ijxy,jilxy->lxy", R, dG)
    return corr[0], corr[1]


def lambda2alpha_lagrangian(ls: LagrangianState,
                            check_window: bool = True) -> VectorField2:
    """Fractional dissipation of the pulled-back velocity evaluated through
    the deformed kernel: the trajectories supply pair positions, the inverse
    Jacobian twists the gradient, and the punctured sum carries its
    first-shell correction contracted through the flow gradient."""
    if check_window:
        ls.require_window()
    G = _pulled_gradient(ls, ls.v)
    raw1, raw2 = _deformed_pv_apply(ls, G)
    ca = pv_kernel_constant(ls.params.alpha, d=2)
    shell = ca * first_shell_coefficient(ls.params.alpha, ls.grid.spacing)
    c1, c2 = _shell_correction_tensor(ls, G)
    return VectorField2(ls.grid, raw1 + shell * c1, raw2 + shell * c2)


def dissipation_norm_identity(ls: LagrangianState, u: VectorField2):
    """Both sides of the change-of-variables norm identity: the L2 norm of
    the deformed-kernel dissipation in label coordinates against the L2 norm
    of the flat spectral dissipation of v composed with the inverse flow."""
    lam_v = lambda2alpha_lagrangian(ls)
    grid = ls.grid
    bx, by = ls.fm.inverse_nodes()
    w = VectorField2(grid,
                     interp_periodic(ls.v.vx, grid, bx, by),
                     interp_periodic(ls.v.vy, grid, bx, by))
    lam_flat = fractional_laplacian(w, 2.0 * ls.params.alpha)
    return lam_v.l2_norm(), lam_flat.l2_norm()


# ---------------------------------------------------------------------------
# difference-system right-hand terms


@dataclass
class TwistedTerms:
    """Right-hand quantities of the difference system in label coordinates,
    with the kernel-difference term both unsplit and in its four-way split."""

    f1: VectorField2
    f2: VectorField2
    f2_parts: tuple
    g: VectorField2
    g_rate: VectorField2
    div_g: ScalarField
    ledger: dict


def _mat_vec(M: np.ndarray, vx: np.ndarray, vy: np.ndarray):
    """(M w)_i = M_ij w_j for stacked 2x2 fields."""
    return (M[0, 0] * vx + M[0, 1] * vy, M[1, 0] * vx + M[1, 1] * vy)


def _mat_t_vec(M: np.ndarray, wx: np.ndarray, wy: np.ndarray):
    """(M^t w)_j = M_ij w_i."""
    return (M[0, 0] * wx + M[1, 0] * wy, M[0, 1] * wx + M[1, 1] * wy)


def _time_derivative_A(ls: LagrangianState) -> np.ndarray:
    """dA/dt = sum_k (-1)^k k B^(k-1) grad v(t), truncated when the next
    term falls below round-off."""
    grid = ls.grid
    gxx, gyx = _spectral_gradient_arrays(ScalarField(grid, ls.v.vx))
    gxy, gyy = _spectral_gradient_arrays(ScalarField(grid, ls.v.vy))
    gv = np.array([[gxx, gxy], [gyx, gyy]])    # gv[i][j] = d v_j / d y_i
    out = np.zeros_like(gv)
    power = np.zeros_like(gv)                  # B^(k-1), starts at Id
    power[0, 0] = power[1, 1] = 1.0
    bnorm = float(np.sqrt((ls.B ** 2).sum(axis=(0, 1))).max())
    term_scale = 1.0
    for k in range(1, 60):
        sign = -1.0 if k % 2 else 1.0
        out += sign * k * np.einsum("ikxy,kjxy->ijxy", power, gv)
        power = np.einsum("ikxy,kjxy->ijxy", power, ls.B)
        term_scale *= bnorm
        if (k + 1) * term_scale < 1e-16:
            break
    return out


def _deformed_pv_pair(ls1: LagrangianState, ls2: LagrangianState,
                      grad_v2: np.ndarray, row_chunk: int = 4):
    """All kernel-difference quadratures in one pass over source chunks.

    Returns (f2_unsplit, f2_1, f2_2, f2_3, f2_4) as component arrays, using
    the sign convention that makes the twisted dissipation of the second
    velocity equal the first-flow operator plus the difference term.
    """
    grid = ls1.grid
    n = grid.n
    alpha = ls1.params.alpha
    ca = pv_kernel_constant(alpha, d=2)
    table = _deformed_table(grid.box_length, alpha)
    X1, Y1 = ls1.fm.forward_nodes()
    X2, Y2 = ls2.fm.forward_nodes()
    x1, y1 = X1.ravel(), Y1.ravel()
    x2, y2 = X2.ravel(), Y2.ravel()
    # P_i = A_i^t grad v2 contracted fields, flattened
    P1 = np.einsum("kixy,kjxy->ijxy", ls1.A, grad_v2).reshape(2, 2, n * n)
    P2 = np.einsum("kixy,kjxy->ijxy", ls2.A, grad_v2).reshape(2, 2, n * n)
    A2t = np.transpose(ls2.A, (1, 0, 2, 3)).reshape(2, 2, n * n)
    dAt = (ls1.A - ls2.A).transpose(1, 0, 2, 3).reshape(2, 2, n * n)
    gv2 = grad_v2.reshape(2, 2, n * n)
    area = grid.cell_area
    outs = [np.zeros((2, n * n)) for _ in range(5)]
    for start in range(0, n * n, row_chunk * n):
        stop = min(start + row_chunk * n, n * n)
        K1 = table.evaluate(x1[start:stop, None] - x1[None, :],
                            y1[start:stop, None] - y1[None, :])
        K2 = table.evaluate(x2[start:stop, None] - x2[None, :],
                            y2[start:stop, None] - y2[None, :])
        dK = (K1[0] - K2[0], K1[1] - K2[1])
        for j in range(2):
            # unsplit: K1.(P1(y)-P1(z)) - K2.(P2(y)-P2(z)), row-indexed by y
            t1 = (K1[0] * (P1[0, j, start:stop, None] - P1[0, j, None, :])
                  + K1[1] * (P1[1, j, start:stop, None] - P1[1, j, None, :]))
            t2 = (K2[0] * (P2[0, j, start:stop, None] - P2[0, j, None, :])
                  + K2[1] * (P2[1, j, start:stop, None] - P2[1, j, None, :]))
            outs[0][j, start:stop] = -ca * area * (t1 - t2).sum(axis=1)
            acc = [np.zeros(stop - start) for _ in range(4)]
            for i in range(2):
                for k in range(2):
                    gkj_y = gv2[k, j, start:stop, None]
                    gkj_z = gv2[k, j, None, :]
                    dat_y = dAt[i, k][start:stop, None]
                    dat_z = dAt[i, k][None, :]
                    a2t_y = A2t[i, k][start:stop, None]
                    a2t_z = A2t[i, k][None, :]
                    acc[0] += (K1[i] * (dat_y - dat_z) * gkj_y).sum(axis=1)
                    acc[1] += (K1[i] * dat_z * (gkj_y - gkj_z)).sum(axis=1)
                    acc[2] += (dK[i] * (a2t_y - a2t_z) * gkj_y).sum(axis=1)
                    acc[3] += (dK[i] * a2t_z * (gkj_y - gkj_z)).sum(axis=1)
            for p in range(4):
                outs[p + 1][j, start:stop] = -ca * area * acc[p]
    return [(o[0].reshape(n, n), o[1].reshape(n, n)) for o in outs]


def twisted_rhs_terms(ls1: LagrangianState, ls2: LagrangianState) -> TwistedTerms:
    """Right-hand quantities of the system satisfied by the velocity
    difference in the first flow's label coordinates.

    f1 collects the pressure-gradient twist, f2 the kernel twist (returned
    unsplit and as its four-way decomposition), g the divergence defect and
    g_rate its time derivative via the Jacobian series.
    """
    grid = ls1.grid
    if ls2.grid.n != grid.n or ls2.grid.box_length != grid.box_length:
        raise ValueError("states must share a grid")
    ls1.require_window()
    ls2.require_window()
    n = grid.n
    dv = ls1.v - ls2.v
    dPi = ls1.Pi - ls2.Pi
    dA = ls1.A - ls2.A

    # pressure twist (Id - A1^t) grad dPi - dA^t grad Pi2
    gdx, gdy = _spectral_gradient_arrays(dPi)
    g2x, g2y = _spectral_gradient_arrays(ls2.Pi)
    a1t_x, a1t_y = _mat_t_vec(ls1.A, gdx, gdy)
    dat_x, dat_y = _mat_t_vec(dA, g2x, g2y)
    f1 = VectorField2(grid, (gdx - a1t_x) - dat_x, (gdy - a1t_y) - dat_y)

    # kernel twist, unsplit and split
    gxx, gyx = _spectral_gradient_arrays(ScalarField(grid, ls2.v.vx))
    gxy, gyy = _spectral_gradient_arrays(ScalarField(grid, ls2.v.vy))
    grad_v2 = np.array([[gxx, gxy], [gyx, gyy]])
    (u0x, u0y), (p1x, p1y), (p2x, p2y), (p3x, p3y), (p4x, p4y) = \
        _deformed_pv_pair(ls1, ls2, grad_v2)
    f2 = VectorField2(grid, u0x, u0y)
    parts = (VectorField2(grid, p1x, p1y), VectorField2(grid, p2x, p2y),
             VectorField2(grid, p3x, p3y), VectorField2(grid, p4x, p4y))

    # divergence defect g = (Id - A1) dv - dA v2
    eye = np.zeros((2, 2, n, n))
    eye[0, 0] = eye[1, 1] = 1.0
    m1 = eye - ls1.A
    gx_, gy_ = _mat_vec(m1, dv.vx, dv.vy)
    hx_, hy_ = _mat_vec(dA, ls2.v.vx, ls2.v.vy)
    g = VectorField2(grid, gx_ - hx_, gy_ - hy_)
    ghx, ghy = g.hat
    div_g = ScalarField.from_hat(grid, 1j * grid.kx * ghx + 1j * grid.ky * ghy)

    # g_rate = -(dA1/dt) dv + (Id - A1) d(dv)/dt - (d dA/dt) v2 - dA d(v2)/dt
    dA1_t = _time_derivative_A(ls1)
    dA2_t = _time_derivative_A(ls2)
    ddv_dt = ls1.dv_dt() - ls2.dv_dt()
    dv2_dt = ls2.dv_dt()
    r1x, r1y = _mat_vec(dA1_t, dv.vx, dv.vy)
    r2x, r2y = _mat_vec(m1, ddv_dt.vx, ddv_dt.vy)
    r3x, r3y = _mat_vec(dA1_t - dA2_t, ls2.v.vx, ls2.v.vy)
    r4x, r4y = _mat_vec(dA, dv2_dt.vx, dv2_dt.vy)
    g_rate = VectorField2(grid, -r1x + r2x - r3x - r4x, -r1y + r2y - r3y - r4y)

    sobolev = fractional_laplacian(
        div_g, 2.0 * ls1.params.alpha - 1.0).l2_norm() if div_g.l2_norm() > 0 \
        else 0.0
    ledger = {
        "f1_l2": f1.l2_norm(),
        "f2_l2": f2.l2_norm(),
        "div_g_sobolev": sobolev,
        "g_rate_l2": g_rate.l2_norm(),
    }
    return TwistedTerms(f1, f2, parts, g, g_rate, div_g, ledger)


# ---------------------------------------------------------------------------
# short-time difference-energy experiment


@dataclass
class ContractionRow:
    """One window of the sweep: the difference energy, the right-hand norm
    ledger, and their ratio."""

    t1: float
    delta_e: float
    ledger: dict
    ledger_total: float

    @property
    def effective_factor(self) -> float:
        if self.delta_e == 0.0:
            return 0.0
        return self.ledger_total / self.delta_e


@dataclass
class ContractionReport:
    rows: list
    fitted_exponent: float | None

    def vanishes(self, tol: float = 0.0) -> bool:
        return all(r.delta_e <= tol for r in self.rows)

    def csv_rows(self):
        out = [("t1", "term", "value")]
        for r in self.rows:
            out.append((f"{r.t1!r}", "delta_e", f"{r.delta_e!r}"))
            for key, val in r.ledger.items():
                out.append((f"{r.t1!r}", key, f"{val!r}"))
            out.append((f"{r.t1!r}", "effective_factor",
                        f"{r.effective_factor!r}"))
        return out


def difference_energy(states1, states2, t1: float, params: FractionalParams):
    """sup_t |dv|_{H^alpha-dot} + L2-in-time of (dv_t, Lam^(2a) dv, grad dPi)
    over [0, t1], from two aligned label-coordinate state series."""
    knots = np.array([s.t for s in states1])
    keep = knots <= t1 + 1e-12
    knots = knots[keep]
    sup_ha = 0.0
    l2_sq = []
    dvs = []
    for s1, s2 in zip(np.array(states1, dtype=object)[keep],
                      np.array(states2, dtype=object)[keep]):
        dv = s1.v - s2.v
        dvs.append(dv)
        dpi = s1.Pi - s2.Pi
        sup_ha = max(sup_ha, fractional_laplacian(dv, params.alpha).l2_norm())
        lam = fractional_laplacian(dv, 2.0 * params.alpha).l2_norm()
        gx, gy = _spectral_gradient_arrays(dpi)
        gp = float(np.sqrt((gx ** 2 + gy ** 2).mean())
                   * np.sqrt(dv.grid.box_length ** 2))
        l2_sq.append(lam ** 2 + gp ** 2)
    # centered time derivative of dv along the knots
    rate_sq = np.zeros(len(dvs))
    for i in range(len(dvs)):
        if 0 < i < len(dvs) - 1:
            d = (dvs[i + 1] - dvs[i - 1]) * (1.0 / (knots[i + 1] - knots[i - 1]))
        elif i == 0 and len(dvs) > 1:
            d = (dvs[1] - dvs[0]) * (1.0 / (knots[1] - knots[0]))
        elif len(dvs) > 1:
            d = (dvs[-1] - dvs[-2]) * (1.0 / (knots[-1] - knots[-2]))
        else:
            break
        rate_sq[i] = d.l2_norm() ** 2
    total = np.trapezoid(np.asarray(l2_sq) + rate_sq, knots) if len(knots) > 1 \
        else 0.0
    return sup_ha + float(np.sqrt(max(total, 0.0)))


def contraction_experiment(grid, u0_1, rho0_1, u0_2, rho0_2,
                           params: FractionalParams, t1_values, dt: float,
                           interpolant: str = "bicubic",
                           ledger_knots: int = 4) -> ContractionReport:
    """Run the solver twice, pull both runs back to label coordinates, and
    sweep the difference energy and its right-hand ledger over windows.

    The fitted exponent is the log-log slope of the difference energy versus
    the window length (None when the difference vanishes identically).
    """
    from .solver import initial_state, simulate

    t1_values = sorted(t1_values)
    n_steps = int(round(t1_values[-1] / dt))
    run1 = simulate(initial_state(grid, rho0_1, u0_1, params), dt, n_steps,
                    interpolant=interpolant, keep_states=True)
    run2 = simulate(initial_state(grid, rho0_2, u0_2, params), dt, n_steps,
                    interpolant=interpolant, keep_states=True)

    def label_series(run, upto):
        series = VelocitySeries(np.array([s.t for s in run]),
                                [s.u for s in run])
        states = []
        idx = [i for i, s in enumerate(run) if s.t <= upto + 1e-12]
        for i in idx:
            if i == 0:
                continue
            states.append(lagrangian_state(
                series, run[i].t, run[i].pi, run[i].rho,
                run[0].rho, params))
        return states

    rows = []
    for t1 in t1_values:
        st1 = label_series(run1, t1)
        st2 = label_series(run2, t1)
        de = difference_energy(st1, st2, t1, params)
        ledger = {"f1_l2": 0.0, "f2_l2": 0.0, "div_g_sobolev": 0.0,
                  "g_rate_l2": 0.0}
        if de > 0.0 and len(st1) >= 3 and ledger_knots > 0:
            pick = np.unique(np.linspace(2, len(st1) - 1,
                                         min(ledger_knots, len(st1) - 2),
                                         dtype=int))
            knots = [st1[i].t for i in pick]
            vals = {k: [] for k in ledger}
            for i in pick:
                terms = twisted_rhs_terms(st1[i], st2[i])
                for k in ledger:
                    vals[k].append(terms.ledger[k] ** 2)
            for k in ledger:
                if len(knots) > 1:
                    ledger[k] = float(np.sqrt(np.trapezoid(vals[k], knots)))
                else:
                    ledger[k] = float(np.sqrt(vals[k][0] * t1))
        total = float(np.sqrt(sum(v ** 2 for v in ledger.values())))
        rows.append(ContractionRow(t1, de, ledger, total))
    des = [r.delta_e for r in rows]
    if all(d > 0 for d in des) and len(des) >= 2:
        slope = np.polyfit(np.log(t1_values), np.log(des), 1)[0]
    else:
        slope = None
    return ContractionReport(rows, None if slope is None else float(slope))
