"""Particle trajectories, flow inversion, Jacobians, and semi-Lagrangian
transport on the periodic box.

Trajectories are integrated with classical RK4; velocities are interpolated
with periodic cubic B-splines in space and linearly in time between series
samples.  The inverse map integrates the time-reversed field, so forward and
inverse share one code path.  Discontinuous densities use a bilinear
interpolant, which is a convex combination of neighbor values and therefore
preserves the sample range exactly (bicubic overshoots at jumps).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import CFLWarning, InsufficientSamples, OutsideNeumannRegime
from .grid import Grid2D, ScalarField, VectorField2
from .spectral import grad_max_norm, vector_gradient


def interp_periodic(values: np.ndarray, grid: Grid2D, px: np.ndarray,
                    py: np.ndarray, order: int = 3) -> np.ndarray:
    """Sample a periodic grid function at physical points (px, py)."""
    h = grid.spacing
    coords = [np.mod(px, grid.box_length).ravel() / h,
              np.mod(py, grid.box_length).ravel() / h]
    out = map_coordinates(values, coords, order=order, mode="grid-wrap")
    return out.reshape(px.shape)


@dataclass
class VelocitySeries:
    """Velocity snapshots at increasing times with linear time interpolation."""

    times: np.ndarray
    fields: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size < 2 or self.times.size != len(self.fields):
            raise InsufficientSamples("need >= 2 aligned velocity samples")
        if np.any(np.diff(self.times) <= 0):
            raise InsufficientSamples("sample times must increase")

    @classmethod
    def steady(cls, u: VectorField2, t0: float, t1: float) -> "VelocitySeries":
        return cls(np.array([t0, t1]), [u, u])

    @classmethod
    def from_callable(cls, grid: Grid2D, func, times) -> "VelocitySeries":
        X, Y = grid.meshes()
        fields = []
        for t in times:
            vx, vy = func(t, X, Y)
            fields.append(VectorField2(grid, np.broadcast_to(vx, X.shape).copy(),
                                       np.broadcast_to(vy, Y.shape).copy()))
        return cls(np.asarray(times, dtype=float), fields)

    @property
    def grid(self) -> Grid2D:
        return self.fields[0].grid

    def covers(self, t0: float, t1: float) -> bool:
        eps = 1e-12 * max(1.0, abs(t1))
        return self.times[0] <= t0 + eps and t1 <= self.times[-1] + eps

    def sample_arrays(self, t: float):
        """Component arrays at time t (linear interpolation, clamped ends)."""
        ts = self.times
        t = min(max(t, ts[0]), ts[-1])
        i = int(np.searchsorted(ts, t, side="right") - 1)
        i = min(max(i, 0), ts.size - 2)
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        a, b = self.fields[i], self.fields[i + 1]
        return ((1 - w) * a.vx + w * b.vx, (1 - w) * a.vy + w * b.vy)

    def at(self, t: float, px: np.ndarray, py: np.ndarray):
        vx, vy = self.sample_arrays(t)
        return (interp_periodic(vx, self.grid, px, py),
                interp_periodic(vy, self.grid, px, py))

    def max_speed(self) -> float:
        return max(f.max_norm() for f in self.fields)

    def grad_infty_history(self):
        """(times, max |grad u|(t)) for Gronwall-type budgets."""
        return self.times, np.array([grad_max_norm(f) for f in self.fields])

    def grad_infty_integral(self, t0: float, t1: float) -> float:
        ts, g = self.grad_infty_history()
        lo, hi = np.searchsorted(ts, [t0, t1])
        knots = np.unique(np.concatenate([[t0], ts[lo:hi], [t1]]))
        vals = np.interp(knots, ts, g)
        return float(np.trapezoid(vals, knots))

    def reversed(self, t_end: float) -> "VelocitySeries":
        """Series for the time-reversed flow tau -> -u(t_end - tau, .)."""
        times = t_end - self.times[::-1]
        fields = [f * (-1.0) for f in self.fields[::-1]]
        return VelocitySeries(times, fields)


def advect_points(series: VelocitySeries, px: np.ndarray, py: np.ndarray,
                  t0: float, t1: float, substeps: int) -> tuple:
    """RK4 advection of arbitrary points from t0 to t1."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if not series.covers(t0, t1):
        raise InsufficientSamples(
            f"velocity series does not cover [{t0}, {t1}]")
    grid = series.grid
    dt = (t1 - t0) / substeps
    if series.max_speed() * abs(dt) > grid.spacing:
        warnings.warn("advective substep exceeds one grid cell",
                      CFLWarning, stacklevel=2)
    px = np.array(px, dtype=float)
    py = np.array(py, dtype=float)
    for m in range(substeps):
        t = t0 + m * dt
        k1x, k1y = series.at(t, px, py)
        k2x, k2y = series.at(t + 0.5 * dt, px + 0.5 * dt * k1x, py + 0.5 * dt * k1y)
        k3x, k3y = series.at(t + 0.5 * dt, px + 0.5 * dt * k2x, py + 0.5 * dt * k2y)
        k4x, k4y = series.at(t + dt, px + dt * k3x, py + dt * k3y)
        px = px + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        py = py + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
    return px, py


@dataclass
class FlowMap:
    """Forward (and optionally inverse) trajectory map sampled on the grid.

    displacement holds X_t(y) - y at the grid nodes, periodically reduced;
    the map at arbitrary points is recovered by interpolating the
    displacement, which is smooth and periodic even when positions wrap.
    """

    grid: Grid2D
    displacement: VectorField2
    t: float
    inverse_displacement: VectorField2 | None = field(default=None)

    def forward(self, px: np.ndarray, py: np.ndarray):
        dx = interp_periodic(self.displacement.vx, self.grid, px, py)
        dy = interp_periodic(self.displacement.vy, self.grid, px, py)
        return px + dx, py + dy

    def inverse(self, px: np.ndarray, py: np.ndarray):
        if self.inverse_displacement is None:
            raise InsufficientSamples("inverse map not filled; call invert_flow")
        dx = interp_periodic(self.inverse_displacement.vx, self.grid, px, py)
        dy = interp_periodic(self.inverse_displacement.vy, self.grid, px, py)
        return px + dx, py + dy

    def forward_nodes(self):
        X, Y = self.grid.meshes()
        return X + self.displacement.vx, Y + self.displacement.vy

    def inverse_nodes(self):
        if self.inverse_displacement is None:
            raise InsufficientSamples("inverse map not filled; call invert_flow")
        X, Y = self.grid.meshes()
        return X + self.inverse_displacement.vx, Y + self.inverse_displacement.vy

    def composition_error(self) -> float:
        """max over nodes of |X^(-1)(X(y)) - y|, distances on the torus."""
        X, Y = self.grid.meshes()
        fx, fy = self.forward_nodes()
        bx, by = self.inverse(fx, fy)
        dx = self.grid.min_image(bx - X)
        dy = self.grid.min_image(by - Y)
        return float(np.hypot(dx, dy).max())

    def gradient_arrays(self, method: str = "fd4"):
        """nabla X as four arrays (G11, G12, G21, G22), G_ij = dX_i/dy_j.

        'fd4' uses fourth-order centered differences of the displacement
        (local, so seam artifacts of non-periodic analytic flows stay local);
        'spectral' differentiates the periodic displacement exactly and is
        preferable for flows driven by band-limited velocities.
        """
        if method == "fd4":
            h = self.grid.spacing
            d1 = lambda a, ax: (8.0 * (np.roll(a, -1, ax) - np.roll(a, 1, ax))
                                - (np.roll(a, -2, ax) - np.roll(a, 2, ax))) / (12.0 * h)
            dx, dy = self.displacement.vx, self.displacement.vy
            return (1.0 + d1(dx, 0), d1(dx, 1), d1(dy, 0), 1.0 + d1(dy, 1))
        if method == "spectral":
            dxx, dyx, dxy, dyy = vector_gradient(self.displacement)
            # vector_gradient returns d(comp_j)/d(x_i); relabel to dX_i/dy_j
            return 1.0 + dxx, dyx, dxy, 1.0 + dyy
        raise ValueError(f"unknown gradient method {method!r}")

    def jacobian_determinant(self) -> np.ndarray:
        g11, g12, g21, g22 = self.gradient_arrays()
        return g11 * g22 - g12 * g21

    def pair_ratio_range(self, n_pairs: int = 10 ** 4, seed: int = 0,
                         include_neighbors: bool = True):
        """Range of |X(y) - X(z)| / |y - z| over sampled point pairs plus all
        nearest-neighbor pairs; distances are min-image on the torus."""
        grid = self.grid
        X, Y = grid.meshes()
        fx, fy = self.forward_nodes()
        ratios = []
        if include_neighbors:
            for axis in (0, 1):
                d0 = np.hypot(grid.min_image(np.roll(X, -1, axis) - X),
                              grid.min_image(np.roll(Y, -1, axis) - Y))
                d1 = np.hypot(grid.min_image(np.roll(fx, -1, axis) - fx),
                              grid.min_image(np.roll(fy, -1, axis) - fy))
                ratios.append((d1 / d0).ravel())
        rng = np.random.default_rng(seed)
        n2 = grid.n * grid.n
        ii = rng.integers(0, n2, n_pairs)
        jj = rng.integers(0, n2, n_pairs)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
        d0 = np.hypot(grid.min_image(X.ravel()[ii] - X.ravel()[jj]),
                      grid.min_image(Y.ravel()[ii] - Y.ravel()[jj]))
        d1 = np.hypot(grid.min_image(fx.ravel()[ii] - fx.ravel()[jj]),
                      grid.min_image(fy.ravel()[ii] - fy.ravel()[jj]))
        ratios.append(d1 / d0)
        allr = np.concatenate(ratios)
        return float(allr.min()), float(allr.max())


def default_substeps(series: VelocitySeries, t0: float, t1: float) -> int:
    """Substep count keeping max|u| dt <= 0.5 spacing."""
    speed = series.max_speed()
    if speed == 0.0:
        return 1
    return max(1, int(np.ceil(2.0 * speed * (t1 - t0) / series.grid.spacing)))


def integrate_flow(series: VelocitySeries, t0: float, t1: float,
                   substeps: int | None = None) -> FlowMap:
    """Flow map of the velocity series over [t0, t1] sampled at grid nodes."""
    grid = series.grid
    substeps = substeps or default_substeps(series, t0, t1)
    X, Y = grid.meshes()
    fx, fy = advect_points(series, X, Y, t0, t1, substeps)
    disp = VectorField2(grid, grid.min_image(fx - X), grid.min_image(fy - Y))
    return FlowMap(grid, disp, t1 - t0)


def invert_flow(fm: FlowMap, series: VelocitySeries, t0: float = 0.0,
                substeps: int | None = None) -> FlowMap:
    """Fill the inverse map by integrating the time-reversed velocity.

    The reversal maps the window [t0, t0 + T] onto reversed time [0, T]:
    the inverse trajectory solves dy/dtau = -u(t0 + T - tau, y).
    """
    rev = series.reversed(t_end=t0 + fm.t)
    inv = integrate_flow(rev, 0.0, fm.t, substeps)
    return FlowMap(fm.grid, fm.displacement, fm.t,
                   inverse_displacement=inv.displacement)


@dataclass
class JacobianField:
    """A = (nabla X)^(-1) and B = nabla X - Id sampled on the grid,
    stored as index-separable arrays [i][j] of shape (n, n)."""

    grid: Grid2D
    A: np.ndarray   # shape (2, 2, n, n)
    B: np.ndarray   # shape (2, 2, n, n)

    def identity_defect(self) -> float:
        """max entry of A (Id + B) - Id over the grid."""
        n = self.grid.n
        eye = np.zeros((2, 2, n, n))
        eye[0, 0] = eye[1, 1] = 1.0
        prod = np.einsum("ikxy,kjxy->ijxy", self.A, eye + self.B)
        return float(np.abs(prod - eye).max())

    def b_max_norm(self) -> float:
        return float(np.sqrt((self.B ** 2).sum(axis=(0, 1))).max())


def jacobian_from_flow(fm: FlowMap, method: str = "fd4") -> JacobianField:
    """A by direct pointwise inversion of nabla X."""
    g11, g12, g21, g22 = fm.gradient_arrays(method)
    det = g11 * g22 - g12 * g21
    n = fm.grid.n
    A = np.empty((2, 2, n, n))
    A[0, 0] = g22 / det
    A[0, 1] = -g12 / det
    A[1, 0] = -g21 / det
    A[1, 1] = g11 / det
    B = np.empty((2, 2, n, n))
    B[0, 0] = g11 - 1.0
    B[0, 1] = g12
    B[1, 0] = g21
    B[1, 1] = g22 - 1.0
    return JacobianField(fm.grid, A, B)


def trajectory_velocity_gradient_integral(series: VelocitySeries, t: float,
                                          substeps_per_knot: int = 4):
    """B(t) = int_0^t nabla_y [u(tau, X_tau(y))] dtau by trapezoid over the
    series knots, advancing the trajectories between knots; also returns the
    trapezoid of sup|nabla v| used as the regime check.

    The gradient is taken in the label variable y, so B equals nabla X - Id
    up to time-quadrature error.
    """
    ts = series.times
    if t > ts[-1] + 1e-12:
        raise InsufficientSamples("series does not reach the requested time")
    t0 = float(ts[0])
    knots = np.unique(np.concatenate([[t0], ts[(ts > t0) & (ts < t)], [t]]))
    grid = series.grid
    n = grid.n
    X, Y = grid.meshes()
    px, py = X.copy(), Y.copy()
    grads = np.empty((knots.size, 2, 2, n, n))
    sup = np.empty(knots.size)
    for i, tau in enumerate(knots):
        if i > 0:
            px, py = advect_points(series, px, py, knots[i - 1], tau,
                                   substeps_per_knot)
        ux, uy = series.sample_arrays(tau)
        v = VectorField2(grid,
                         interp_periodic(ux, grid, px, py),
                         interp_periodic(uy, grid, px, py))
        dxx, dyx, dxy, dyy = vector_gradient(v)
        # B_ij accumulates dv_i/dy_j
        grads[i, 0, 0] = dxx
        grads[i, 0, 1] = dyx
        grads[i, 1, 0] = dxy
        grads[i, 1, 1] = dyy
        sup[i] = grad_max_norm(v)
    B = np.trapezoid(grads, knots, axis=0)
    lip = float(np.trapezoid(sup, knots))
    return B, lip


def jacobian_neumann(series: VelocitySeries, t: float, terms: int = 24) -> JacobianField:
    """A = Id + sum_{k=1..terms} (-B)^k with B the time-integrated gradient
    of the trajectory-composed velocity; valid while int |nabla v| <= 1/2
    (checked)."""
    if terms < 1:
        raise ValueError("need at least one series term")
    B, lip = trajectory_velocity_gradient_integral(series, t)
    if lip > 0.5 + 1e-12:
        raise OutsideNeumannRegime(
            f"int |grad v| = {lip:.3f} exceeds 1/2; series may diverge")
    n = series.grid.n
    A = np.zeros((2, 2, n, n))
    A[0, 0] = A[1, 1] = 1.0
    power = np.zeros_like(A)
    power[0, 0] = power[1, 1] = 1.0
    for _ in range(terms):
        power = -np.einsum("ikxy,kjxy->ijxy", B, power)
        A += power
    return JacobianField(series.grid, A, B)


def transport_density(rho0: ScalarField, fm: FlowMap,
                      interpolant: str = "bicubic") -> ScalarField:
    """Semi-Lagrangian composition rho0(X^(-1)(x)) at the grid nodes.

    interpolant 'bicubic' for smooth densities; 'clamped' evaluates with the
    bilinear rule and clips to the initial range, so extrema never grow.
    """
    bx, by = fm.inverse_nodes()
    if interpolant == "bicubic":
        vals = interp_periodic(rho0.values, fm.grid, bx, by, order=3)
    elif interpolant == "clamped":
        vals = interp_periodic(rho0.values, fm.grid, bx, by, order=1)
        vals = np.clip(vals, rho0.values.min(), rho0.values.max())
    else:
        raise ValueError(f"unknown interpolant {interpolant!r}")
    return ScalarField(fm.grid, vals)


def compose_field(f: ScalarField, fm: FlowMap, direction: str = "forward") -> ScalarField:
    """Interpolated composition f(X_t(y)) or f(X_t^(-1)(x))."""
    if direction == "forward":
        px, py = fm.forward_nodes()
    elif direction == "inverse":
        px, py = fm.inverse_nodes()
    else:
        raise ValueError("direction must be 'forward' or 'inverse'")
    return ScalarField(fm.grid, interp_periodic(f.values, fm.grid, px, py))


def _pair_offsets(grid: Grid2D):
    """Lattice offsets at dyadic separations along axes and diagonals."""
    offs = []
    step = 1
    while step <= grid.n // 2:
        offs += [(step, 0), (0, step), (step, step), (step, -step)]
        step *= 2
    return offs


def tensor_holder_seminorm(T: np.ndarray, grid: Grid2D, gamma: float,
                           n_random_pairs: int = 10 ** 4, seed: int = 0,
                           mask: np.ndarray | None = None) -> float:
    """sup over sampled pairs of |T(y) - T(z)|_F / |y - z|^gamma for a tensor
    field T[..., n, n]; pairs cover dyadic lattice offsets plus random pairs.

    mask restricts both pair endpoints to a subregion, which matters for
    flows (rotations, shears) that are only meaningful away from the seam of
    the periodic surrogate domain.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    flat = T.reshape(-1, grid.n, grid.n)
    best = 0.0
    h = grid.spacing
    for (a, b) in _pair_offsets(grid):
        diff = flat - np.roll(flat, (-a, -b), axis=(1, 2))
        num = np.sqrt((diff ** 2).sum(axis=0))
        if mask is not None:
            both = mask & np.roll(mask, (-a, -b), axis=(0, 1))
            if not both.any():
                continue
            num = num[both]
        dist = min(np.hypot(a * h, b * h), grid.box_length / np.sqrt(2.0))
        best = max(best, float(num.max()) / dist ** gamma)
    rng = np.random.default_rng(seed)
    if mask is None:
        pool = np.arange(grid.n * grid.n)
    else:
        pool = np.flatnonzero(mask.ravel())
    if pool.size < 2:
        return best
    ii = pool[rng.integers(0, pool.size, n_random_pairs)]
    jj = pool[rng.integers(0, pool.size, n_random_pairs)]
    keep = ii != jj
    ii, jj = ii[keep], jj[keep]
    X, Y = grid.meshes()
    dx = grid.min_image(X.ravel()[ii] - X.ravel()[jj])
    dy = grid.min_image(Y.ravel()[ii] - Y.ravel()[jj])
    dist = np.hypot(dx, dy)
    pf = flat.reshape(flat.shape[0], -1)
    num = np.sqrt(((pf[:, ii] - pf[:, jj]) ** 2).sum(axis=0))
    best = max(best, float((num / dist ** gamma).max()))
    return best


def holder_gradient_norm(fm: FlowMap, gamma: float, **kwargs) -> float:
    """Holder seminorm of nabla X over sampled pairs."""
    g11, g12, g21, g22 = fm.gradient_arrays()
    T = np.stack([g11, g12, g21, g22])
    return tensor_holder_seminorm(T, fm.grid, gamma, **kwargs)


def velocity_holder_integral(series: VelocitySeries, gamma: float,
                             t0: float, t1: float, **kwargs) -> float:
    """int over [t0, t1] of the Holder seminorm of nabla u (trapezoid)."""
    ts = series.times
    knots = np.unique(np.concatenate([[t0], ts[(ts > t0) & (ts < t1)], [t1]]))
    vals = []
    for tau in knots:
        vx, vy = series.sample_arrays(tau)
        u = VectorField2(series.grid, vx, vy)
        dxx, dyx, dxy, dyy = vector_gradient(u)
        vals.append(tensor_holder_seminorm(
            np.stack([dxx, dyx, dxy, dyy]), series.grid, gamma, **kwargs))
    return float(np.trapezoid(vals, knots))


def gronwall_gradient_envelope(series: VelocitySeries, fm: FlowMap,
                               gamma: float, t0: float = 0.0) -> float:
    """Envelope sup|nabla X|^(1+gamma) * int |nabla u|_{C^gamma} * exp(int
    |nabla u|_inf) dominating the Holder seminorm of nabla X."""
    g11, g12, g21, g22 = fm.gradient_arrays()
    a = g11 * g11 + g12 * g12 + g21 * g21 + g22 * g22
    d = g11 * g22 - g12 * g21
    smax = 0.5 * (np.sqrt(np.maximum(a + 2 * d, 0)) + np.sqrt(np.maximum(a - 2 * d, 0)))
    sup_grad = float(smax.max())
    t1 = t0 + fm.t
    hold = velocity_holder_integral(series, gamma, t0, t1)
    lip = series.grad_infty_integral(t0, t1)
    return sup_grad ** (1.0 + gamma) * hold * float(np.exp(lip))
