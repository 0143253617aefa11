"""Periodic grids and sampled fields with paired spectral representations.

All fields live on the torus [0, L)^2 sampled on an n-by-n lattice (n a power
of two).  Physical samples are the primary representation; spectral
coefficients are computed lazily with numpy's FFT and cached.  Lp norms use
the rectangle rule, which on a periodic uniform grid coincides with the
trapezoid rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_BOX = 16.0 * math.pi  # large box used as a whole-plane surrogate


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=32)
def _grid_arrays(n: int, box_length: float):
    h = box_length / n
    axis = np.arange(n) * h
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    kx, ky = np.meshgrid(k1, k1, indexing="ij")
    kmag = np.hypot(kx, ky)
    k2 = kx * kx + ky * ky
    kmax = np.pi * n / box_length
    dealias = kmag <= (2.0 / 3.0) * kmax  # spherical 2/3-rule mask
    for a in (axis, kx, ky, kmag, k2, dealias):
        a.setflags(write=False)
    return axis, kx, ky, kmag, k2, dealias


@dataclass(frozen=True)
class Grid2D:
    """Uniform n x n sampling of the periodic box [0, L)^2."""

    n: int
    box_length: float = DEFAULT_BOX

    def __post_init__(self):
        if self.n < 8 or not _is_power_of_two(self.n):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")
        if not (self.box_length > 0):
            raise ValueError("box_length must be positive")

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    @property
    def base_frequency(self) -> float:
        """Smallest nonzero wavenumber 2*pi/L."""
        return 2.0 * np.pi / self.box_length

    @property
    def axis(self) -> np.ndarray:
        return _grid_arrays(self.n, self.box_length)[0]

    def meshes(self):
        x = self.axis
        return np.meshgrid(x, x, indexing="ij")

    @property
    def kx(self) -> np.ndarray:
        return _grid_arrays(self.n, self.box_length)[1]

    @property
    def ky(self) -> np.ndarray:
        return _grid_arrays(self.n, self.box_length)[2]

    @property
    def kmag(self) -> np.ndarray:
        return _grid_arrays(self.n, self.box_length)[3]

    @property
    def k2(self) -> np.ndarray:
        return _grid_arrays(self.n, self.box_length)[4]

    @property
    def dealias_mask(self) -> np.ndarray:
        return _grid_arrays(self.n, self.box_length)[5]

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Reduce coordinates into [0, L)."""
        return np.mod(points, self.box_length)

    def min_image(self, delta: np.ndarray) -> np.ndarray:
        """Reduce displacement components into [-L/2, L/2)."""
        L = self.box_length
        return (delta + 0.5 * L) % L - 0.5 * L


def _check_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(f"{what} contains non-finite samples")


@dataclass
class ScalarField:
    """Real scalar samples on a Grid2D with a cached spectral image."""

    grid: Grid2D
    values: np.ndarray
    _hat: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError("sample array does not match the grid")
        _check_finite(self.values, "scalar field")

    @classmethod
    def from_hat(cls, grid: Grid2D, hat: np.ndarray) -> "ScalarField":
        vals = np.fft.ifft2(hat).real
        f = cls(grid, vals)
        f._hat = np.asarray(hat, dtype=complex)
        return f

    @classmethod
    def zeros(cls, grid: Grid2D) -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n)))

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            self._hat = np.fft.fft2(self.values)
        return self._hat

    def mean(self) -> float:
        return float(self.values.mean())

    def lp_norm(self, p: float) -> float:
        if p == np.inf:
            return float(np.abs(self.values).max())
        return float((np.abs(self.values) ** p).sum() * self.grid.cell_area) ** (1.0 / p)

    def l2_norm(self) -> float:
        return self.lp_norm(2)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "ScalarField":
        if isinstance(c, ScalarField):
            return ScalarField(self.grid, self.values * c.values)
        return ScalarField(self.grid, self.values * float(c))

    __rmul__ = __mul__


@dataclass
class VectorField2:
    """Two-component real vector field (vx, vy) on a Grid2D."""

    grid: Grid2D
    vx: np.ndarray
    vy: np.ndarray
    _hat: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.vx = np.asarray(self.vx, dtype=float)
        self.vy = np.asarray(self.vy, dtype=float)
        shape = (self.grid.n, self.grid.n)
        if self.vx.shape != shape or self.vy.shape != shape:
            raise ValueError("component arrays do not match the grid")
        _check_finite(self.vx, "vector field x-component")
        _check_finite(self.vy, "vector field y-component")

    @classmethod
    def from_hat(cls, grid: Grid2D, hx: np.ndarray, hy: np.ndarray) -> "VectorField2":
        f = cls(grid, np.fft.ifft2(hx).real, np.fft.ifft2(hy).real)
        f._hat = (np.asarray(hx, dtype=complex), np.asarray(hy, dtype=complex))
        return f

    @classmethod
    def zeros(cls, grid: Grid2D) -> "VectorField2":
        z = np.zeros((grid.n, grid.n))
        return cls(grid, z, z.copy())

    @property
    def hat(self) -> tuple:
        if self._hat is None:
            self._hat = (np.fft.fft2(self.vx), np.fft.fft2(self.vy))
        return self._hat

    def components(self):
        return self.vx, self.vy

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)

    def max_norm(self) -> float:
        return float(self.magnitude().max())

    def lp_norm(self, p: float) -> float:
        mag = self.magnitude()
        if p == np.inf:
            return float(mag.max())
        return float((mag ** p).sum() * self.grid.cell_area) ** (1.0 / p)

    def l2_norm(self) -> float:
        return self.lp_norm(2)

    def __add__(self, other: "VectorField2") -> "VectorField2":
        return VectorField2(self.grid, self.vx + other.vx, self.vy + other.vy)

    def __sub__(self, other: "VectorField2") -> "VectorField2":
        return VectorField2(self.grid, self.vx - other.vx, self.vy - other.vy)

    def __mul__(self, c) -> "VectorField2":
        c = float(c)
        return VectorField2(self.grid, self.vx * c, self.vy * c)

    __rmul__ = __mul__
