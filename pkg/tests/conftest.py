import numpy as np
import pytest

from fins2d.grid import Grid2D, ScalarField, VectorField2


def band_limited_scalar(grid, rng, mmax=4, mean_free=True):
    """Random real field with integer modes confined to |m| <= mmax."""
    n = grid.n
    hat = np.zeros((n, n), dtype=complex)
    for m1 in range(-mmax, mmax + 1):
        for m2 in range(-mmax, mmax + 1):
            if m1 * m1 + m2 * m2 > mmax * mmax:
                continue
            if mean_free and m1 == 0 and m2 == 0:
                continue
            hat[m1, m2] = rng.normal() + 1j * rng.normal()
    vals = np.fft.ifft2(hat).real
    peak = np.abs(vals).max()
    if peak > 0:
        vals = vals / peak
    return ScalarField(grid, vals)


def band_limited_divfree(grid, rng, mmax=4):
    """Random divergence-free velocity from a band-limited stream function."""
    psi = band_limited_scalar(grid, rng, mmax=mmax)
    hx = -1j * grid.ky * psi.hat
    hy = 1j * grid.kx * psi.hat
    return VectorField2.from_hat(grid, hx, hy)


def mode_field(grid, m1, m2, phase=0.0):
    """cos(k . x + phase) for the integer mode (m1, m2)."""
    X, Y = grid.meshes()
    k0 = grid.base_frequency
    return ScalarField(grid, np.cos(k0 * (m1 * X + m2 * Y) + phase))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def grid64():
    return Grid2D(64, 2.0 * np.pi)


@pytest.fixture
def grid32():
    return Grid2D(32, 2.0 * np.pi)
