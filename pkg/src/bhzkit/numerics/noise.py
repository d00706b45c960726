"""Mollified white noise and FFT convolutions on the periodic grid."""

from __future__ import annotations

import numpy as np
from scipy.fft import irfft2, rfft2

from .grid import Grid, GridField, MollifierSpec


def rng_for(seed: int, index: int = 0) -> np.random.Generator:
    """Independent stream per ``(seed, index)``; results never depend on evaluation order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def white_noise(grid: Grid, seed: int, index: int = 0) -> np.ndarray:
    """Cell values of space-time white noise: i.i.d. ``N(0, 1/(dt dx))``."""
    return rng_for(seed, index).standard_normal(grid.shape) / np.sqrt(grid.cell)


def convolve(kernel: np.ndarray, field: np.ndarray, grid: Grid, kernel_hat=None) -> np.ndarray:
    """Circular ``(k * f)(y) = sum_u k(u) f(y - u) dt dx``."""
    kh = rfft2(kernel) if kernel_hat is None else kernel_hat
    return irfft2(kh * rfft2(field), s=grid.shape) * grid.cell


def convolve_hat(kernel_hat, field_hat, grid: Grid) -> np.ndarray:
    return irfft2(kernel_hat * field_hat, s=grid.shape) * grid.cell


def reflect(kernel: np.ndarray) -> np.ndarray:
    """``k(-u)`` on the lag grid."""
    return np.roll(kernel[::-1, ::-1], (1, 1), axis=(0, 1))


def sample_mollified_noise(grid: Grid, m: MollifierSpec, seed: int, index: int = 0) -> GridField:
    """``zeta^eps = rho^eps * W`` for the white noise drawn from ``(seed, index)``."""
    rho = m.sample(grid)
    W = white_noise(grid, seed, index)
    return GridField(convolve(rho, W, grid), grid, role="noise")


def noise_covariance(grid: Grid, m: MollifierSpec) -> np.ndarray:
    """``C(u) = E[zeta(y) zeta(y - u)] = sum_v rho(v) rho(v - u) dt dx`` on the lag grid."""
    rho = m.sample(grid)
    rh = rfft2(rho)
    return irfft2(rh * np.conj(rh), s=grid.shape) * grid.cell
