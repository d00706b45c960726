"""Space-time grids, fields, mollifiers and test functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate


# time window of the periodic grids; any length above 1 works because
# every kernel has time lags below 1
WINDOW = 1.13


class ResolutionError(ValueError):
    """A grid cannot resolve a requested scale."""


class SupportError(ValueError):
    """A test function does not fit inside the grid window."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a circular time window of length ``nt*dt`` times the unit circle.

    Time is periodic as well: every convolution is circular, and a window
    longer than the kernel range plus margins makes this exact for the
    quantities evaluated near the centre.
    """

    nx: int = 256
    nt: int = 768
    dt: float = 3.0 / 768

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def length(self) -> float:
        return self.nt * self.dt

    @property
    def cell(self) -> float:
        return self.dt * self.dx

    @property
    def shape(self):
        return (self.nt, self.nx)

    @cached_property
    def t_lags(self) -> np.ndarray:
        """Signed time offsets of each index (circular)."""
        i = np.arange(self.nt)
        return np.where(i <= self.nt // 2, i, i - self.nt) * self.dt

    @cached_property
    def x_lags(self) -> np.ndarray:
        j = np.arange(self.nx)
        return np.where(j <= self.nx // 2, j, j - self.nx) * self.dx

    @cached_property
    def causal_t_lags(self) -> np.ndarray:
        """Time lags for kernel arrays: ``i dt`` up to beyond the kernel range, negative after."""
        i = np.arange(self.nt)
        cut = 1.0 + (self.length - 1.0) / 2
        t = i * self.dt
        return np.where(t < cut, t, t - self.length)

    def center(self):
        return (self.nt // 2, self.nx // 2)

    def offsets(self, z):
        """Signed (time, space) displacement ``y - z`` for every grid point ``y``."""
        it, ix = z
        i = (np.arange(self.nt) - it) % self.nt
        j = (np.arange(self.nx) - ix) % self.nx
        return self.t_lags[i], self.x_lags[j]

    def check_scale(self, eps: float, cells: int = 4):
        if eps / self.dx < cells or eps**2 / self.dt < cells:
            raise ResolutionError(
                f"eps={eps:g} resolved by {eps / self.dx:.1f} space and {eps**2 / self.dt:.1f} time cells;"
                f" need {cells}. Refine the grid (--grid) or raise eps."
            )

    @classmethod
    def parse(cls, text: str, length: float | None = None) -> "Grid":
        try:
            nx, nt = (int(v) for v in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"grid must look like NXxNT, got {text!r}") from None
        length = WINDOW if length is None else length
        return cls(nx=nx, nt=nt, dt=length / nt)

    @classmethod
    def for_scales(cls, nx: int, dt: float, length: float) -> "Grid":
        """Grid with an FFT-friendly time count covering ``length``."""
        from scipy.fft import next_fast_len

        nt = next_fast_len(int(np.ceil(length / dt)))
        return cls(nx=nx, nt=nt, dt=dt)


@dataclass
class GridField:
    values: np.ndarray
    grid: Grid
    role: str = "model-output"

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")


# --------------------------------------------------------------------------
# bump profiles


def bump(u):
    """``psi(u) = exp(1 - 1/(1-u^2))`` on ``|u| < 1``; ``psi(0) = 1``."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


BUMP_INTEGRAL = integrate.quad(lambda u: float(bump(np.array(u))), -1, 1)[0]


@dataclass(frozen=True)
class MollifierSpec:
    """``rho(t,x) = psi(t/a) psi(x/b)`` with unit integral and ``rho(0)=1``.

    The asymmetric variant multiplies by ``1 + skew (t/a)(x/b)``; a skew that
    factorises in ``t`` and ``x`` would leave the noise covariance even in
    ``x`` and could not be told apart from the symmetric case.
    """

    eps: float
    symmetric: bool = True
    skew: float = 0.5

    @property
    def b(self) -> float:
        return BUMP_INTEGRAL ** (-2.0 / 3.0)

    @property
    def a(self) -> float:
        return self.b**2

    def profile(self, t, x):
        val = bump(np.asarray(t) / self.a) * bump(np.asarray(x) / self.b)
        if not self.symmetric:
            val = val * (1.0 + self.skew * (np.asarray(t) / self.a) * (np.asarray(x) / self.b))
        return val

    def sample(self, grid: Grid, check: bool = True) -> np.ndarray:
        """``rho^eps`` sampled at lags, normalised so that its discrete integral is 1."""
        if check:
            grid.check_scale(self.eps)
        e = self.eps
        T, X = np.meshgrid(grid.t_lags / e**2, grid.x_lags / e, indexing="ij")
        vals = self.profile(T, X) / e**3
        total = vals.sum() * grid.cell
        return vals / total


@dataclass(frozen=True)
class TestFunctionSpec:
    """Separable bump supported in the parabolic ball of radius 1/2, unit integral.

    ``phi(t,x) = psi(8t) psi(4x) / c`` so ``|t| < 1/8`` and ``|x| < 1/4``;
    ``phi^lam_z(y) = lam^-3 phi((t-s)/lam^2, (x-z)/lam)``.
    """

    lam: float = 0.5
    z: tuple | None = None

    @staticmethod
    def norm_const() -> float:
        return BUMP_INTEGRAL**2 / 32.0

    def values(self, grid: Grid) -> np.ndarray:
        z = grid.center() if self.z is None else self.z
        lam = self.lam
        if lam**2 / 8 >= grid.length / 2 - grid.dt or lam / 4 >= 0.5:
            raise SupportError(f"test function at scale {lam:g} does not fit the grid window")
        if lam**2 / 8 < 2 * grid.dt or lam / 4 < 2 * grid.dx:
            raise ResolutionError(
                f"test function at scale {lam:g} under-resolved on this grid (needs lam^2/8 >= 2 dt and"
                f" lam/4 >= 2 dx); refine the grid (--grid) or drop the smallest scale."
            )
        dtv, dxv = grid.offsets(z)
        ft = bump(8 * dtv / lam**2) / lam**2
        fx = bump(4 * dxv / lam) / lam
        return np.outer(ft, fx) / self.norm_const()


def pair_with_test(field, phi: TestFunctionSpec, grid: Grid | None = None) -> float:
    """Quadrature of ``<field, phi^lam_z>``."""
    if isinstance(field, GridField):
        grid, values = field.grid, field.values
    else:
        values = np.asarray(field)
    return float(np.sum(values * phi.values(grid)) * grid.cell)
