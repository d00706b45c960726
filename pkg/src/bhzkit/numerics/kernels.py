"""Truncated periodic heat kernel and its spatial derivatives on a grid.

``K = (P - c) chi`` where ``P`` is the heat kernel on the unit circle, ``chi``
a smooth cutoff equal to 1 for ``sqrt(t + x^2) <= 1/2`` and 0 beyond 1, and
``c`` makes the discrete integral of ``K`` vanish.

Kernels are stored as cell averages indexed by lag: row ``i`` covers the time
cell ``((i-1) dt, i dt]`` so that row 0 (and every non-positive time) is zero,
column ``j`` is centred at the signed lag ``x_lags[j]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erf

from .grid import Grid, GridField, ResolutionError

# below this time the image sum is used, above it the Fourier series
_SPLIT = 0.02
_ROW_CHUNK = 512


def _images(t):
    return int(np.ceil(0.5 + 12.0 * np.sqrt(t)))


def _modes(t):
    return max(1, int(np.ceil(np.sqrt(40.0 / (4 * np.pi**2 * t)))))


def heat(t, x, order: int = 0):
    """Pointwise ``d_x^order P(t, x)`` for ``t > 0``; ``t`` is a column, ``x`` a row."""
    t = np.asarray(t, dtype=float).reshape(-1, 1)
    x = np.asarray(x, dtype=float).reshape(1, -1)
    out = np.zeros((t.shape[0], x.shape[1]))
    small = t[:, 0] < _SPLIT
    if small.any():
        ts = t[small]
        acc = np.zeros((ts.shape[0], x.shape[1]))
        nmax = _images(ts.max())
        for n in range(-nmax, nmax + 1):
            y = x + n
            g = np.exp(-(y**2) / (4 * ts)) / np.sqrt(4 * np.pi * ts)
            if order == 1:
                g = g * (-y / (2 * ts))
            elif order == 2:
                g = g * (y**2 / (4 * ts**2) - 1 / (2 * ts))
            acc += g
        out[small] = acc
    if (~small).any():
        tl = t[~small]
        kmax = _modes(_SPLIT)
        k = np.arange(1, kmax + 1).reshape(1, -1)
        decay = np.exp(-4 * np.pi**2 * k**2 * tl)
        w = 2 * np.pi * k.reshape(-1, 1)
        if order == 0:
            basis = 2 * np.cos(w * x)
            out[~small] = 1.0 + decay @ basis
        elif order == 1:
            out[~small] = decay @ (-2 * w * np.sin(w * x))
        else:
            out[~small] = decay @ (-2 * w**2 * np.cos(w * x))
    return out


def heat_cell_average(t, x, dx: float):
    """Average of ``P(t, .)`` over the spatial cell ``[x - dx/2, x + dx/2]``."""
    t = np.asarray(t, dtype=float).reshape(-1, 1)
    x = np.asarray(x, dtype=float).reshape(1, -1)
    out = np.zeros((t.shape[0], x.shape[1]))
    small = t[:, 0] < _SPLIT
    if small.any():
        ts = t[small]
        s = 2 * np.sqrt(ts)
        acc = np.zeros((ts.shape[0], x.shape[1]))
        nmax = _images(ts.max())
        for n in range(-nmax, nmax + 1):
            y = x + n
            acc += 0.5 * (erf((y + dx / 2) / s) - erf((y - dx / 2) / s))
        out[small] = acc / dx
    if (~small).any():
        tl = t[~small]
        k = np.arange(1, _modes(_SPLIT) + 1)
        decay = np.exp(-4 * np.pi**2 * k.reshape(1, -1) ** 2 * tl)
        sinc = np.sinc(k * dx)
        basis = 2 * (sinc.reshape(-1, 1)) * np.cos(2 * np.pi * k.reshape(-1, 1) * x)
        out[~small] = 1.0 + decay @ basis
    return out


# --------------------------------------------------------------------------
# cutoff


def _g(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = np.exp(-1.0 / v[pos])
    return out


def _step(u, order=0):
    """Smooth step: 1 for ``u <= 0``, 0 for ``u >= 1``; derivatives in ``u``."""
    u = np.clip(np.asarray(u, dtype=float), -1.0, 2.0)
    A, B = _g(1 - u), _g(u)
    S = A + B
    if order == 0:
        return A / S
    inside = (u > 0) & (u < 1)
    uu = np.where(inside, u, 0.5)
    A1 = np.where(inside, -A / (1 - uu) ** 2, 0.0)
    B1 = np.where(inside, B / uu**2, 0.0)
    N1 = A1 * B - A * B1
    if order == 1:
        return np.where(inside, N1 / S**2, 0.0)
    A2 = np.where(inside, -A1 / (1 - uu) ** 2 - 2 * A / (1 - uu) ** 3, 0.0)
    B2 = np.where(inside, B1 / uu**2 - 2 * B / uu**3, 0.0)
    N2 = (A2 * B - A * B2) * S - 2 * N1 * (A1 + B1)
    return np.where(inside, N2 / S**3, 0.0)


def cutoff(t, x, order: int = 0):
    """``d_x^order chi(t, x)`` with ``chi = step(2 r - 1)``, ``r = sqrt(t + x^2)``; zero for ``t <= 0``."""
    t = np.asarray(t, dtype=float).reshape(-1, 1)
    x = np.asarray(x, dtype=float).reshape(1, -1)
    tp = np.maximum(t, 0.0)
    r = np.sqrt(tp + x**2)
    u = 2 * r - 1
    live = t > 0
    if order == 0:
        return np.where(live, _step(u), 0.0)
    rr = np.maximum(r, 1e-300)
    d1 = 2 * _step(u, 1)
    if order == 1:
        return np.where(live, d1 * x / rr, 0.0)
    d2 = 4 * _step(u, 2)
    return np.where(live, d2 * (x / rr) ** 2 + d1 * (1 / rr - x**2 / rr**3), 0.0)


# --------------------------------------------------------------------------
# assembly


def _gauss(n):
    xi, w = np.polynomial.legendre.leggauss(n)
    return (xi + 1) / 2, w / 2


@dataclass
class KernelSet:
    """Cell-averaged ``K``, ``d_x K`` and ``d_x^2 K`` on a grid, with the mean-zero constant."""

    grid: Grid
    K: np.ndarray
    DK: np.ndarray
    DDK: np.ndarray
    c: float

    def field(self, name: str) -> GridField:
        return GridField(getattr(self, name), self.grid, role="kernel")

    def __getitem__(self, name: str) -> np.ndarray:
        return getattr(self, name)

    @property
    def spectra(self):
        return _spectra(self)


_SPECTRA: dict = {}


def _spectra(ks: KernelSet):
    key = id(ks)
    if key not in _SPECTRA:
        from scipy.fft import rfft2

        _SPECTRA[key] = {n: rfft2(getattr(ks, n)) for n in ("K", "DK", "DDK")}
    return _SPECTRA[key]


def _rows(grid: Grid, tmax: float | None = None):
    if tmax is not None:
        return np.arange(1, min(int(np.ceil(tmax / grid.dt)), grid.nt - 1) + 1)
    last = int(np.ceil(1.0 / grid.dt))
    if grid.length <= 1.0 + 2 * grid.dt:
        raise ResolutionError(
            f"time window {grid.length:g} does not exceed the kernel range 1; use a longer window"
        )
    return np.arange(1, min(last, grid.nt - 1) + 1)


def _time_nodes(rows, dt):
    """Quadrature nodes per row: 8 Gauss points in the first cells, 2 after."""
    out = []
    for n, sel in ((8, rows <= 64), (2, rows > 64)):
        r = rows[sel]
        if r.size == 0:
            continue
        xi, w = _gauss(n)
        t = ((r - 1).reshape(-1, 1) + xi.reshape(1, -1)) * dt
        out.append((r, t, w))
    return out


@lru_cache(maxsize=8)
def build_kernels(grid: Grid) -> KernelSet:
    """Assemble ``K``, ``DK``, ``DDK`` and ``c`` on ``grid`` (cached per grid)."""
    return _assemble(grid)


@lru_cache(maxsize=8)
def short_range_kernels(grid: Grid, tmax: float, c: float) -> KernelSet:
    """Kernels restricted to lags ``t <= tmax`` with a given mean-zero constant.

    Used on short windows where the full unit time range does not fit.
    """
    return _assemble(grid, tmax, c)


def _assemble(grid: Grid, tmax: float | None = None, c_given: float | None = None) -> KernelSet:
    if grid.nx < 16:
        raise ResolutionError(f"nx={grid.nx} too coarse to resolve the kernel cutoff")
    dx = grid.dx
    x = grid.x_lags
    edges_lo = (x - dx / 2 + 0.5) % 1.0 - 0.5
    edges_hi = (x + dx / 2 + 0.5) % 1.0 - 0.5
    nt, nx = grid.shape
    Pchi = np.zeros((nt, nx))
    chi = np.zeros((nt, nx))
    F_hi = np.zeros((nt, nx))
    F_lo = np.zeros((nt, nx))
    G_hi = np.zeros((nt, nx))
    G_lo = np.zeros((nt, nx))
    parts = []
    for rows, tnodes, w in _time_nodes(_rows(grid, tmax), grid.dt):
        for s in range(0, rows.size, _ROW_CHUNK):
            r = rows[s: s + _ROW_CHUNK]
            tn = tnodes[s: s + _ROW_CHUNK]
            flat = tn.reshape(-1)
            nq = tn.shape[1]

            def avg(arr):
                return (arr.reshape(r.size, nq, nx) * w.reshape(1, -1, 1)).sum(axis=1)

            cc = cutoff(flat, x)
            Pchi[r] = avg(heat_cell_average(flat, x, dx) * cc)
            chi[r] = avg(cc)
            parts.append((r, flat, nq, w))
    c = float(Pchi.sum() / chi.sum()) if c_given is None else float(c_given)
    K = Pchi - c * chi
    for r, flat, nq, w in parts:

        def avg(arr):
            return (arr.reshape(r.size, nq, nx) * w.reshape(1, -1, 1)).sum(axis=1)

        for xs, F, G in ((edges_hi, F_hi, G_hi), (edges_lo, F_lo, G_lo)):
            P0, P1 = heat(flat, xs, 0), heat(flat, xs, 1)
            c0, c1 = cutoff(flat, xs, 0), cutoff(flat, xs, 1)
            F[r] = avg((P0 - c) * c0)
            G[r] = avg(P1 * c0 + (P0 - c) * c1)
    DK = (F_hi - F_lo) / dx
    DDK = (G_hi - G_lo) / dx
    return KernelSet(grid=grid, K=K, DK=DK, DDK=DDK, c=c)


def kernel_sup_weighted(ks: KernelSet) -> float:
    """``sup |z|_s |K(z)|``, a grid-stable proxy for the size of ``K`` at order 1."""
    g = ks.grid
    t = (np.arange(g.nt) * g.dt).reshape(-1, 1)
    norm = np.sqrt(t) + np.abs(g.x_lags).reshape(1, -1)
    return float(np.max(norm * np.abs(ks.K)))
