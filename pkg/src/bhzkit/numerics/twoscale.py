"""Two-scale sampling of ``zeta`` and ``d^a K * zeta`` near a base point.

The kernel is split smoothly in time, ``K = K (1 - s) + K s`` with ``s``
rising from 0 at ``split/2`` to 1 at ``split``.  The singular short-range
part acts on a fine window around the base point; the smooth long-range part
acts on a coarse grid covering the full unit time range, whose cells inside
the window carry the block means of the same fine white noise.  The coarse
output is interpolated in time onto the fine rows.

Only the quantities ``zeta`` and ``d^a K * zeta`` are produced, so trees whose
edges all act on a bare noise can be evaluated.  The long-range part never
overlaps the short-range mollifier, hence characters of the form
``l(Xi I_a(Xi))`` computed with the short-range kernel alone are exact for
the sampled fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.fft import irfft2, next_fast_len, rfft2
from scipy.interpolate import CubicSpline

from ..trees import XI, Tree, format_tree, noise_count, parse_tree
from .characters import KERNEL_NAMES, CharacterTable, UnsupportedSymbol, compute_character
from .grid import Grid, GridField, MollifierSpec, ResolutionError
from .kernels import KernelSet, _step, build_kernels, short_range_kernels
from .noise import rng_for


def _taper(t, split):
    """0 below ``split/2``, 1 above ``split``, smooth in between."""
    return 1.0 - _step((np.asarray(t) - split / 2) / (split / 2))


@dataclass(frozen=True)
class TwoScaleGrid:
    """Fine window around the base point plus a coarse unit-range grid.

    ``half`` is the half-width in time of the region where fields must be
    valid (the largest test-function support).
    """

    nx: int
    dt: float
    eps: float
    half: float = 1.0 / 32
    ratio: int = 16
    split: float = 1.0 / 32
    length: float = 1.13
    symmetric: bool = True

    @property
    def mollifier(self) -> MollifierSpec:
        return MollifierSpec(self.eps, self.symmetric)

    @cached_property
    def layout(self):
        m = self.ratio
        dtc = self.dt * m
        pad = self.mollifier.a * self.eps**2 + 4 * self.dt
        before = self.split + pad + self.half
        total = before + self.half + pad
        nwin_c = next_fast_len(int(np.ceil(total / dtc)) + 1)
        while (nwin_c * m) != next_fast_len(nwin_c * m):
            nwin_c = next_fast_len(nwin_c + 1)
        fine = Grid(nx=self.nx, nt=nwin_c * m, dt=self.dt)
        nt_c = next_fast_len(int(np.ceil(self.length / dtc)) + nwin_c)
        coarse = Grid(nx=self.nx, nt=nt_c, dt=dtc)
        iz = int(np.ceil(before / self.dt))
        j0 = nt_c - nwin_c
        return fine, coarse, iz, j0, nwin_c

    @property
    def fine(self) -> Grid:
        return self.layout[0]

    @property
    def coarse(self) -> Grid:
        return self.layout[1]

    @property
    def z(self):
        return (self.layout[2], self.nx // 2)

    def valid_rows(self):
        fine, _, iz, _, _ = self.layout
        h = int(np.ceil(self.half / self.dt))
        return max(iz - h, 0), min(iz + h + 1, fine.nt)


class TwoScaleEngine:
    """Precomputed spectra for a :class:`TwoScaleGrid`."""

    def __init__(self, spec: TwoScaleGrid):
        self.spec = spec
        fine, coarse, iz, j0, nwin_c = spec.layout
        self.fine, self.coarse, self.j0, self.nwin_c = fine, coarse, j0, nwin_c
        fine.check_scale(spec.eps)
        if coarse.dt > spec.split / 8:
            raise ResolutionError(
                f"coarse time step {coarse.dt:g} does not resolve the kernel split at {spec.split:g};"
                f" use dt <= {spec.split / (8 * spec.ratio):g} (smaller eps or a finer --grid)"
            )
        full = build_kernels(coarse)
        self.c = full.c
        near = short_range_kernels(fine, spec.split, full.c)
        tf = ((np.arange(fine.nt) - 0.5) * fine.dt).reshape(-1, 1)
        keep = 1.0 - _taper(tf, spec.split)
        keep[0] = 1.0
        self.near = KernelSet(fine, near.K * keep, near.DK * keep, near.DDK * keep, full.c)
        tc = ((np.arange(coarse.nt) - 0.5) * coarse.dt).reshape(-1, 1)
        s = _taper(tc, spec.split)
        s[0] = 0.0
        rho_f = spec.mollifier.sample(fine)
        self.rho_hat = rfft2(rho_f)
        rho_c = self._coarse_mollifier(rho_f)
        rho_c_hat = rfft2(rho_c) * coarse.cell
        self.near_hat = {n: rfft2(self.near[n]) * self.rho_hat * fine.cell**2 for n in ("K", "DK", "DDK")}
        self.far_hat = {n: rfft2(full[n] * s) * rho_c_hat * coarse.cell for n in ("K", "DK", "DDK")}

    def _coarse_mollifier(self, rho_f: np.ndarray) -> np.ndarray:
        fine, coarse, m = self.fine, self.coarse, self.spec.ratio
        out = np.zeros(coarse.shape)
        q = np.rint(fine.t_lags / fine.dt).astype(int)
        live = np.abs(q) * fine.dt <= 2 * self.spec.mollifier.a * self.spec.eps**2 + fine.dt
        for qi, row in zip(q[live], rho_f[live]):
            out[int(np.ceil(qi / m)) % coarse.nt] += row / m
        return out

    def sample(self, seed: int, index: int = 0) -> "TwoScaleNoise":
        fine, coarse, m = self.fine, self.coarse, self.spec.ratio
        rng = rng_for(seed, index)
        wf = rng.standard_normal(fine.shape) / np.sqrt(fine.cell)
        wc = rng.standard_normal(coarse.shape) / np.sqrt(coarse.cell)
        wc[self.j0: self.j0 + self.nwin_c] = wf.reshape(self.nwin_c, m, fine.nx).mean(axis=1)
        return TwoScaleNoise(self, rfft2(wf), rfft2(wc))

    def characters(self, symbols) -> CharacterTable:
        vals = {}
        for s in symbols:
            t = s if isinstance(s, Tree) else parse_tree(s)
            ok = t.noise == "Xi" and len(t.children) == 1 and t.children[0][1] == XI and t.poly == (0, 0)
            if noise_count(t) == 2 and not ok:
                raise UnsupportedSymbol(
                    f"l({format_tree(t)}) depends on the long-range kernel; not available in two-scale mode"
                )
            vals[t] = compute_character(t, self.fine, self.spec.mollifier, self.near)
        return CharacterTable(vals, eps=self.spec.eps)


class TwoScaleNoise:
    """One sample: ``zeta`` on the fine window and lazily ``d^a K * zeta``."""

    def __init__(self, engine: TwoScaleEngine, wf_hat, wc_hat):
        self.engine = engine
        self._wf = wf_hat
        self._wc = wc_hat
        self._cache = {}

    @cached_property
    def zeta(self) -> GridField:
        e = self.engine
        return GridField(irfft2(e.rho_hat * self._wf, s=e.fine.shape) * e.fine.cell, e.fine, role="noise")

    def conv(self, a) -> np.ndarray:
        name = KERNEL_NAMES[tuple(a)]
        if name not in self._cache:
            e = self.engine
            near = irfft2(e.near_hat[name] * self._wf, s=e.fine.shape)
            far_c = irfft2(e.far_hat[name] * self._wc, s=e.coarse.shape)
            m = e.spec.ratio
            lo = e.j0 - 3
            rows = np.arange(lo, e.j0 + e.nwin_c + 3)
            spline = CubicSpline(rows, far_c[rows % e.coarse.nt], axis=0)
            pos = e.j0 + np.arange(e.fine.nt) / m
            self._cache[name] = near + spline(pos)
        return self._cache[name]
