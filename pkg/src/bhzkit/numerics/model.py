"""Recursive evaluation of decorated trees on a grid."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.fft import irfft2, rfft2

from ..hopf import prepare
from ..rules import conforms_to_rule
from ..trees import XI, ZERO2, Tree, format_tree, has_xi_j, homogeneity, planted, snorm, vadd, vfact
from .characters import KERNEL_NAMES, CharacterTable
from .grid import Grid, GridField
from .kernels import KernelSet, build_kernels

MODES = ("naive", "recentered", "renormalized")


class ModelError(ValueError):
    pass


class _Ctx:
    def __init__(self, noise: GridField, kernels: KernelSet, z, chars, placeholders, check, provider=None):
        self.provider = provider
        self.grid = noise.grid
        self.zeta = noise.values
        self.ks = kernels
        self.z = z
        self.chars = chars
        self.placeholders = placeholders or {}
        self.check = check
        dt, dx = self.grid.offsets(self.grid.center() if z is None else z)
        self.dt_off = dt.reshape(-1, 1)
        self.dx_off = dx.reshape(1, -1)
        self.spectra = kernels.spectra

    def kernel_hat(self, a):
        try:
            return self.spectra[KERNEL_NAMES[tuple(a)]]
        except KeyError:
            raise ModelError(f"no kernel for derivative {tuple(a)} (time derivatives are not tabulated)") from None

    def monomial(self, k):
        if k == ZERO2:
            return 1.0
        return self.dt_off ** k[0] * self.dx_off ** k[1] / vfact(k)

    def leaf(self, noise):
        if noise is None:
            return 1.0
        if noise == "Xi":
            return self.zeta
        try:
            f = self.placeholders[noise]
        except KeyError:
            raise ModelError(f"no field supplied for placeholder {noise}") from None
        return f.values if isinstance(f, GridField) else np.asarray(f)


def _conv(ctx: _Ctx, a, f, child: Tree | None = None) -> np.ndarray:
    if ctx.provider is not None:
        if child != XI:
            raise ModelError("two-scale fields only support kernels acting on a bare noise")
        ctx.kernel_hat(a)
        return ctx.provider.conv(a)
    if np.isscalar(f):
        f = np.full(ctx.grid.shape, float(f))
    return irfft2(ctx.kernel_hat(a) * rfft2(f), s=ctx.grid.shape) * ctx.grid.cell


def _planted(ctx: _Ctx, a, child: Tree, value_child, recenter: bool) -> np.ndarray:
    """``d^a K * Pi child`` minus, when recentring, its Taylor jet at ``z``."""
    out = _conv(ctx, a, value_child, child)
    if not recenter:
        return out
    h = homogeneity(planted(a, child), plus_mode=has_xi_j(child))
    if not h.is_positive():
        return out
    zt, zx = ctx.z
    deg = 0
    while h > h.__class__(deg, 0):
        deg += 1
    for k0 in range(deg // 2 + 1):
        for k1 in range(deg - 2 * k0 + 1):
            k = (k0, k1)
            if not h > h.__class__(snorm(k), 0):
                continue
            if k0:
                raise ModelError(f"jet of order {k} needs a time derivative of the kernel")
            val = out[zt, zx] if k == ZERO2 else _conv(ctx, vadd(a, k), value_child, child)[zt, zx]
            out = out - ctx.monomial(k) * val
    return out


def _product(ctx: _Ctx, tau: Tree, child_value, recenter: bool) -> np.ndarray:
    val = ctx.leaf(tau.noise)
    if tau.poly != ZERO2:
        val = val * ctx.monomial(tau.poly) * vfact(tau.poly)
    for a, c in tau.children:
        val = val * _planted(ctx, a, c, child_value(c), recenter)
    return val


def _naive(ctx: _Ctx, tau: Tree, recenter: bool):
    return _product(ctx, tau, lambda c: _naive(ctx, c, recenter), recenter)


def _renormalized(ctx: _Ctx, tau: Tree, recenter: bool):
    total = 0.0
    for coef, mono, rest in prepare(tau):
        weight = float(coef)
        for s in mono:
            weight *= ctx.chars[s]
        if weight == 0.0:
            continue
        total = total + weight * _product(ctx, rest, lambda c: _renormalized(ctx, c, recenter), recenter)
    if np.isscalar(total):
        total = np.full(ctx.grid.shape, float(total))
    return total


def evaluate_model(
    tau: Tree,
    noise: GridField,
    mode: str = "naive",
    z=None,
    chars: CharacterTable | None = None,
    kernels: KernelSet | None = None,
    placeholders: dict | None = None,
    check: bool = True,
) -> GridField:
    """Evaluate ``tau`` on the grid.

    ``naive`` applies the admissible recursion (noise leaves, kernel edges,
    pointwise products; ``X^k`` is ``(y - z)^k`` around ``z`` or the grid
    centre).  ``recentered`` subtracts at every edge the Taylor jet at ``z``
    of order below the homogeneity of the planted subtree (placeholder trees
    use the plus-mode homogeneity).  ``renormalized`` expands every subtree
    through the preparation map with the numeric characters in ``chars`` and
    recentres too when ``z`` is given.
    """
    if mode not in MODES:
        raise ModelError(f"unknown mode {mode!r}; expected one of {MODES}")
    if check and not conforms_to_rule(tau):
        raise ModelError(f"{format_tree(tau)} is not admissible for the rule")
    provider = None
    if hasattr(noise, "conv") and hasattr(noise, "zeta"):
        provider, noise = noise, noise.zeta
        kernels = provider.engine.near
    grid = noise.grid
    ks = build_kernels(grid) if kernels is None else kernels
    if mode == "recentered" and z is None:
        raise ModelError("recentered mode needs a base point z")
    if mode == "renormalized" and chars is None:
        raise ModelError("renormalized mode needs a character table")
    ctx = _Ctx(noise, ks, z, chars, placeholders, check, provider)
    recenter = z is not None and mode != "naive"
    if mode == "renormalized":
        vals = _renormalized(ctx, tau, recenter)
    else:
        vals = _naive(ctx, tau, recenter)
    if np.isscalar(vals):
        vals = np.full(grid.shape, float(vals))
    return GridField(np.asarray(vals, dtype=float), grid)
