"""Deterministic (Wick) quadrature of 2-noise BHZ characters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import irfft2, rfft2

from ..hopf import character_vanishes
from ..trees import ZERO2, Tree, format_tree, noise_count, parse_tree
from .grid import Grid, MollifierSpec
from .kernels import KernelSet, build_kernels


class UnsupportedSymbol(ValueError):
    pass


class MissingCharacter(KeyError):
    def __str__(self):
        return f"no character value supplied for l({self.args[0]})"


KERNEL_NAMES = {(0, 0): "K", (0, 1): "DK", (0, 2): "DDK"}


def _kernel(ks: KernelSet, a) -> np.ndarray:
    try:
        return ks[KERNEL_NAMES[tuple(a)]]
    except KeyError:
        raise UnsupportedSymbol(f"no numerical kernel for edge decoration {tuple(a)}") from None


def _delta(grid: Grid) -> np.ndarray:
    d = np.zeros(grid.shape)
    d[0, 0] = 1.0 / grid.cell
    return d


def _lag_monomial(grid: Grid, k) -> np.ndarray:
    """``(-w)^k`` on the lag grid (causal time lags, signed space lags)."""
    t = grid.causal_t_lags.reshape(-1, 1)
    x = grid.x_lags.reshape(1, -1)
    return (-t) ** k[0] * (-x) ** k[1] * np.ones(grid.shape)


def _branch_filter(edge, child: Tree, ks: KernelSet) -> np.ndarray:
    """Filter ``g`` with ``(Pi I_edge child)(0) = sum_w g(w) zeta(-w) dt dx`` for one-noise branches."""
    grid = ks.grid
    chain = [edge]
    node = child
    while node.noise is None:
        if node.poly != ZERO2 or len(node.children) != 1:
            raise UnsupportedSymbol(f"branch {format_tree(child)} is not a single-noise chain")
        e, node = node.children[0]
        chain.append(e)
    if node.children or node.noise != "Xi":
        raise UnsupportedSymbol(f"branch {format_tree(child)} is not a single-noise chain")
    hat = None
    for e in chain:
        kh = rfft2(_kernel(ks, e))
        hat = kh if hat is None else hat * kh * grid.cell
    g = irfft2(hat, s=grid.shape)
    if node.poly != ZERO2:
        if len(chain) > 1:
            raise UnsupportedSymbol(f"branch {format_tree(child)}: polynomial below an inner edge")
        g = g * _lag_monomial(grid, node.poly)
    return g


def root_filters(sigma: Tree, ks: KernelSet) -> list:
    """Linear filters of the root factors of a 2-noise, non-planted tree."""
    if sigma.poly != ZERO2:
        return None
    filters = []
    if sigma.noise == "Xi":
        filters.append(_delta(ks.grid))
    elif sigma.noise is not None:
        raise UnsupportedSymbol(f"placeholder noise in {format_tree(sigma)}")
    for e, c in sigma.children:
        filters.append(_branch_filter(e, c, ks))
    return filters


def compute_character(sigma, grid: Grid, m: MollifierSpec, kernels: KernelSet | None = None) -> float:
    """``l^eps(sigma) = -E[(Pi sigma)(0)]`` by exact Gaussian pairing on the grid.

    For a root product of two single-noise branches with filters ``g1, g2``
    this is ``-sum (g1 * rho)(g2 * rho) dt dx``.  Symbols that vanish by
    parity, by being planted or by a placeholder tag return 0.
    """
    if isinstance(sigma, str):
        sigma = parse_tree(sigma)
    cls = character_vanishes(sigma)
    if cls.vanishes:
        return 0.0
    if noise_count(sigma) != 2:
        raise UnsupportedSymbol(f"l({format_tree(sigma)}): only 2-noise characters are computed numerically")
    ks = build_kernels(grid) if kernels is None else kernels
    filters = root_filters(sigma, ks)
    if filters is None:
        return 0.0
    if len(filters) != 2:
        raise UnsupportedSymbol(f"l({format_tree(sigma)}): root must carry exactly two noise branches")
    rho_hat = rfft2(m.sample(grid))
    smoothed = [irfft2(rfft2(g) * rho_hat, s=grid.shape) * grid.cell for g in filters]
    return float(-np.sum(smoothed[0] * smoothed[1]) * grid.cell)


STANDARD_SYMBOLS = ("Xi*I[Xi]", "I'[Xi]*I'[Xi]", "I'[Xi]*I'[Xi@X^(0,1)]")


@dataclass
class CharacterTable:
    """Numerical character values keyed by canonical tree."""

    values: dict = field(default_factory=dict)
    eps: float | None = None

    def __getitem__(self, sigma: Tree) -> float:
        try:
            return self.values[sigma]
        except KeyError:
            raise MissingCharacter(format_tree(sigma)) from None

    def __contains__(self, sigma) -> bool:
        return sigma in self.values

    def __call__(self, sigma: Tree) -> float:
        return self[sigma]

    def items(self):
        return self.values.items()

    @classmethod
    def compute(cls, grid: Grid, m: MollifierSpec, symbols=STANDARD_SYMBOLS, kernels=None) -> "CharacterTable":
        ks = build_kernels(grid) if kernels is None else kernels
        vals = {}
        for s in symbols:
            t = parse_tree(s) if isinstance(s, str) else s
            vals[t] = compute_character(t, grid, m, ks)
        return cls(vals, eps=m.eps)
