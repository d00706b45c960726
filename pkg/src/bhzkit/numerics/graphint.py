"""Deterministic quadrature of Feynman graph integrals on the grid."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.fft import irfft2, rfft2

from ..graphs import FeynmanGraph
from .grid import Grid, MollifierSpec, TestFunctionSpec
from .kernels import KernelSet, build_kernels
from .noise import noise_covariance, reflect

_DERIVATIVE = {"K": "DK", "DK": "DDK"}


class GraphSizeError(ValueError):
    pass


class UnsupportedGraph(ValueError):
    pass


@dataclass
class _Factor:
    tail: str
    head: str
    values: np.ndarray  # function of z_head - z_tail on the lag grid


class _Tables:
    def __init__(self, grid: Grid, lam: float, ks: KernelSet, mollifier):
        self.grid, self.lam, self.ks, self.mollifier = grid, lam, ks, mollifier
        self._cache = {}

    def kernel(self, name: str) -> np.ndarray:
        if name in self._cache:
            return self._cache[name]
        g = self.grid
        if name in ("K", "DK", "DDK"):
            val = self.ks[name]
        elif name == "Test":
            val = TestFunctionSpec(self.lam, (0, 0)).values(g)
        elif name == "RhoRho":
            if self.mollifier is None:
                raise UnsupportedGraph("RhoRho edges need a mollifier")
            val = noise_covariance(g, self.mollifier)
        else:
            raise UnsupportedGraph(f"kernel {name} has no numerical table")
        self._cache[name] = val
        return val

    def monomial(self, k, sign: int = 1) -> np.ndarray:
        """``(sign d)^k / k!`` with ``d`` the signed lag."""
        from math import factorial

        t = self.grid.t_lags.reshape(-1, 1) * sign
        x = self.grid.x_lags.reshape(1, -1) * sign
        return (t ** k[0] * x ** k[1] / (factorial(k[0]) * factorial(k[1]))) * np.ones(self.grid.shape)


def _expand_edge(e, tables: _Tables):
    """Terms ``(coef, [factors])`` of one edge, Taylor remainders expanded."""
    if e.kernel == "Orange":
        from math import factorial

        k = e.power
        scale = factorial(k[0]) * factorial(k[1])
        return [(1.0, [_Factor(e.tail, e.head, tables.monomial(k, sign=-1) * scale)])]
    base_val = tables.kernel(e.kernel)
    terms = [(1.0, [_Factor(e.tail, e.head, base_val)])]
    if e.r <= 0 or e.base is None:
        return terms
    # subtract sum_{|j| < r} (z_head - z_base)^j / j! d^j k(z_base - z_tail)
    name = e.kernel
    for j in ((0, 0), (0, 1)):
        if j[1] + 2 * j[0] >= e.r:
            continue
        kname = name if j == (0, 0) else _DERIVATIVE.get(name)
        if kname is None:
            raise UnsupportedGraph(f"Taylor jet of {name} at order {j} not tabulated")
        fs = [_Factor(e.tail, e.base, tables.kernel(kname))]
        if j != (0, 0):
            fs.append(_Factor(e.base, e.head, tables.monomial(j)))
        terms.append((-1.0, fs))
    return terms


def _conv(f: np.ndarray, w: np.ndarray, grid: Grid) -> np.ndarray:
    return irfft2(rfft2(f) * rfft2(w), s=grid.shape) * grid.cell


def _evaluate_term(factors, free: list, greens: set, grid: Grid) -> float:
    const = 1.0
    weight = {v: np.ones(grid.shape) for v in free}
    pair = {}
    for f in factors:
        tg, hg = f.tail in greens, f.head in greens
        if tg and hg:
            const *= f.values[0, 0]
        elif hg:
            weight[f.tail] = weight[f.tail] * reflect(f.values)
        elif tg:
            weight[f.head] = weight[f.head] * f.values
        else:
            if f.tail == f.head:
                const *= f.values[0, 0]
                continue
            u, v = sorted((f.tail, f.head))
            # store as a function of z_u - z_v
            vals = f.values if f.head == u else reflect(f.values)
            pair[(u, v)] = pair[(u, v)] * vals if (u, v) in pair else vals
    G = nx.Graph()
    G.add_nodes_from(free)
    G.add_edges_from(pair)
    if not nx.is_forest(G):
        raise UnsupportedGraph("graph integral with a cycle among free vertices")
    total = const
    for comp in nx.connected_components(G):
        root = min(comp)
        tree = nx.bfs_tree(G.subgraph(comp), root)

        def message(v):
            w = weight[v]
            for c in tree.successors(v):
                key = (v, c) if (v, c) in pair else (c, v)
                F = pair[key] if key == (v, c) else reflect(pair[key])  # function of z_v - z_c
                w = w * _conv(F, message(c), grid)
            return w

        total *= float(np.sum(message(root)) * grid.cell)
    return total


def graph_integral(
    g: FeynmanGraph,
    lam: float,
    grid: Grid,
    mollifier: MollifierSpec | None = None,
    kernels: KernelSet | None = None,
    max_free: int = 4,
) -> float:
    """``int prod_e L_e`` over the non-green vertices, greens fixed at the origin.

    Taylor-decorated edges are expanded into their terms and every term is
    evaluated by FFT message passing over the forest left once the greens are
    removed.  Test edges carry ``phi^lam``, orange edges the monomial
    ``(z_tail - z_head)^k``, RhoRho edges the mollified noise covariance.
    """
    greens = set(g.greens())
    free = sorted(v.id for v in g.vertices if v.id not in greens)
    if len(free) > max_free:
        raise GraphSizeError(f"{len(free)} free vertices exceed the limit {max_free}")
    ks = build_kernels(grid) if kernels is None else kernels
    tables = _Tables(grid, lam, ks, mollifier)
    expanded = [[(1.0, [])]]
    for e in g.edges:
        expanded.append(_expand_edge(e, tables))
    terms = [(1.0, [])]
    for opts in expanded[1:]:
        terms = [(c1 * c2, f1 + f2) for c1, f1 in terms for c2, f2 in opts]
    return float(sum(c * _evaluate_term(fs, free, greens, grid) for c, fs in terms))
