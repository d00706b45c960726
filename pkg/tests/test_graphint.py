import numpy as np
import pytest
from scipy.stats import linregress

from bhzkit.graphs import Edge, FeynmanGraph, Vertex, mirror_graph
from bhzkit.numerics.graphint import GraphSizeError, UnsupportedGraph, graph_integral
from bhzkit.numerics.grid import WINDOW, Grid
from bhzkit.numerics.kernels import build_kernels
from bhzkit.powercount import scaling_exponent
from bhzkit.trees import parse_tree

LAMS = [1 / 2, 1 / 4, 1 / 8, 1 / 16]


@pytest.fixture(scope="module")
def grid():
    return Grid.for_scales(256, 1 / 8192, WINDOW)


def _slope(vals):
    return linregress(np.log(LAMS), np.log(np.abs(vals))).slope


def test_test_only_graph(grid):
    g = FeynmanGraph((Vertex("G", "green"), Vertex("v")), (Edge("v", "G", "Test"), Edge("v", "G", "Test")))
    vals = [graph_integral(g, lam, grid) for lam in LAMS]
    assert _slope(vals) == pytest.approx(-3, abs=0.02)


def test_mirror_calibration(grid):
    """The convention-resolved exponent matches the measured lambda-slope."""
    g = mirror_graph(parse_tree("Xi*I[Xi]"))
    ks = build_kernels(grid)
    vals = [graph_integral(g, lam, grid, kernels=ks) for lam in LAMS]
    assert _slope(vals) == pytest.approx(scaling_exponent(g), abs=0.25)


def test_single_kernel_edge(grid):
    """int K(z) dz = 0 (null mean) for a free vertex hanging by one K edge."""
    g = FeynmanGraph(
        (Vertex("G", "green"), Vertex("a"), Vertex("b")),
        (Edge("a", "G", "Test"), Edge("b", "a", "K")),
    )
    assert abs(graph_integral(g, 0.5, grid)) < 1e-8


def test_cycle_rejected(grid):
    V = (Vertex("G", "green"), Vertex("a"), Vertex("b"), Vertex("c"))
    E = (Edge("a", "G", "Test"), Edge("b", "a", "K"), Edge("c", "b", "K"), Edge("a", "c", "K"))
    with pytest.raises(UnsupportedGraph):
        graph_integral(FeynmanGraph(V, E), 0.5, grid)


def test_size_limit(grid):
    g = mirror_graph(parse_tree("Xi*I[Xi*I[Xi*I[Xi]]]"))
    with pytest.raises(GraphSizeError):
        graph_integral(g, 0.5, grid, max_free=2)


def test_rhorho_needs_mollifier(grid):
    g = FeynmanGraph((Vertex("G", "green"), Vertex("a"), Vertex("b")), (Edge("a", "G", "Test"), Edge("a", "b", "RhoRho")))
    with pytest.raises(UnsupportedGraph):
        graph_integral(g, 0.5, grid)
