import networkx as nx
import pytest
from networkx.algorithms.isomorphism import categorical_multiedge_match, categorical_node_match

from bhzkit.graphs import (
    Edge,
    FeynmanGraph,
    GraphConstructionError,
    UnsupportedKernel,
    Vertex,
    Zero,
    canonical_form,
    mirror_graph,
    mirror_of_graphs,
    perfect_matchings,
    simplify_zero,
    swap_copies,
    to_dot,
    tree_to_graph,
    wick_expectation_graphs,
)
from bhzkit.powercount import find_divergent_subgraphs
from bhzkit.trees import Tree, parse_tree

T = parse_tree


def _nx(g):
    h = nx.MultiDiGraph()
    for v in g.vertices:
        h.add_node(v.id, kind=v.kind)
    for e in g.edges:
        h.add_edge(e.tail, e.head, kernel=e.kernel)
    return h


def _isomorphic(a, b):
    return nx.is_isomorphic(
        _nx(a), _nx(b), node_match=categorical_node_match("kind", None), edge_match=categorical_multiedge_match("kernel", None)
    )


DEEP = T("I'[Xi*I[I'[Xi]*I'[Xi]]]*I'[Xi]")


class TestTreeGraph:
    def test_xi_i_xi(self):
        g = tree_to_graph(T("Xi*I[Xi]"))
        assert len(g.non_green()) == 2 and len(g.greens()) == 1
        assert g.count("K") == 1 and g.count("Test") == 1

    def test_unit(self):
        g = tree_to_graph(Tree())
        assert len(g.vertices) == 2 and g.count("Test") == 1 and len(g.edges) == 1

    def test_edge_orientation_child_to_parent(self):
        g = tree_to_graph(T("Xi*I[Xi]"))
        (k,) = [e for e in g.edges if e.kernel == "K"]
        assert k.head == "v0" and k.tail == "v1"

    def test_polynomial_becomes_orange(self):
        g = tree_to_graph(T("Xi@X^(0,1)*I[Xi]"))
        (o,) = [e for e in g.edges if e.kernel == "Orange"]
        assert o.power == (0, 1) and o.head == "G"

    def test_unregistered_kernel(self):
        with pytest.raises(UnsupportedKernel):
            tree_to_graph(T("I_(1,0)[Xi]"))

    def test_first_mirror_example_shape(self):
        tau = T("Xi*I[Xi*I[I'[Xi]*I'[Xi]]]")
        base = tree_to_graph(tau)
        assert len(base.vertices) == 6 and base.count("K") == 2 and base.count("DK") == 2


class TestWick:
    @pytest.mark.parametrize("m,count", [(0, 1), (2, 1), (4, 3), (6, 15), (3, 0)])
    def test_double_factorial(self, m, count):
        assert len(perfect_matchings(list(range(m)))) == count

    def test_graph_counts(self):
        assert len(wick_expectation_graphs(tree_to_graph(T("Xi*I[Xi]")))) == 1
        assert len(wick_expectation_graphs(tree_to_graph(DEEP))) == 3
        assert wick_expectation_graphs(tree_to_graph(T("Xi*I[Xi]*I[Xi]")))  == []

    def test_self_paired_deep_noises_vanish(self):
        gs = wick_expectation_graphs(tree_to_graph(DEEP))
        zero = [g for g in gs if simplify_zero(g) is Zero]
        assert len(zero) == 1
        rho = {(e.tail, e.head) for e in zero[0].edges if e.kernel == "RhoRho"}
        assert ("v4", "v5") in rho

    def test_subdivergence_of_expectation(self):
        gs = [g for g in wick_expectation_graphs(tree_to_graph(DEEP)) if simplify_zero(g) is not Zero]
        for g in gs:
            div = find_divergent_subgraphs(g)
            assert len(div) == 1 and len(div[0]) == 3


class TestMirror:
    def test_xi_i_xi(self):
        g = mirror_graph(T("Xi*I[Xi]"))
        kinds = [v.kind for v in g.vertices]
        assert kinds.count("green") == 2 and kinds.count("dirac_pair") == 2
        assert g.count("Test") == 2 and g.count("K") == 2 and g.count("RhoRho") == 0

    def test_first_example_matches_drawing(self):
        g = mirror_graph(T("Xi*I[Xi*I[I'[Xi]*I'[Xi]]]"), pair_kind="noise", recenter=False)
        V = [Vertex("g1", "green"), Vertex("g2", "green"), Vertex("a", "internal"), Vertex("b", "internal")]
        V += [Vertex(f"p{i}", "noise_pair") for i in range(4)]
        E = [Edge("p0", "g1", "Test"), Edge("p0", "g2", "Test")]
        E += [Edge("p1", "p0", "K")] * 2 + [Edge("a", "p1", "K"), Edge("b", "p1", "K")]
        E += [Edge("p2", "a", "DK"), Edge("p3", "a", "DK"), Edge("p2", "b", "DK"), Edge("p3", "b", "DK")]
        want = FeynmanGraph(tuple(V), tuple(E))
        assert _isomorphic(g, want)

    def test_swap_symmetry(self, catalog):
        for tau in list(catalog)[:12]:
            g = mirror_graph(tau)
            assert canonical_form(swap_copies(g)) == canonical_form(g)

    def test_bad_slot_count(self):
        with pytest.raises(GraphConstructionError):
            mirror_graph(T("Xi*I[Xi]"), k=3)

    def test_odd_residual(self):
        with pytest.raises(GraphConstructionError):
            mirror_graph(T("Xi*I[Xi]"), k=1)

    def test_mismatched_slots(self):
        a = FeynmanGraph((Vertex("x", "hslot", "Xi1"),))
        b = FeynmanGraph((Vertex("y", "hslot", "Xi2"),))
        with pytest.raises(GraphConstructionError):
            mirror_of_graphs(a, b)

    def test_simplify_keeps_mirror(self):
        g = mirror_graph(T("Xi*I[Xi]"))
        assert simplify_zero(g) is g


class TestDot:
    def test_empty(self):
        assert to_dot(FeynmanGraph()).splitlines() == ["digraph G {", "}"]

    def test_mirror_counts(self):
        txt = to_dot(mirror_graph(T("Xi*I[Xi]")))
        assert txt.count("[shape") == 4
        assert txt.count("color=green];") == 2
        edges = [ln for ln in txt.splitlines() if "->" in ln]
        assert sum("[style=solid" in ln and "color" not in ln for ln in edges) == 2

    def test_deterministic(self):
        g = mirror_graph(T("I'[Xi]*I'[Xi*I[Xi]]"))
        assert to_dot(g) == to_dot(mirror_graph(T("I'[Xi]*I'[Xi*I[Xi]]")))
