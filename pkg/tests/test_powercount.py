from bhzkit.graphs import Edge, FeynmanGraph, Vertex, mirror_graph
from bhzkit.powercount import (
    CALIBRATED,
    PRINTED,
    check_integrability,
    check_recentering,
    contract_pairs,
    divergence_degree,
    find_divergent_subgraphs,
    graph_one_incoming,
    graph_two_incoming,
    power_count,
    scaling_exponent,
    telescope_renormalize,
)
from bhzkit.trees import homogeneity, parse_tree
from bhzkit.verify import check_condition_c, check_telescoping

T = parse_tree


def _internal(*ids):
    return tuple(Vertex(i) for i in ids)


class TestIntegrability:
    def test_mirrors_clean(self, catalog):
        for tau in catalog:
            assert check_integrability(mirror_graph(tau)) == []

    def test_single_edge(self):
        g = FeynmanGraph(_internal("a", "b"), (Edge("a", "b", "K"),))
        assert check_integrability(g) == []

    def test_two_incoming_pair(self):
        g = graph_two_incoming()
        bad = check_integrability(g)
        assert bad
        subsets = {frozenset(v.subset) for v in bad}
        assert frozenset({"y", "z1", "z2"}) in subsets
        S = {"y", "z1", "z2"}
        sub = FeynmanGraph(
            tuple(v for v in g.vertices if v.id in S), tuple(e for e in g.edges if e.tail in S and e.head in S)
        )
        cg, members = contract_pairs(sub)
        assert len(cg.vertices) == 2
        assert ("z1", "z2") in members.values()


class TestRecentering:
    def test_mirrors_clean(self, catalog):
        for tau in catalog:
            assert check_recentering(mirror_graph(tau)) == []

    def test_stripped_mirror_fails(self):
        assert check_recentering(mirror_graph(T("Xi*I[Xi]"), recenter=False))

    def test_vacuous(self):
        g = FeynmanGraph((Vertex("G", "green"),))
        assert check_recentering(g) == []


class TestExponent:
    def test_two_k_edges(self):
        g = FeynmanGraph(_internal("a", "b"), (Edge("a", "b", "K"), Edge("b", "a", "K")))
        assert scaling_exponent(g, resolved=False) == 4

    def test_edgeless(self):
        g = FeynmanGraph(_internal("a", "b", "c"))
        assert scaling_exponent(g, resolved=False) == 9

    def test_affine_law(self, catalog):
        for tau in catalog:
            assert power_count(mirror_graph(tau)).alpha == 2 * homogeneity(tau).p

    def test_battery_both_tables(self, catalog):
        assert check_condition_c(catalog, CALIBRATED).passed
        assert not check_condition_c(catalog, PRINTED).passed


class TestSubdivergences:
    def test_mirrors_have_none(self, catalog):
        for tau in catalog:
            assert find_divergent_subgraphs(mirror_graph(tau)) == []

    def test_two_incoming_single_minimal(self):
        assert find_divergent_subgraphs(graph_two_incoming()) == [("y", "z1", "z2")]

    def test_degree(self):
        assert divergence_degree(graph_one_incoming(), ("y", "z1", "z2")) == 1


class TestTelescope:
    def test_one_incoming(self):
        g = graph_one_incoming()
        terms = telescope_renormalize(g, find_divergent_subgraphs(g)[0])
        assert len(terms) == 3
        rem = [t for t in terms if t.tag == "remainder"]
        assert len(rem) == 1
        assert any(e.r == 2 and e.base == "y" for e in rem[0].graph.edges)
        syms = sorted(s for t in terms if t.tag == "counterterm" for _, s in t.symbols)
        assert syms == ["I'[Xi]*I'[Xi@X^(0,1)]", "I'[Xi]*I'[Xi]"]

    def test_two_incoming_first_step(self):
        g = graph_two_incoming()
        terms = telescope_renormalize(g, find_divergent_subgraphs(g)[0])
        first = terms[0]
        assert first.tag == "remainder"
        assert any(e.r == 2 and e.base == "z2" for e in first.graph.edges)

    def test_outputs_integrable(self):
        res = check_telescoping()
        assert res.passed, res.failures
        assert res.checked >= 10
