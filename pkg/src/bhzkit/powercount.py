"""Condition (C) checks, scaling exponents, subdivergences and telescopic sums.

Both inequalities are evaluated on the graph obtained by contracting every
RhoRho edge (the ``eps -> 0`` limit of the mollifier pairing).  Subset scans
are exhaustive and vectorised over bit masks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb, factorial
from typing import Optional

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism as iso

from .graphs import (
    Edge,
    FeynmanGraph,
    Vertex,
    character_graph,
    derivative_of,
    kernel_for,
)
from .trees import snorm, multi_indices, vadd

KERNEL_EDGES = ("K", "DK", "DDK")


class UnsupportedGraph(ValueError):
    pass


@dataclass(frozen=True)
class DegreeTable:
    """Scaling degrees ``a_e`` per kernel.

    With ``relaxed`` set, singular kernels are counted with degree
    ``a_e + delta`` for an infinitesimal ``delta > 0``; this is legitimate
    because the kernels are supported in the unit ball, so their norms at a
    slightly larger degree are finite.  Comparisons are exact and
    lexicographic in ``(integer part, delta coefficient)``.
    """

    name: str
    degrees: dict
    relaxed: bool = True

    def slack(self, e: Edge) -> int:
        return int(self.relaxed and e.kernel in ("K", "DK", "DDK", "RhoRho"))

    def degree(self, e: Edge) -> int:
        if e.kernel == "Orange":
            return -snorm(e.power)
        try:
            return self.degrees[e.kernel]
        except KeyError:
            raise UnsupportedGraph(f"kernel {e.kernel!r} not in degree table {self.name}") from None


CALIBRATED = DegreeTable("calibrated", {"K": 1, "DK": 2, "DDK": 3, "RhoRho": 3, "Test": 0})
PRINTED = DegreeTable("printed", {"K": 1, "DK": -2, "DDK": -3, "RhoRho": -3, "Test": 0})
DEGREE_TABLES = {"calibrated": CALIBRATED, "printed": PRINTED}


@dataclass
class Violation:
    subset: tuple
    lhs: int
    rhs: int

    def __str__(self):
        return f"{{{', '.join(self.subset)}}}: {self.lhs} vs {self.rhs}"


@dataclass
class PowerCountReport:
    integrability_violations: list = field(default_factory=list)
    recentering_violations: list = field(default_factory=list)
    alpha: int = 0

    @property
    def passed(self) -> bool:
        return not self.integrability_violations and not self.recentering_violations


# --------------------------------------------------------------------------
# contraction of mollifier edges


def contract_pairs(g: FeynmanGraph):
    """Merge the endpoints of RhoRho edges; returns the graph and the member map."""
    parent = {v: v for v in g.ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in g.edges:
        if e.kernel == "RhoRho":
            a, b = find(e.tail), find(e.head)
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups = {}
    for v in g.ids:
        groups.setdefault(find(v), []).append(v)
    name = {}
    members = {}
    verts = []
    for rep, vs in groups.items():
        vs = sorted(vs)
        nid = "+".join(vs)
        members[nid] = tuple(vs)
        for v in vs:
            name[v] = nid
        kinds = {g.vertex(v).kind for v in vs}
        kind = "green" if "green" in kinds else g.vertex(vs[0]).kind
        verts.append(Vertex(nid, kind, g.vertex(vs[0]).noise))
    edges = []
    for e in g.edges:
        if e.kernel == "RhoRho":
            continue
        edges.append(replace(e, tail=name[e.tail], head=name[e.head], base=name.get(e.base) if e.base else None))
    verts.sort(key=lambda v: v.id)
    return FeynmanGraph(tuple(verts), tuple(edges), g.name), members


class _Masks:
    """Per-edge membership indicators over every vertex subset."""

    def __init__(self, g: FeynmanGraph, table: DegreeTable):
        self.g = g
        self.ids = [v.id for v in g.vertices]
        self.n = len(self.ids)
        if self.n > 22:
            raise UnsupportedGraph(f"too many vertices for exhaustive scan: {self.n}")
        idx = {v: i for i, v in enumerate(self.ids)}
        self.masks = np.arange(1 << self.n, dtype=np.int64)
        self.size = np.zeros(1 << self.n, dtype=np.int64)
        for i in range(self.n):
            self.size += (self.masks >> i) & 1
        green_bits = 0
        for v in g.vertices:
            if v.kind == "green":
                green_bits |= 1 << idx[v.id]
        self.has_green = (self.masks & green_bits) != 0
        self.edge_data = []
        for e in g.edges:
            a = table.degree(e)
            t = ((self.masks >> idx[e.tail]) & 1).astype(bool)
            h = ((self.masks >> idx[e.head]) & 1).astype(bool)
            b = ((self.masks >> idx[e.base]) & 1).astype(bool) if e.base is not None else np.zeros_like(t)
            self.edge_data.append((e, a, t, h, b, table.slack(e)))

    def names(self, m: int) -> tuple:
        return tuple(self.ids[i] for i in range(self.n) if (m >> i) & 1)


def _integrability_lhs(M: _Masks):
    lhs = np.zeros(len(M.masks), dtype=np.int64)
    slack = np.zeros(len(M.masks), dtype=np.int64)
    for e, a, t, h, b, d in M.edge_data:
        lhs += np.where(t & h, a, 0)
        slack += np.where(t & h, d, 0)
        if e.r > 0:
            lhs += np.where(t & ~h & b, a + e.r - 1, 0)
            slack += np.where(t & ~h & b, d, 0)
        lhs -= np.where(h & ~t & b, e.r, 0)
    return lhs, slack


def check_integrability(g: FeynmanGraph, table: DegreeTable = CALIBRATED, contract: bool = True) -> list:
    """Subsets ``V`` (``|V| >= 2``) violating the integrability inequality."""
    cg, members = contract_pairs(g) if contract else (g, {v: (v,) for v in g.ids})
    M = _Masks(cg, table)
    lhs, slack = _integrability_lhs(M)
    rhs = 3 * (M.size - 1)
    fail = (lhs > rhs) | ((lhs == rhs) & (slack >= 0))
    bad = np.nonzero((M.size >= 2) & fail)[0]
    return [Violation(_expand(M.names(int(m)), members), int(lhs[m]), int(rhs[m])) for m in bad]


def check_recentering(g: FeynmanGraph, table: DegreeTable = CALIBRATED, contract: bool = True) -> list:
    """Green-free subsets ``V`` violating the recentering inequality.

    A subset touching a Test edge is exempt: the test function has compact
    support, so large-scale integrability is automatic there.  Kernel degrees
    carry an infinitesimal slack (see :class:`DegreeTable`), which decides
    the borderline case of equality.
    """
    cg, members = contract_pairs(g) if contract else (g, {v: (v,) for v in g.ids})
    M = _Masks(cg, table)
    lhs = np.zeros(len(M.masks), dtype=np.int64)
    slack = np.zeros(len(M.masks), dtype=np.int64)
    exempt = np.zeros(len(M.masks), dtype=bool)
    for e, a, t, h, b, d in M.edge_data:
        if e.kernel == "Test":
            exempt |= t ^ h
            continue
        lhs += np.where(t & h, a, 0)
        slack += np.where(t & h, d, 0)
        incoming = h & ~t
        use = b | (e.r == 0)
        lhs += np.where(incoming, np.where(use, a + e.r - 1, 0) - (e.r - 1), 0)
        slack += np.where(incoming & use, d, 0)
        outgoing = t & ~h
        lhs += np.where(outgoing, a + np.where(~b, e.r, 0), 0)
        slack += np.where(outgoing, d, 0)
    rhs = 3 * M.size
    fail = (lhs < rhs) | ((lhs == rhs) & (slack <= 0))
    bad = np.nonzero((M.size >= 1) & ~M.has_green & ~exempt & fail)[0]
    return [Violation(_expand(M.names(int(m)), members), int(lhs[m]), int(rhs[m])) for m in bad]


def _expand(names, members) -> tuple:
    out = []
    for n in names:
        out.extend(members.get(n, (n,)))
    return tuple(sorted(out))


def scaling_exponent(g: FeynmanGraph, table: DegreeTable = CALIBRATED, resolved: bool = True) -> int:
    """``alpha = 3|V0| - sum a_e`` over non-green vertices and non-Test edges.

    The resolved convention subtracts 3 per green vertex (one per test
    function), which makes ``alpha`` the lambda-exponent of the graph integral.
    """
    v0 = len(g.non_green())
    raw = 3 * v0 - sum(table.degree(e) for e in g.edges if e.kernel != "Test")
    if resolved:
        raw -= 3 * len(g.greens())
    return raw


def power_count(g: FeynmanGraph, table: DegreeTable = CALIBRATED) -> PowerCountReport:
    return PowerCountReport(
        check_integrability(g, table), check_recentering(g, table), scaling_exponent(g, table)
    )


def find_divergent_subgraphs(g: FeynmanGraph, table: DegreeTable = CALIBRATED) -> list:
    """Inclusion-minimal vertex subsets violating integrability."""
    subsets = sorted({frozenset(v.subset) for v in check_integrability(g, table)}, key=lambda s: (len(s), sorted(s)))
    minimal = []
    for s in subsets:
        if not any(m <= s for m in minimal):
            minimal.append(s)
    return [tuple(sorted(s)) for s in minimal]


# --------------------------------------------------------------------------
# graphs from the telescopic-sum discussion


def graph_one_incoming() -> FeynmanGraph:
    """Divergent pair ``I'(Xi)^2`` at ``y`` with one incoming K edge from the deeper noise."""
    V = [
        Vertex("G1", "green"),
        Vertex("G2", "green"),
        Vertex("y"),
        Vertex("z1", noise="Xi"),
        Vertex("z2", noise="Xi"),
        Vertex("w", noise="Xi"),
        Vertex("u", noise="Xi"),
    ]
    E = [
        Edge("y", "G1", "Test"),
        Edge("z1", "y", "DK"),
        Edge("z2", "y", "DK"),
        Edge("z1", "z2", "RhoRho"),
        Edge("w", "z2", "K"),
        Edge("w", "u", "RhoRho"),
        Edge("u", "G2", "K"),
    ]
    return FeynmanGraph(tuple(V), tuple(E), "one-incoming")


def graph_two_incoming() -> FeynmanGraph:
    """Divergent pair ``I'(Xi)^2`` at ``y`` with two incoming K edges from slots."""
    V = [
        Vertex("G1", "green"),
        Vertex("y"),
        Vertex("z1", noise="Xi"),
        Vertex("z2", noise="Xi"),
        Vertex("h1", "hslot", "Xi1"),
        Vertex("h2", "hslot", "Xi2"),
    ]
    E = [
        Edge("y", "G1", "Test"),
        Edge("z1", "y", "DK"),
        Edge("z2", "y", "DK"),
        Edge("z1", "z2", "RhoRho"),
        Edge("h1", "z1", "K"),
        Edge("h2", "z2", "K"),
    ]
    return FeynmanGraph(tuple(V), tuple(E), "two-incoming")


# --------------------------------------------------------------------------
# telescopic sums


@dataclass
class TelescopeTerm:
    graph: FeynmanGraph
    tag: str
    coefficient: float = 1.0
    zero_if_symmetric: bool = False
    cancels: bool = False
    symbols: list = field(default_factory=list)


def _subgraph_root(g: FeynmanGraph, S: set) -> str:
    roots = [v for v in sorted(S) if not any(e.tail == v and e.head in S and e.kernel in KERNEL_EDGES for e in g.edges)]
    roots = [v for v in roots if any(e.head == v and e.tail in S and e.kernel in KERNEL_EDGES for e in g.edges)] or roots
    if len(roots) != 1:
        raise UnsupportedGraph(f"divergent subset {sorted(S)} has no unique root: {roots}")
    return roots[0]


def divergence_degree(g: FeynmanGraph, S, table: DegreeTable = CALIBRATED) -> int:
    """``omega(S) = sum_int a - 3(|S| - 1)`` on the pair-contracted induced subgraph."""
    S = set(S)
    sub = FeynmanGraph(
        tuple(v for v in g.vertices if v.id in S),
        tuple(e for e in g.edges if e.tail in S and e.head in S),
    )
    cg, _ = contract_pairs(sub)
    return sum(table.degree(e) for e in cg.edges) - 3 * (len(cg.vertices) - 1)


def _taylor_step(edges: list, idx: int, target: str, order: int):
    """Split edge ``idx`` into a Taylor remainder of the given order based at
    ``target`` plus the re-attached Taylor terms ``|j|_s < order``.

    Yields ``(edges, coefficient, is_remainder, degree_used)``.
    """
    e = edges[idx]
    out = [(edges[:idx] + [replace(e, r=order, base=target)] + edges[idx + 1:], 1.0, True, 0)]
    a = derivative_of(e.kernel)
    for j in multi_indices(order - 1):
        kern = kernel_for(vadd(a, j))
        moved = Edge(e.tail, target, kern)
        new = edges[:idx] + [moved] + edges[idx + 1:]
        coef = 1.0
        if j != (0, 0):
            new.append(Edge(e.head, target, "Orange", power=j))
            coef = 1.0 / _fact(j)
        out.append((new, coef, False, snorm(j)))
    return out


def _fact(j) -> float:
    return float(factorial(j[0]) * factorial(j[1]))


def telescope_renormalize(g: FeynmanGraph, divergent, table: DegreeTable = CALIBRATED, candidates=None) -> list:
    """Rewrite the incoming edges of a divergent subset by telescopic sums.

    Each incoming kernel edge is replaced by a Taylor remainder of order
    ``omega + 1`` based at its target plus re-attached terms; when two edges
    come in at different vertices the first is moved onto the head of the
    second before both are moved to the subgraph root.  Terms where every
    incoming edge sits at the root are compared with character diagrams.
    """
    S = set(divergent)
    s = _subgraph_root(g, S)
    r = divergence_degree(g, S, table) + 1
    edges = list(g.edges)
    incoming = [i for i, e in enumerate(edges) if e.kernel in KERNEL_EDGES and e.head in S and e.tail not in S]
    if len(incoming) > 2:
        raise UnsupportedGraph("more than two incoming edges on a divergent subgraph")
    # Taylor orders are shared across the incoming edges: a term that has
    # already used degree ``d`` of expansion only expands to order ``r - d``.
    work = [(edges, 1.0, False, 0)]
    done = []
    while work:
        es, coef, rem, used = work.pop(0)
        pending = [i for i in incoming if es[i].head != s]
        if rem or not pending:
            done.append((es, coef, rem))
            continue
        i = pending[0]
        others = [j for j in incoming if j != i and es[j].head not in (s, es[i].head)]
        target = es[others[0]].head if others else s
        for new, c, is_rem, d in _taylor_step(es, i, target, r - used):
            work.append((new, coef * c, is_rem, used + d))
    cands = _character_candidates() if candidates is None else candidates
    out = []
    for es, coef, rem in done:
        h = g.with_edges(es)
        if rem:
            out.append(TelescopeTerm(h, "remainder", coef))
            continue
        out.append(_classify_detached(h, S, s, coef, table, cands))
    return out


def _factor(g: FeynmanGraph, S: set) -> FeynmanGraph:
    return FeynmanGraph(
        tuple(v for v in g.vertices if v.id in S),
        tuple(e for e in g.edges if e.tail in S and e.head in S),
    )


def _orange_decompose(f: FeynmanGraph, s: str) -> list:
    """Write every orange factor as polynomials in ``z_v - z_s``; returns (sign*coef, graph)."""
    base = [e for e in f.edges if e.kernel != "Orange"]
    terms = [(1.0, base)]
    for e in f.edges:
        if e.kernel != "Orange":
            continue
        if e.power[0] != 0:
            raise UnsupportedGraph("time-direction orange factors are not decomposed")
        n = e.power[1]
        new_terms = []
        for c, es in terms:
            for a in range(n + 1):
                cc = c * comb(n, a) * (-1) ** (n - a)
                extra = []
                if a and e.tail != s:
                    extra.append(Edge(e.tail, s, "Orange", power=(0, a)))
                elif a and e.tail == s:
                    continue
                if n - a and e.head != s:
                    extra.append(Edge(e.head, s, "Orange", power=(0, n - a)))
                elif n - a and e.head == s:
                    continue
                new_terms.append((cc, es + extra))
        terms = new_terms
    return [(c, f.with_edges(_merge_oranges(es))) for c, es in terms]


def _merge_oranges(edges: list) -> list:
    out, powers = [], {}
    for e in edges:
        if e.kernel == "Orange":
            key = (e.tail, e.head)
            powers[key] = vadd(powers.get(key, (0, 0)), e.power)
        else:
            out.append(e)
    for (t, h), p in sorted(powers.items()):
        out.append(Edge(t, h, "Orange", power=p))
    return out


def _to_nx(f: FeynmanGraph, root: str):
    G = nx.MultiDiGraph()
    for v in f.vertices:
        G.add_node(v.id, label="root" if v.id == root else f"{v.kind}:{v.noise or ''}")
    for e in f.edges:
        G.add_edge(e.tail, e.head, kernel=e.kernel, power=e.power)
        if e.kernel == "RhoRho":
            G.add_edge(e.head, e.tail, kernel=e.kernel, power=e.power)
    return G


def graphs_isomorphic(f1: FeynmanGraph, r1: str, f2: FeynmanGraph, r2: str) -> bool:
    nm = iso.categorical_node_match("label", None)
    em = iso.categorical_multiedge_match(["kernel", "power"], [None, None])
    return nx.is_isomorphic(_to_nx(f1, r1), _to_nx(f2, r2), node_match=nm, edge_match=em)


_CANDIDATE_CACHE = []


def _character_candidates() -> list:
    """Character diagrams of every retained symbol of the catalog (all pairings)."""
    if _CANDIDATE_CACHE:
        return _CANDIDATE_CACHE
    from .graphs import perfect_matchings, tree_to_graph
    from .hopf import character_vanishes
    from .rules import enumerate_negative
    from .trees import format_tree, noise_count

    for t in enumerate_negative():
        if character_vanishes(t).vanishes:
            continue
        n = noise_count(t)
        for i in range(len(perfect_matchings(list(range(n))))):
            _CANDIDATE_CACHE.append((format_tree(t), character_graph(t, i)))
    return _CANDIDATE_CACHE


def _classify_detached(h: FeynmanGraph, S: set, s: str, coef: float, table, cands) -> TelescopeTerm:
    f = _factor(h, S)
    omega = divergence_degree(h, S, table)
    has_orange = any(e.kernel == "Orange" for e in f.edges)
    if omega < 0:
        return TelescopeTerm(h, "detached", coef)
    pieces = _orange_decompose(f, s)
    symbols = []
    matched = []
    for c, piece in pieces:
        hit = next((name for name, cg in cands if graphs_isomorphic(piece, s, cg, "s")), None)
        if hit is None:
            return TelescopeTerm(h, "detached", coef)
        symbols.append((c, hit))
        matched.append((c, piece))
    cancels = False
    if len(matched) == 2 and matched[0][0] == -matched[1][0]:
        cancels = graphs_isomorphic(matched[0][1], s, matched[1][1], s)
    return TelescopeTerm(h, "counterterm", coef, zero_if_symmetric=has_orange, cancels=cancels, symbols=symbols)
