"""Tree-like Feynman graphs, Wick pairings, mirror graphs and DOT export.

Edges are directed ``tail -> head`` where, for a tree edge ``I_a``, the tail is
the child node and the head is the parent node, so the edge represents
``d^a K(z_head - z_tail)``.  A Taylor decoration ``(base, r)`` subtracts the
Taylor polynomial of order ``< r`` in the head variable around ``z_base``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .trees import (
    DOT,
    ZERO2,
    Homogeneity,
    Tree,
    homogeneity,
    planted,
    snorm,
    xi_count,
)

VERTEX_KINDS = ("green", "internal", "noise_pair", "dirac_pair", "hslot")
KERNEL_FOR_EDGE = {(0, 0): "K", (0, 1): "DK", (0, 2): "DDK"}
EDGE_FOR_KERNEL = {v: k for k, v in KERNEL_FOR_EDGE.items()}
KERNELS = ("K", "DK", "DDK", "RhoRho", "Test", "Orange")


class UnsupportedKernel(ValueError):
    pass


class GraphConstructionError(ValueError):
    pass


def kernel_for(a) -> str:
    try:
        return KERNEL_FOR_EDGE[tuple(a)]
    except KeyError:
        raise UnsupportedKernel(f"no kernel registered for edge decoration {tuple(a)}") from None


def derivative_of(kernel: str):
    return EDGE_FOR_KERNEL[kernel]


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str = "internal"
    noise: Optional[str] = None
    copy: Optional[str] = None


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    kernel: str
    r: int = 0
    base: Optional[str] = None
    power: tuple = ZERO2

    def other(self, v: str) -> str:
        return self.head if v == self.tail else self.tail


@dataclass(frozen=True)
class FeynmanGraph:
    vertices: tuple = ()
    edges: tuple = ()
    name: str = ""

    def vertex(self, vid: str) -> Vertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)

    @property
    def ids(self) -> list:
        return [v.id for v in self.vertices]

    def greens(self) -> list:
        return [v.id for v in self.vertices if v.kind == "green"]

    def non_green(self) -> list:
        return [v.id for v in self.vertices if v.kind != "green"]

    def count(self, kernel: str) -> int:
        return sum(1 for e in self.edges if e.kernel == kernel)

    def degree(self, vid: str) -> int:
        return sum((e.tail == vid) + (e.head == vid) for e in self.edges)

    def with_edges(self, edges, name=None) -> "FeynmanGraph":
        return FeynmanGraph(self.vertices, tuple(edges), self.name if name is None else name)

    def relabel(self, mapping: dict) -> "FeynmanGraph":
        f = lambda x: mapping.get(x, x) if x is not None else None
        verts = tuple(replace(v, id=f(v.id)) for v in self.vertices)
        edges = tuple(replace(e, tail=f(e.tail), head=f(e.head), base=f(e.base)) for e in self.edges)
        return FeynmanGraph(verts, edges, self.name)

    def xi_vertices(self) -> list:
        return [v.id for v in self.vertices if v.noise == "Xi" and v.kind == "internal"]


class _Zero:
    """The null graph value returned by :func:`simplify_zero`."""

    def __repr__(self):
        return "Zero"

    def __bool__(self):
        return False


Zero = _Zero()


# --------------------------------------------------------------------------
# construction from trees


def recenter_order(h: Homogeneity) -> int:
    """Smallest integer strictly above ``h`` (0 if ``h`` is negative), capped at 2."""
    if h.is_negative():
        return 0
    n = int(h.p)
    while not Homogeneity(n, 0) > h:
        n += 1
    return min(max(n, 0), 2)


def tree_to_graph(
    tau: Tree,
    prefix: str = "",
    green: str = "G",
    anchor: str = "green",
    recenter: bool = False,
    plus_mode: bool = True,
    with_green: bool = True,
) -> FeynmanGraph:
    """Graph of ``<Pi tau, phi>``: one vertex per node plus a green vertex.

    Polynomial decorations become orange edges from the node to the anchor
    (the green vertex, or the tree root when ``anchor="root"``).  With
    ``recenter`` every edge ``I_a(sigma)`` gets base point the green vertex
    and Taylor order :func:`recenter_order` of ``|I_a sigma|``.
    """
    verts, edges = [], []
    counter = [0]
    if with_green:
        verts.append(Vertex(green, "green", copy=prefix or None))

    def visit(t: Tree, parent_id, edge_dec):
        vid = f"{prefix}v{counter[0]}"
        counter[0] += 1
        kind = "hslot" if t.noise not in (None, "Xi") else "internal"
        verts.append(Vertex(vid, kind, t.noise, copy=prefix or None))
        if parent_id is not None:
            kern = kernel_for(edge_dec)
            r, base = 0, None
            if recenter and with_green:
                r = recenter_order(homogeneity(planted(edge_dec, t), plus_mode))
                base = green if r > 0 else None
            edges.append(Edge(vid, parent_id, kern, r, base))
        if t.poly != ZERO2:
            target = green if anchor == "green" else root_id[0]
            edges.append(Edge(vid, target, "Orange", power=t.poly))
        return vid

    root_id = [f"{prefix}v0"]

    def walk(t: Tree, parent_id=None, edge_dec=None):
        vid = visit(t, parent_id, edge_dec)
        for e, c in t.children:
            walk(c, vid, e)
        return vid

    root = walk(tau)
    if with_green:
        edges.insert(0, Edge(root, green, "Test"))
    return FeynmanGraph(tuple(verts), tuple(edges), name=str(tau))


def character_graph(sigma: Tree, matching=None) -> FeynmanGraph:
    """Diagram of ``E[(Pi sigma)(y)]`` with the root fixed at ``y``.

    The root vertex has kind ``green``-free marker ``internal`` and id ``s``;
    orange factors are anchored at the root.
    """
    g = tree_to_graph(sigma, prefix="c", anchor="root", with_green=False)
    graphs = wick_expectation_graphs(g)
    if not graphs:
        raise GraphConstructionError("odd number of noises: no pairing")
    g = graphs[0 if matching is None else matching]
    return g.relabel({"cv0": "s"})


# --------------------------------------------------------------------------
# pairings


def perfect_matchings(items: list) -> list:
    """All perfect matchings of ``items`` in a deterministic order."""
    items = list(items)
    if not items:
        return [[]]
    if len(items) % 2:
        return []
    first, rest = items[0], items[1:]
    out = []
    for i, other in enumerate(rest):
        for m in perfect_matchings(rest[:i] + rest[i + 1:]):
            out.append([(first, other)] + m)
    return out


def wick_expectation_graphs(g: FeynmanGraph) -> list:
    """One graph per perfect matching of the ``Xi`` vertices, pairs joined by RhoRho edges."""
    xs = g.xi_vertices()
    out = []
    for m in perfect_matchings(xs):
        extra = [Edge(a, b, "RhoRho") for a, b in m]
        out.append(g.with_edges(g.edges + tuple(extra)))
    return out


def _xi_order(g: FeynmanGraph) -> list:
    return [v.id for v in g.vertices if v.noise == "Xi"]


def mirror_graph(
    tau: Tree,
    k: Optional[int] = None,
    matching: Optional[list] = None,
    pair_kind: str = "dirac",
    recenter: bool = True,
) -> FeynmanGraph:
    """Mirror graph of ``tau`` with ``k`` derivative slots.

    The first ``k`` noises (pre-order) become slots ``Xi_1..Xi_k`` in both
    copies; the remaining noises are paired inside each copy by ``matching``
    (indices into the list of remaining noises, default the first matching).
    Slot ``j`` of copy A is identified with slot ``j`` of copy B.
    """
    m = xi_count(tau)
    k = m if k is None else k
    if not 0 <= k <= m:
        raise GraphConstructionError(f"k={k} outside 0..{m}")
    base = tree_to_graph(tau)
    order = _xi_order(base)
    slots = {vid: f"Xi{j + 1}" for j, vid in enumerate(order[:k])}
    rest = order[k:]
    matchings = perfect_matchings(list(range(len(rest))))
    if not matchings:
        raise GraphConstructionError("residual noises cannot be paired")
    pairs = matchings[0] if matching is None else matching
    copies = []
    for tag in ("A", "B"):
        g = tree_to_graph(tau, prefix=f"{tag}:", green=f"G{tag}", recenter=recenter, plus_mode=True)
        ren = {}
        verts = []
        for v in g.vertices:
            local = v.id.split(":", 1)[1] if ":" in v.id else v.id
            if local in slots:
                verts.append(replace(v, kind="hslot", noise=slots[local]))
            else:
                verts.append(v)
        extra = [Edge(f"{tag}:{rest[i]}", f"{tag}:{rest[j]}", "RhoRho") for i, j in pairs]
        copies.append(FeynmanGraph(tuple(verts), g.edges + tuple(extra)))
    return mirror_of_graphs(copies[0], copies[1], pair_kind)


def mirror_of_graphs(ga: FeynmanGraph, gb: FeynmanGraph, pair_kind: str = "dirac") -> FeynmanGraph:
    """Identify equal-labelled slot vertices of two graphs into pair vertices."""
    sa = {v.noise: v.id for v in ga.vertices if v.kind == "hslot"}
    sb = {v.noise: v.id for v in gb.vertices if v.kind == "hslot"}
    if set(sa) != set(sb):
        raise GraphConstructionError(f"slot sets differ: {sorted(sa)} vs {sorted(sb)}")
    kind = {"dirac": "dirac_pair", "noise": "noise_pair"}[pair_kind]
    mapping = {}
    pair_verts = []
    for label in sorted(sa):
        pid = f"P{label[2:]}"
        mapping[sa[label]] = pid
        mapping[sb[label]] = pid
        pair_verts.append(Vertex(pid, kind, label))
    verts = [v for v in ga.vertices + gb.vertices if v.id not in mapping]
    a2, b2 = ga.relabel(mapping), gb.relabel(mapping)
    return FeynmanGraph(tuple(verts + pair_verts), a2.edges + b2.edges, name=f"mirror({ga.name})")


def swap_copies(g: FeynmanGraph) -> FeynmanGraph:
    mapping = {}
    for v in g.vertices:
        if v.id.startswith("A:"):
            mapping[v.id] = "B:" + v.id[2:]
        elif v.id.startswith("B:"):
            mapping[v.id] = "A:" + v.id[2:]
    mapping.update({"GA": "GB", "GB": "GA"})
    h = g.relabel(mapping)
    return FeynmanGraph(tuple(sorted(h.vertices, key=lambda v: v.id)), h.edges, h.name)


def canonical_form(g: FeynmanGraph):
    """Hashable form insensitive to vertex and edge ordering (labels kept)."""
    vs = tuple(sorted((v.id, v.kind, v.noise or "") for v in g.vertices))
    es = []
    for e in g.edges:
        t, h = (e.tail, e.head)
        if e.kernel == "RhoRho":
            t, h = sorted((t, h))
        es.append((t, h, e.kernel, e.r, e.base or "", e.power))
    return vs, tuple(sorted(es))


# --------------------------------------------------------------------------
# zero detection


def _components_without(g: FeynmanGraph, removed: Edge) -> list:
    adj = {v: set() for v in g.ids}
    for e in g.edges:
        if e is removed:
            continue
        adj[e.tail].add(e.head)
        adj[e.head].add(e.tail)
    seen, comps = set(), []
    for v in g.ids:
        if v in seen:
            continue
        stack, comp = [v], set()
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x] - comp)
        seen |= comp
        comps.append(comp)
    return comps


def _closed(g: FeynmanGraph, comp: set) -> bool:
    for vid in comp:
        v = g.vertex(vid)
        if v.kind in ("green", "hslot"):
            return False
    paired = set()
    for e in g.edges:
        if e.kernel == "RhoRho" and e.tail in comp and e.head in comp:
            paired |= {e.tail, e.head}
        if e.base is not None and (e.tail in comp or e.head in comp) and e.base not in comp:
            return False
    for vid in comp:
        if g.vertex(vid).noise == "Xi" and vid not in paired:
            return False
    return True


def simplify_zero(g: FeynmanGraph):
    """Return :data:`Zero` when a closed component hangs from the rest of the
    graph by a single null-mean kernel edge; otherwise return ``g``."""
    for e in g.edges:
        if e.kernel not in ("K", "DK", "DDK"):
            continue
        comps = _components_without(g, e)
        ct = next(c for c in comps if e.tail in c)
        if e.head in ct:
            continue
        if _closed(g, ct):
            return Zero
    return g


# --------------------------------------------------------------------------
# DOT export

_VERTEX_STYLE = {
    "green": 'shape=circle, style=filled, fillcolor=green, label=""',
    "internal": 'shape=circle, style=filled, fillcolor=black, width=0.12, label=""',
    "noise_pair": 'shape=circle, style=filled, fillcolor=purple, width=0.15, label=""',
    "dirac_pair": 'shape=circle, style=filled, fillcolor=black, width=0.2, label=""',
    "hslot": 'shape=circle, style=filled, fillcolor=blue, width=0.15, label=""',
}
_EDGE_STYLE = {
    "K": "style=solid",
    "DK": "style=dotted",
    "DDK": "style=dashed",
    "RhoRho": "style=solid, color=purple, dir=none",
    "Test": "style=solid, color=green",
    "Orange": "style=solid, color=orange",
}


def to_dot(g: FeynmanGraph, name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    for v in sorted(g.vertices, key=lambda v: v.id):
        style = _VERTEX_STYLE[v.kind]
        if v.noise == "Xi" and v.kind == "internal":
            style = 'shape=circle, style=filled, fillcolor=white, width=0.15, label=""'
        lines.append(f'  "{v.id}" [{style}];')
    edges = sorted(g.edges, key=lambda e: (e.tail, e.head, e.kernel, e.r, e.base or "", e.power))
    for e in edges:
        attrs = _EDGE_STYLE[e.kernel]
        labels = []
        if e.r:
            labels.append(f"({e.base},{e.r})")
        if e.kernel == "Orange":
            labels.append(f"^({e.power[0]},{e.power[1]})")
        if labels:
            attrs += f', label="{" ".join(labels)}"'
        lines.append(f'  "{e.tail}" -> "{e.head}" [{attrs}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
