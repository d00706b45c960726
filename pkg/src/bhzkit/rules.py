"""Rule conformity and enumeration of negative-homogeneity trees.

The admissible node profiles come from the nonlinearity ``f(u) xi + g(u) (du)^2``:
a node either carries a noise and any number of plain ``I`` edges, or carries
no noise and any number of plain edges plus at most two ``I'`` edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .trees import (
    DOT,
    XI,
    ZERO2,
    FormalSum,
    Homogeneity,
    Tree,
    format_tree,
    homogeneity,
    multi_indices,
    noise_count,
    noise_derive,
    parse_tree,
    planted,
    snorm,
    tree_product,
)

EDGE_WEIGHT = {ZERO2: 2, DOT: 1}
DEFAULT_KAPPA = Fraction(1, 100)


@dataclass(frozen=True)
class RuleProfile:
    plain_count: int
    dotted_count: int
    noise_allowed: bool

    def admissible(self) -> bool:
        if self.dotted_count == 0:
            return True
        return not self.noise_allowed and self.dotted_count <= 2


def node_profile(node: Tree) -> Optional[RuleProfile]:
    plain = dotted = 0
    for edge, _ in node.children:
        if edge == ZERO2:
            plain += 1
        elif edge == DOT:
            dotted += 1
        else:
            return None
    return RuleProfile(plain, dotted, node.noise is not None)


def conforms_to_rule(tau: Tree) -> bool:
    for node in tau.nodes():
        prof = node_profile(node)
        if prof is None or not prof.admissible():
            return False
    return True


# --------------------------------------------------------------------------
# catalog


@dataclass
class Catalog:
    groups: dict = field(default_factory=dict)
    truncated: bool = False
    caps: dict = field(default_factory=dict)

    @classmethod
    def from_trees(cls, trees, **kw) -> "Catalog":
        groups = {}
        for t in sorted(set(trees), key=lambda t: t.key):
            groups.setdefault(homogeneity(t), []).append(t)
        return cls(dict(sorted(groups.items())), **kw)

    def trees(self) -> list:
        return [t for h in self.groups for t in self.groups[h]]

    def tree_set(self) -> frozenset:
        return frozenset(self.trees())

    def region(self, p) -> list:
        """All trees whose kappa-free homogeneity equals ``p``."""
        p = Fraction(p)
        return [t for h, ts in self.groups.items() if h.p == p for t in ts]

    def filter(self, pred) -> "Catalog":
        return Catalog.from_trees([t for t in self.trees() if pred(t)], truncated=self.truncated, caps=dict(self.caps))

    def __len__(self) -> int:
        return sum(len(v) for v in self.groups.values())

    def __iter__(self):
        return iter(self.trees())


def _weight(tau: Tree) -> int:
    w = snorm(tau.poly)
    for edge, child in tau.children:
        w += EDGE_WEIGHT[edge] + _weight(child)
    return w


@lru_cache(maxsize=None)
def _gen(n: int, wmax: int, max_poly: int) -> tuple:
    """Conforming trees with exactly ``n`` noises, weight ``<= wmax`` and every
    branch carrying at least one noise."""
    if wmax < 0:
        return ()
    out = []
    polys = [k for k in multi_indices(max_poly) if snorm(k) <= wmax]
    for root_noise in (None, "Xi"):
        rest = n - (1 if root_noise else 0)
        if rest < 0:
            continue
        for k in polys:
            budget = wmax - snorm(k)
            items = []
            for edge, ew in EDGE_WEIGHT.items():
                if root_noise and edge == DOT:
                    continue
                for ni in range(1, rest + 1):
                    for child in _gen(ni, budget - ew, max_poly):
                        items.append((edge, ew + _weight(child), ni, child))
            items.sort(key=lambda it: (it[0], it[3].key))
            for combo in _multisets(items, rest, budget, 0, 0):
                t = Tree(root_noise, k, [(it[0], it[3]) for it in combo])
                if conforms_to_rule(t):
                    out.append(t)
    return tuple(out)


def _multisets(items, noises, budget, start, dotted):
    if noises == 0:
        yield ()
        return
    for i in range(start, len(items)):
        edge, w, ni, _ = items[i]
        if ni > noises or w > budget:
            continue
        d = dotted + (edge == DOT)
        if d > 2:
            continue
        for rest in _multisets(items, noises - ni, budget - w, i, d):
            yield (items[i],) + rest


def _negative_with(n: int, max_poly: int) -> list:
    wmax = (3 * n) // 2
    return [t for t in _gen(n, wmax, max_poly) if homogeneity(t).is_negative()]


def enumerate_negative(max_noises: int = 4, max_poly: int = 1, kappa=DEFAULT_KAPPA) -> Catalog:
    """Every conforming tree of negative homogeneity within the caps.

    Trees are grouped by exact homogeneity.  ``truncated`` is set when the
    frontier (one more noise, or a larger polynomial cap) still contains
    negative trees that the caps exclude.
    """
    trees = []
    for n in range(1, max_noises + 1):
        trees.extend(_negative_with(n, max_poly))
    have = set(trees)
    frontier = list(_negative_with(max_noises + 1, max_poly + 1))
    for n in range(1, max_noises + 1):
        frontier.extend(t for t in _negative_with(n, max_poly + 1) if t not in have)
    caps = {"max_noises": max_noises, "max_poly": max_poly, "kappa": str(Fraction(kappa))}
    return Catalog.from_trees(trees, truncated=bool(frontier), caps=caps)


def enumerate_noises_inductive() -> Catalog:
    """Closure of ``{Xi, X Xi}`` under ``I'(m)``, ``m I(n)`` and ``I'(m) I'(n)``,
    keeping negative results only."""
    xxi = Tree("Xi", DOT)
    found = {XI, xxi}
    frontier = list(found)
    while frontier:
        new = []
        pool = sorted(found, key=lambda t: t.key)
        for mu in frontier:
            cands = [planted(DOT, mu)]
            for nu in pool:
                for a, b in ((mu, nu), (nu, mu)):
                    try:
                        cands.append(tree_product(a, planted(ZERO2, b)))
                    except ValueError:
                        pass
                    cands.append(tree_product(planted(DOT, a), planted(DOT, b)))
            for c in cands:
                if c not in found and homogeneity(c).is_negative():
                    found.add(c)
                    new.append(c)
        frontier = new
    return Catalog.from_trees(found)


def inductive_domain(tau: Tree) -> bool:
    """Common domain of the two constructions: polynomial decorations only as
    ``X`` on a noise node."""
    return all(n.poly == ZERO2 or (n.poly == DOT and n.noise is not None) for n in tau.nodes())


# --------------------------------------------------------------------------
# derivative catalogs and reports


def derivative_catalog(base: Catalog, order: int) -> Catalog:
    """``B-_order``: apply ``D_{Xi_order} ... D_{Xi_1}`` to every tree with enough noises."""
    trees = []
    for tau in base:
        if noise_count(tau) < order:
            continue
        s = FormalSum.of(tau)
        for j in range(1, order + 1):
            s = s.map_basis(lambda t, j=j: noise_derive(t, j))
        trees.extend(s.bases())
    return Catalog.from_trees(trees)


def catalog_report(c: Catalog, kappa=DEFAULT_KAPPA) -> dict:
    groups = []
    for h, ts in c.groups.items():
        groups.append(
            {
                "homogeneity": str(h),
                "value": float(h.value(kappa)),
                "count": len(ts),
                "trees": [
                    {"term": format_tree(t), "noises": noise_count(t), "homogeneity": str(homogeneity(t))}
                    for t in ts
                ],
            }
        )
    counts = [noise_count(t) for t in c]
    return {
        "total": len(c),
        "max_noise_count": max(counts) if counts else 0,
        "truncated": c.truncated,
        "groups": groups,
    }


def catalog_document(c: Catalog, kappa=DEFAULT_KAPPA) -> str:
    lines = []
    for h, ts in c.groups.items():
        lines.append(f"# |tau| = {h}  ({len(ts)} trees)")
        lines.extend(format_tree(t) for t in ts)
        lines.append("")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# reference catalog (hand transcription of the published displays)

EXPECTED_GROUPS = {
    "-1-2k": ["Xi*I[Xi]", "I'[Xi]*I'[Xi]"],
    "-1/2": [
        "Xi*I[Xi*I[Xi]]",
        "Xi*I[Xi]*I[Xi]",
        "I'[Xi*I[Xi]]*I'[Xi]",
        "Xi*I[I'[Xi]*I'[Xi]]",
        "I'[I'[Xi]*I'[Xi]]*I'[Xi]",
        "I[Xi]*I'[Xi]*I'[Xi]",
        "Xi@X^(0,1)",
        "I'[Xi]",
    ],
    "-2k": [
        "Xi*I[Xi@X^(0,1)]",
        "Xi@X^(0,1)*I[Xi]",
        "I'[Xi@X^(0,1)]*I'[Xi]",
        "1@X^(0,1)*I'[Xi]*I'[Xi]",
        "I'[Xi*I[Xi]]",
        "I'[I'[Xi]*I'[Xi]]",
        "I[Xi]*I'[Xi]",
        "Xi*I[I'[Xi]]",
        "I'[I'[Xi]]*I'[Xi]",
    ],
    "-4k": [
        "Xi*I[Xi*I[Xi*I[Xi]]]",
        "I'[Xi]*I'[Xi*I[Xi*I[Xi]]]",
        "Xi*I[Xi*I[I'[Xi]*I'[Xi]]]",
        "Xi*I[I'[Xi]*I'[Xi*I[Xi]]]",
        "I'[Xi]*I'[Xi*I[I'[Xi]*I'[Xi]]]",
        "Xi*I[I'[Xi]*I'[I'[Xi]*I'[Xi]]]",
        "I'[Xi]*I'[I'[Xi]*I'[Xi*I[Xi]]]",
        "I'[Xi]*I'[I'[Xi]*I'[I'[Xi]*I'[Xi]]]",
        "I'[I'[Xi]*I'[Xi]]*I'[I'[Xi]*I'[Xi]]",
        "I'[Xi*I[Xi]]*I'[Xi*I[Xi]]",
        "I'[Xi*I[Xi]]*I'[I'[Xi]*I'[Xi]]",
        "Xi*I[Xi]*I[Xi]*I[Xi]",
        "I[Xi]*I[Xi]*I'[Xi]*I'[Xi]",
        "Xi*I[Xi*I[Xi]*I[Xi]]",
        "I'[Xi]*I'[Xi*I[Xi]*I[Xi]]",
        "Xi*I[I[Xi]*I'[Xi]*I'[Xi]]",
        "I'[Xi]*I'[I[Xi]*I'[Xi]*I'[Xi]]",
        "Xi*I[Xi]*I[Xi*I[Xi]]",
        "I[Xi*I[Xi]]*I'[Xi]*I'[Xi]",
        "I'[Xi*I[Xi]]*I'[Xi]*I[Xi]",
        "Xi*I[Xi]*I[I'[Xi]*I'[Xi]]",
        "I'[Xi]*I'[Xi]*I[I'[Xi]*I'[Xi]]",
        "I[Xi]*I'[Xi]*I'[I'[Xi]*I'[Xi]]",
    ],
    "-3/2-k": ["Xi"],
}


def expected_catalog() -> dict:
    """Reference groups as parsed trees, keyed like :data:`EXPECTED_GROUPS`."""
    return {name: [parse_tree(s) for s in terms] for name, terms in EXPECTED_GROUPS.items()}


def expected_tree_set(max_noises: int = 4) -> frozenset:
    return frozenset(t for ts in expected_catalog().values() for t in ts if noise_count(t) <= max_noises)


def compare_with_expected(c: Catalog) -> dict:
    """Tree-for-tree comparison against the reference, restricted to the catalog's noise cap."""
    cap = int(c.caps.get("max_noises", 4))
    expected = expected_tree_set(cap)
    got = c.tree_set()
    return {
        "missing": sorted((format_tree(t) for t in expected - got)),
        "unexpected": sorted((format_tree(t) for t in got - expected)),
        "ok": expected == got,
    }


def region_counts(c: Catalog) -> dict:
    """Counts keyed by the displayed groups: -1-2k, -1/2 region, -2k, -4k."""
    out = {}
    for h, ts in c.groups.items():
        if h == Homogeneity(Fraction(-1), -2):
            name = "-1-2k"
        elif h.p == Fraction(-1, 2):
            name = "-1/2"
        elif h == Homogeneity(0, -2):
            name = "-2k"
        elif h == Homogeneity(0, -4):
            name = "-4k"
        elif h == Homogeneity(Fraction(-3, 2), -1):
            name = "-3/2-k"
        else:
            name = str(h)
        out[name] = out.get(name, 0) + len(ts)
    return out
