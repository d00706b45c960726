"""Root extraction, the recentering co-action and the preparation map R."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Optional

from .trees import (
    TPLUS_UNIT,
    UNIT,
    ZERO2,
    FormalSum,
    Homogeneity,
    TPlus,
    Tree,
    format_tree,
    has_xi_j,
    homogeneity,
    multi_indices,
    noise_count,
    noise_derive,
    planted,
    snorm,
    sub_indices,
    tree_product,
    vadd,
    vbinom,
    vfact,
    vsub,
)


# --------------------------------------------------------------------------
# flattened view used by the cut enumeration


class _Flat:
    def __init__(self, tau: Tree):
        self.noise, self.poly, self.parent, self.edge, self.sub = [], [], [], [], []
        self.kids = []
        self._add(tau, None, None)

    def _add(self, t: Tree, parent, edge) -> int:
        i = len(self.noise)
        self.noise.append(t.noise)
        self.poly.append(t.poly)
        self.parent.append(parent)
        self.edge.append(edge)
        self.sub.append(t)
        self.kids.append([])
        for e, c in t.children:
            j = self._add(c, i, e)
            self.kids[i].append(j)
        return i

    def rooted_subsets(self):
        """Yield every set of node indices containing the root and closed under parents."""

        def rec(i):
            options = [frozenset([i])]
            for c in self.kids[i]:
                grown = []
                for base in options:
                    grown.append(base)
                    for sub in rec(c):
                        grown.append(base | sub)
                options = grown
            return options

        return rec(0)

    def build(self, i, keep, extra, root_poly) -> Tree:
        poly = root_poly if i == 0 else self.poly[i]
        poly = vadd(poly, extra.get(i, ZERO2))
        kids = [(self.edge[c], self.build(c, keep, extra, root_poly)) for c in self.kids[i] if c in keep]
        return Tree(self.noise[i], poly, kids)


def _lex_negative_with(h: Homogeneity, extra_degree: int) -> bool:
    return h.shift(extra_degree).is_negative()


def _k_assignments(n_cuts: int, budget: int):
    """Tuples of multi-indices, one per cut, with total degree ``<= budget``."""
    if budget < 0:
        return
    ks = multi_indices(budget)
    for combo in iproduct(ks, repeat=n_cuts):
        if sum(snorm(k) for k in combo) <= budget:
            yield combo


def delta_r(tau: Tree) -> FormalSum:
    """Root-extraction coproduct by direct enumeration of rooted cuts.

    Returns a sum over tensor bases ``(sigma, contracted)``.  Extracted factors
    must carry a noise, contain no ``Xi_j`` tag and have negative homogeneity
    (including their Taylor monomials).  The unit term ``1 (x) tau`` is added
    exactly once.
    """
    flat = _Flat(tau)
    out = FormalSum.of((UNIT, tau))
    root_k = flat.poly[0]
    for keep in flat.rooted_subsets():
        if not any(flat.noise[i] is not None for i in keep):
            continue
        if any(flat.noise[i] not in (None, "Xi") for i in keep):
            continue
        cuts = sorted(c for i in keep for c in flat.kids[i] if c not in keep)
        for j in sub_indices(root_k):
            sigma0 = flat.build(0, keep, {}, j)
            h0 = homogeneity(sigma0)
            if not h0.is_negative():
                continue
            budget = int(-h0.p) if h0.p < 0 else 0
            rest = vsub(root_k, j)
            for ks in _k_assignments(len(cuts), budget):
                total = sum(snorm(k) for k in ks)
                if not _lex_negative_with(h0, total):
                    continue
                extra = {}
                coef = Fraction(vbinom(root_k, j))
                for c, k in zip(cuts, ks):
                    p = flat.parent[c]
                    extra[p] = vadd(extra.get(p, ZERO2), k)
                    coef /= vfact(k)
                sigma = flat.build(0, keep, extra, j)
                contracted = Tree(None, rest, [(vadd(flat.edge[c], k), flat.sub[c]) for c, k in zip(cuts, ks)])
                out._add(((), (sigma, contracted)), coef)
    return out


# --------------------------------------------------------------------------
# characters


VANISH_REASONS = ("contains_Xi_j", "odd_parity", "planted", "none")


@dataclass(frozen=True)
class CharacterSymbol:
    sigma: Tree
    reason: str = "none"

    @property
    def vanishes(self) -> bool:
        return self.reason != "none"

    def __str__(self) -> str:
        return f"l({format_tree(self.sigma)})"


def character_vanishes(sigma: Tree) -> CharacterSymbol:
    """Classify a character symbol; first matching rule wins."""
    if has_xi_j(sigma):
        return CharacterSymbol(sigma, "contains_Xi_j")
    if noise_count(sigma) % 2 == 1:
        return CharacterSymbol(sigma, "odd_parity")
    if sigma.is_planted:
        return CharacterSymbol(sigma, "planted")
    return CharacterSymbol(sigma, "none")


def prepare(tau: Tree, apply_vanishing: bool = True) -> FormalSum:
    """``R tau = (l (x) Id) delta_r tau`` with formal character symbols."""
    out = FormalSum()
    for coef, _, (sigma, rest) in delta_r(tau):
        if sigma.is_unit:
            out._add(((), rest), coef)
            continue
        if apply_vanishing and character_vanishes(sigma).vanishes:
            continue
        out._add(((sigma,), rest), coef)
    return out


def prepare_sum(s: FormalSum, apply_vanishing: bool = True) -> FormalSum:
    return s.map_basis(lambda t: prepare(t, apply_vanishing))


def apply_right(s: FormalSum, op) -> FormalSum:
    """``(Id (x) op)`` on a tensor sum; ``op: Tree -> FormalSum``."""
    out = FormalSum()
    for (mono, (left, right)), coef in s.terms.items():
        for (m2, b), c2 in op(right).terms.items():
            out._add((mono + m2, (left, b)), coef * c2)
    return out


def delta_r_sum(s: FormalSum) -> FormalSum:
    return s.map_basis(delta_r)


def counit_check(tau: Tree) -> bool:
    """Setting l(1)=1 and every other symbol to 0 recovers the identity."""
    got = FormalSum()
    for coef, _, (sigma, rest) in delta_r(tau):
        if sigma.is_unit:
            got._add(((), rest), coef)
    return got == FormalSum.of(tau)


def edge_invariant(tau: Tree) -> list:
    """Terms of delta_r violating 'right factor has fewer edges'; left factors
    without edges (a bare noise) are exempt."""
    bad = []
    n = tau.edge_count()
    for _, _, (sigma, rest) in delta_r(tau):
        if sigma.is_unit or sigma.edge_count() == 0:
            continue
        if rest.edge_count() >= n:
            bad.append((sigma, rest))
    return bad


# --------------------------------------------------------------------------
# recentering co-action


def _left_planted(a, left: Tree) -> Optional[Tree]:
    if left.noise is None and not left.children:
        return None
    return planted(a, left)


def coaction(tau: Tree, plus_mode: bool = False) -> FormalSum:
    """Co-action ``delta`` with right factors in the positive algebra.

    Primitive on ``1``, ``X``, ``Xi`` and ``Xi_j``; multiplicative; on planted
    trees ``delta I_a tau = (I_a (x) Id) delta tau + sum X^k/k! (x) X^m/m! I+_(a+k+m)(tau)``
    over ``|k+m|_s < |I_a tau|``.
    """
    acc = FormalSum.of((Tree(tau.noise, tau.poly), TPLUS_UNIT))
    for a, child in tau.children:
        acc = acc.mul(_coaction_planted(a, child, plus_mode), _tensor_product)
    return acc


def _tensor_product(b1, b2):
    return (tree_product(b1[0], b2[0]), b1[1] * b2[1])


def _coaction_planted(a, child: Tree, plus_mode: bool) -> FormalSum:
    out = FormalSum()
    for (mono, (left, right)), coef in coaction(child, plus_mode).terms.items():
        lp = _left_planted(a, left)
        if lp is not None:
            out._add((mono, (lp, right)), coef)
    h = homogeneity(planted(a, child), plus_mode)
    if h.is_positive():
        top = int(h.p) + 1
        for km in multi_indices(top):
            if not Homogeneity(snorm(km), 0) < h:
                continue
            for k in sub_indices(km):
                m = vsub(km, k)
                coef = Fraction(1, vfact(k) * vfact(m))
                right = TPlus(m, ((vadd(a, km), child),))
                out._add(((), (Tree(None, k), right)), coef)
    return out
