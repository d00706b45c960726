"""Decorated rooted trees, exact homogeneities and formal sums.

A tree is a root node (noise tag plus polynomial decoration ``X^k``) with a
multiset of children, each child hanging from an edge ``I_a``.  Trees are
immutable and stored in canonical form, so isomorphic trees compare equal
and hash identically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Iterator, Optional

NOISES = (None, "Xi", "Xi1", "Xi2", "Xi3", "Xi4")
_NOISE_RANK = {name: i for i, name in enumerate(NOISES)}

ZERO2 = (0, 0)
DOT = (0, 1)


def snorm(k) -> int:
    """Parabolic degree ``|k|_s = 2 k0 + k1``."""
    return 2 * k[0] + k[1]


def vadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def vsub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def vle(a, b) -> bool:
    return a[0] <= b[0] and a[1] <= b[1]


def vfact(k) -> int:
    out = 1
    for n in k:
        for i in range(2, n + 1):
            out *= i
    return out


def vbinom(k, j) -> int:
    return comb(k[0], j[0]) * comb(k[1], j[1])


def multi_indices(max_degree: int):
    """All ``k`` in N^2 with ``|k|_s <= max_degree``, sorted by degree."""
    out = []
    for k0 in range(max_degree // 2 + 1):
        for k1 in range(max_degree - 2 * k0 + 1):
            out.append((k0, k1))
    out.sort(key=lambda k: (snorm(k), k))
    return out


def sub_indices(k):
    """All ``j <= k`` componentwise."""
    return [(a, b) for a in range(k[0] + 1) for b in range(k[1] + 1)]


# --------------------------------------------------------------------------
# homogeneity


@dataclass(frozen=True, order=True)
class Homogeneity:
    """Exact value ``p + q*kappa`` with lexicographic order (kappa -> 0+)."""

    p: Fraction = Fraction(0)
    q: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "q", int(self.q))

    def __add__(self, other: "Homogeneity") -> "Homogeneity":
        return Homogeneity(self.p + other.p, self.q + other.q)

    def __sub__(self, other: "Homogeneity") -> "Homogeneity":
        return Homogeneity(self.p - other.p, self.q - other.q)

    def __neg__(self) -> "Homogeneity":
        return Homogeneity(-self.p, -self.q)

    def shift(self, n) -> "Homogeneity":
        return Homogeneity(self.p + Fraction(n), self.q)

    def is_negative(self) -> bool:
        return self < Homogeneity()

    def is_positive(self) -> bool:
        return self > Homogeneity()

    def value(self, kappa=Fraction(1, 100)) -> Fraction:
        return self.p + self.q * Fraction(kappa)

    def __str__(self) -> str:
        if self.q == 0:
            return str(self.p)
        if self.q == 1:
            kap = "κ"
        elif self.q == -1:
            kap = "-κ"
        else:
            kap = f"{self.q}κ"
        if self.p == 0:
            return kap
        sign = "" if kap.startswith("-") else "+"
        return f"{self.p}{sign}{kap}"


HOM_XI = Homogeneity(Fraction(-3, 2), -1)
HOM_XIJ = Homogeneity(Fraction(0), -1)


# --------------------------------------------------------------------------
# trees


class Tree:
    """Immutable decorated rooted tree in canonical form."""

    __slots__ = ("noise", "poly", "children", "key", "_hash")

    def __init__(self, noise: Optional[str] = None, poly=ZERO2, children: Iterable = ()):
        if noise not in _NOISE_RANK:
            raise ValueError(f"unknown noise tag {noise!r}")
        poly = (int(poly[0]), int(poly[1]))
        if poly[0] < 0 or poly[1] < 0:
            raise ValueError(f"negative polynomial decoration {poly}")
        kids = []
        for edge, child in children:
            edge = (int(edge[0]), int(edge[1]))
            if edge[0] < 0 or edge[1] < 0:
                raise ValueError(f"negative edge decoration {edge}")
            if not isinstance(child, Tree):
                raise TypeError("children must be Tree instances")
            kids.append((edge, child))
        kids.sort(key=lambda ec: (ec[0], ec[1].key))
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "children", tuple(kids))
        key = (_NOISE_RANK[noise], poly, tuple((e, c.key) for e, c in kids))
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError("Tree is immutable")

    def __eq__(self, other) -> bool:
        return isinstance(other, Tree) and self.key == other.key

    def __lt__(self, other: "Tree") -> bool:
        return self.key < other.key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Tree({format_tree(self)!r})"

    def __str__(self) -> str:
        return format_tree(self)

    def __mul__(self, other: "Tree") -> "Tree":
        return tree_product(self, other)

    @property
    def is_unit(self) -> bool:
        return self.noise is None and self.poly == ZERO2 and not self.children

    @property
    def is_planted(self) -> bool:
        return self.noise is None and self.poly == ZERO2 and len(self.children) == 1

    def replace(self, noise=..., poly=..., children=...) -> "Tree":
        return Tree(
            self.noise if noise is ... else noise,
            self.poly if poly is ... else poly,
            self.children if children is ... else children,
        )

    def nodes(self) -> Iterator["Tree"]:
        """Pre-order traversal of all subtrees (the nodes of the tree)."""
        yield self
        for _, child in self.children:
            yield from child.nodes()

    def edge_count(self) -> int:
        return sum(1 + c.edge_count() for _, c in self.children)

    def noise_tags(self) -> list:
        return [n.noise for n in self.nodes() if n.noise is not None]


UNIT = Tree()
XI = Tree("Xi")


def planted(edge, tree: Tree) -> Tree:
    """``I_edge(tree)`` as a planted tree."""
    return Tree(None, ZERO2, [(edge, tree)])


def tree_product(a: Tree, b: Tree) -> Tree:
    """Tree product: merge the two roots."""
    if a.noise is not None and b.noise is not None:
        raise ValueError("cannot multiply two trees whose roots both carry a noise")
    noise = a.noise if a.noise is not None else b.noise
    return Tree(noise, vadd(a.poly, b.poly), a.children + b.children)


def root_factors(tau: Tree) -> list:
    """Split a tree into its planted root factors (edge, child)."""
    return list(tau.children)


def canonicalize(tau: Tree) -> Tree:
    """Trees are canonical on construction; rebuilding is idempotent."""
    return Tree(tau.noise, tau.poly, [(e, canonicalize(c)) for e, c in tau.children])


def homogeneity(tau: Tree, plus_mode: bool = False) -> Homogeneity:
    if tau.noise is None:
        h = Homogeneity()
    elif tau.noise == "Xi" or plus_mode:
        h = HOM_XI
    else:
        h = HOM_XIJ
    h = h.shift(snorm(tau.poly))
    for edge, child in tau.children:
        h = h + homogeneity(child, plus_mode).shift(2 - snorm(edge))
    return h


def noise_count(tau: Tree) -> int:
    return len(tau.noise_tags())


def xi_count(tau: Tree) -> int:
    """Number of plain ``Xi`` tags (those still subject to derivation)."""
    return sum(1 for n in tau.noise_tags() if n == "Xi")


def has_xi_j(tau: Tree) -> bool:
    return any(n not in (None, "Xi") for n in tau.noise_tags())


# --------------------------------------------------------------------------
# term syntax


def _edge_str(edge) -> str:
    if edge == ZERO2:
        return "I"
    if edge == DOT:
        return "I'"
    return f"I_({edge[0]},{edge[1]})"


def format_tree(tau: Tree) -> str:
    parts = []
    if tau.noise is not None:
        parts.append(tau.noise + (f"@X^({tau.poly[0]},{tau.poly[1]})" if tau.poly != ZERO2 else ""))
    elif tau.poly != ZERO2:
        parts.append(f"1@X^({tau.poly[0]},{tau.poly[1]})")
    elif not tau.children:
        parts.append("1")
    for edge, child in tau.children:
        parts.append(f"{_edge_str(edge)}[{format_tree(child)}]")
    return "*".join(parts)


_TOKEN = re.compile(
    r"\s*(?:(?P<edge>I_\(\s*\d+\s*,\s*\d+\s*\)|I'|I)\[|(?P<poly>@X\^\(\s*\d+\s*,\s*\d+\s*\))"
    r"|(?P<noise>Xi[1-4]?)|(?P<one>1)|(?P<x>X)|(?P<star>\*)|(?P<close>\]))"
)


class TermSyntaxError(ValueError):
    pass


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise TermSyntaxError(f"unexpected input at {pos}: {text[pos:pos + 12]!r}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def product(self) -> Tree:
        tau = self.factor()
        while self.peek()[0] == "star":
            self.take()
            tau = tree_product(tau, self.factor())
        return tau

    def factor(self) -> Tree:
        kind, val = self.take()
        if kind == "noise":
            tau = Tree(val)
        elif kind == "one":
            tau = UNIT
        elif kind == "x":
            tau = Tree(None, DOT)
        elif kind == "edge":
            nums = re.findall(r"\d+", val)
            edge = (int(nums[0]), int(nums[1])) if nums else (DOT if val == "I'" else ZERO2)
            inner = self.product()
            if self.take()[0] != "close":
                raise TermSyntaxError(f"missing ']' in {self.text!r}")
            tau = planted(edge, inner)
        else:
            raise TermSyntaxError(f"unexpected token {val!r} in {self.text!r}")
        while self.peek()[0] == "poly":
            nums = re.findall(r"\d+", self.take()[1])
            tau = tau.replace(poly=vadd(tau.poly, (int(nums[0]), int(nums[1]))))
        return tau


def parse_tree(text: str) -> Tree:
    """Parse the term syntax, e.g. ``"Xi*I[Xi]"`` or ``"I'[Xi@X^(0,1)]"``."""
    p = _Parser(text)
    if not p.tokens:
        raise TermSyntaxError("empty term")
    tau = p.product()
    if p.i != len(p.tokens):
        raise TermSyntaxError(f"trailing input in {text!r}")
    return tau


T = parse_tree


# --------------------------------------------------------------------------
# formal sums


@dataclass(frozen=True)
class TPlus:
    """Element ``X^k prod_i I+_{a_i}(tau_i)`` of the positive algebra."""

    poly: tuple = ZERO2
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(sorted(self.factors, key=lambda f: (f[0], f[1].key))))

    def __mul__(self, other: "TPlus") -> "TPlus":
        return TPlus(vadd(self.poly, other.poly), self.factors + other.factors)

    @property
    def key(self):
        return (self.poly, tuple((a, t.key) for a, t in self.factors))

    def __str__(self) -> str:
        parts = []
        if self.poly != ZERO2:
            parts.append(f"X^({self.poly[0]},{self.poly[1]})")
        for a, t in self.factors:
            parts.append(f"{_edge_str(a).replace('I', 'I+', 1)}[{format_tree(t)}]")
        return "*".join(parts) if parts else "1+"


TPLUS_UNIT = TPlus()


def basis_key(b):
    if isinstance(b, Tree):
        return (0, b.key)
    if isinstance(b, TPlus):
        return (2, b.key)
    return (1, tuple(basis_key(x) for x in b))


def basis_str(b) -> str:
    if isinstance(b, tuple):
        return " ⊗ ".join(basis_str(x) for x in b)
    return str(b)


def _mono(symbols) -> tuple:
    return tuple(sorted(symbols, key=lambda t: t.key))


class FormalSum:
    """Linear combination of basis elements with coefficients in Q[l(sigma)].

    Keys are ``(monomial, basis)`` where the monomial is a sorted tuple of
    character symbols (trees) and the basis is a tree, a tensor tuple of
    trees, or a :class:`TPlus`.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for key, coef in (terms.items() if isinstance(terms, dict) else terms):
                self._add(key, coef)

    def _add(self, key, coef):
        coef = Fraction(coef)
        if coef == 0:
            return
        new = self.terms.get(key, Fraction(0)) + coef
        if new == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    @classmethod
    def of(cls, basis, coef=1, symbols=()) -> "FormalSum":
        return cls({(_mono(symbols), basis): coef})

    @classmethod
    def zero(cls) -> "FormalSum":
        return cls()

    def copy(self) -> "FormalSum":
        return FormalSum(dict(self.terms))

    def __iter__(self):
        for (mono, basis), coef in sorted(self.terms.items(), key=lambda kv: self._sort_key(kv[0])):
            yield coef, mono, basis

    @staticmethod
    def _sort_key(key):
        mono, basis = key
        return (len(mono), tuple(t.key for t in mono), basis_key(basis))

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, int) and other == 0:
            return not self.terms
        return isinstance(other, FormalSum) and self.terms == other.terms

    def __add__(self, other: "FormalSum") -> "FormalSum":
        out = self.copy()
        for key, coef in other.terms.items():
            out._add(key, coef)
        return out

    def __sub__(self, other: "FormalSum") -> "FormalSum":
        return self + other.scale(-1)

    def __neg__(self) -> "FormalSum":
        return self.scale(-1)

    def scale(self, c) -> "FormalSum":
        c = Fraction(c)
        return FormalSum({k: v * c for k, v in self.terms.items()})

    __rmul__ = scale

    def bases(self) -> list:
        return [b for _, _, b in self]

    def coefficient(self, basis, symbols=()) -> Fraction:
        return self.terms.get((_mono(symbols), basis), Fraction(0))

    def map_basis(self, fn) -> "FormalSum":
        """Apply a linear map ``basis -> FormalSum`` termwise."""
        out = FormalSum()
        for (mono, basis), coef in self.terms.items():
            for (m2, b2), c2 in fn(basis).terms.items():
                out._add((_mono(mono + m2), b2), coef * c2)
        return out

    def mul(self, other: "FormalSum", op) -> "FormalSum":
        """Bilinear product using ``op(basis1, basis2)`` on bases."""
        out = FormalSum()
        for (m1, b1), c1 in self.terms.items():
            for (m2, b2), c2 in other.terms.items():
                b = op(b1, b2)
                if b is None:
                    continue
                out._add((_mono(m1 + m2), b), c1 * c2)
        return out

    def evaluate_symbols(self, values) -> "FormalSum":
        """Substitute character values; ``values(sigma)`` returns a number."""
        out = FormalSum()
        for (mono, basis), coef in self.terms.items():
            c = coef
            for s in mono:
                c = c * Fraction(values(s))
            out._add(((), basis), c)
        return out

    def total_coefficient(self) -> Fraction:
        return sum(self.terms.values(), Fraction(0))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for coef, mono, basis in self:
            factors = [f"l({format_tree(s)})" for s in mono]
            if coef != 1 or not factors:
                if coef == -1 and factors:
                    factors.insert(0, "-1")
                elif coef != 1:
                    factors.insert(0, str(coef))
            parts.append("·".join(factors + [basis_str(basis)]) if factors else basis_str(basis))
        return " + ".join(parts)

    __repr__ = __str__


def tree_sum(trees_with_coefs) -> FormalSum:
    """Sum of ``coef * tree``; repeated trees accumulate."""
    out = FormalSum()
    for t, c in trees_with_coefs:
        out._add(((), t), c)
    return out


def _prod_or_none(a: Tree, b: Tree):
    if a.noise is not None and b.noise is not None:
        raise ValueError("noise collision in product")
    return tree_product(a, b)


# --------------------------------------------------------------------------
# derivatives


def _distribute(a, n):
    """All ways to write ``a`` as an ordered sum of ``n`` multi-indices."""
    if n == 0:
        if a == ZERO2:
            yield ()
        return
    if n == 1:
        yield (a,)
        return
    for b in sub_indices(a):
        for rest in _distribute(vsub(a, b), n - 1):
            yield (b,) + rest


def _multinomial(a, parts) -> int:
    out = 1
    for comp in (0, 1):
        rem = a[comp]
        for p in parts:
            out *= comb(rem, p[comp])
            rem -= p[comp]
    return out


def poly_derive(tau: Tree, a) -> FormalSum:
    """``D^a tau`` by the Leibniz rule over the root factors.

    ``D^b X^k = X^(k-b)`` (annihilated when ``b`` exceeds ``k``), ``D^b`` kills
    a noise for ``b != 0``, and ``D^b I_c(sigma) = I_(c+b)(sigma)``.
    """
    a = tuple(a)
    children = list(tau.children)
    out = FormalSum()
    n = len(children) + 1
    for parts in _distribute(a, n):
        b_root, rest = parts[0], parts[1:]
        if b_root != ZERO2:
            if not vle(b_root, tau.poly):
                continue
            if tau.noise is not None and tau.poly == ZERO2:
                continue
        poly = vsub(tau.poly, b_root)
        new_children = [(vadd(e, b), c) for (e, c), b in zip(children, rest)]
        out._add(((), Tree(tau.noise, poly, new_children)), _multinomial(a, parts))
    return out


def _replace_noise_occurrences(tau: Tree, old: str, new: str) -> list:
    """All trees obtained by retagging exactly one ``old`` node as ``new``."""
    out = []
    if tau.noise == old:
        out.append(tau.replace(noise=new))
    kids = list(tau.children)
    for i, (edge, child) in enumerate(kids):
        for repl in _replace_noise_occurrences(child, old, new):
            out.append(tau.replace(children=kids[:i] + [(edge, repl)] + kids[i + 1:]))
    return out


def noise_derive(tau: Tree, j: int) -> FormalSum:
    """``D_{Xi_j} tau``: replace one ``Xi`` by ``Xi_j`` in every possible way."""
    name = f"Xi{j}"
    if name not in _NOISE_RANK:
        raise ValueError(f"derivative index must be in 1..4, got {j}")
    if name in tau.noise_tags():
        raise ValueError(f"{name} already present in {format_tree(tau)}")
    return tree_sum((t, 1) for t in _replace_noise_occurrences(tau, "Xi", name))


def derive_sum(s: FormalSum, op) -> FormalSum:
    """Extend a tree operator ``op: Tree -> FormalSum`` linearly to a sum of trees."""
    return s.map_basis(op)
