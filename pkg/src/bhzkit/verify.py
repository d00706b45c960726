"""Symbolic invariant battery shared by the command line and the test-suite.

Every check returns a :class:`CheckResult` holding the failing instances in
term syntax, so a failure can be reproduced by pasting the term back in.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import mirror_graph
from .hopf import apply_right, delta_r_sum, prepare, prepare_sum
from .malliavin import stroock_schedule, top_order_counterterms
from .powercount import (
    CALIBRATED,
    DegreeTable,
    check_integrability,
    find_divergent_subgraphs,
    graph_one_incoming,
    graph_two_incoming,
    power_count,
    telescope_renormalize,
)
from .rules import Catalog, enumerate_negative
from .trees import FormalSum, Tree, format_tree, homogeneity, noise_derive, parse_tree, poly_derive, xi_count


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int = 0
    failures: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failures": [str(f) for f in self.failures],
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
        }


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _trees(trees) -> list:
    if trees is None:
        return list(enumerate_negative())
    return [parse_tree(t) if isinstance(t, str) else t for t in trees]


# --------------------------------------------------------------------------
# worked preparation-map identities

PAIR = parse_tree("I'[Xi]*I'[Xi]")
PAIR_X = parse_tree("I'[Xi]*I'[Xi@X^(0,1)]")


def expected_single_pair() -> FormalSum:
    """``R(I1(Xi) I1(Xi I(Xi)))`` written out by hand."""
    tau = parse_tree("I'[Xi]*I'[Xi*I[Xi]]")
    out = FormalSum.of(tau)
    out += FormalSum.of(parse_tree("I[Xi]"), symbols=(PAIR,))
    out += FormalSum.of(parse_tree("I'[Xi]"), symbols=(PAIR_X,))
    return out


def pair_extraction_terms(tau1: Tree, tau2: Tree) -> tuple:
    """Terms of ``R(I1(Xi tau1) I1(Xi tau2))`` extracting the root pair, and
    the hand formula ``l(I1(Xi)^2) tau1 tau2 + l(I1(X Xi) I1(Xi)) D(tau1 tau2)``."""
    from .trees import planted, tree_product

    xi1 = tree_product(parse_tree("Xi"), tau1) if not tau1.is_unit else parse_tree("Xi")
    xi2 = tree_product(parse_tree("Xi"), tau2) if not tau2.is_unit else parse_tree("Xi")
    tau = tree_product(planted((0, 1), xi1), planted((0, 1), xi2))
    got = FormalSum()
    for coef, mono, rest in prepare(tau):
        if mono in ((PAIR,), (PAIR_X,)):
            got._add((mono, rest), coef)
    prod = tree_product(tau1, tau2)
    want = FormalSum.of(prod, symbols=(PAIR,))
    for coef, _, t in poly_derive(prod, (0, 1)):
        want._add(((PAIR_X,), t), coef)
    return tau, got, want


PAIR_CASES = (
    ("1", "I[Xi]"),
    ("I[Xi]", "I[Xi]"),
    ("I[Xi]", "I[I'[Xi]*I'[Xi]]"),
    ("1", "I[Xi*I[Xi]]"),
    ("1", "I[Xi]*I[Xi]"),
)


@_timed
def check_worked_identities() -> CheckResult:
    """Both hand-computed preparation-map displays, term for term."""
    failures = []
    tau = parse_tree("I'[Xi]*I'[Xi*I[Xi]]")
    got = prepare(tau)
    if got != expected_single_pair():
        failures.append(f"R({format_tree(tau)}) = {got}")
    for a, b in PAIR_CASES:
        t1 = parse_tree(a) if a != "1" else Tree()
        t2 = parse_tree(b) if b != "1" else Tree()
        full, got, want = pair_extraction_terms(t1, t2)
        if got != want:
            failures.append(f"R({format_tree(full)}) pair terms: {got} != {want}")
    # parity: a lone noise is a fixed point
    if prepare(parse_tree("Xi")) != FormalSum.of(parse_tree("Xi")):
        failures.append("R(Xi) != Xi")
    return CheckResult("worked_identities", not failures, 2 + len(PAIR_CASES), failures)


# --------------------------------------------------------------------------
# commutation with noise derivatives


def _derivative_chain(tau: Tree):
    """``(j, D_{Xi_(j-1)} ... D_{Xi_1} tau)`` for ``j = 1..m``."""
    s = FormalSum.of(tau)
    for j in range(1, xi_count(tau) + 1):
        yield j, s
        s = s.map_basis(lambda t, j=j: noise_derive(t, j))


@_timed
def check_commutation(trees=None) -> CheckResult:
    """``delta_r D = (Id x D) delta_r`` and ``R D = D R`` along derivative chains."""
    failures = []
    n = 0
    for tau in _trees(trees):
        for j, s in _derivative_chain(tau):
            D = lambda t, j=j: noise_derive(t, j)  # noqa: E731
            lhs = delta_r_sum(s.map_basis(D))
            rhs = apply_right(delta_r_sum(s), D)
            if lhs != rhs:
                failures.append(f"delta_r D_Xi{j} on {format_tree(tau)}")
            if prepare_sum(s.map_basis(D)) != prepare_sum(s).map_basis(D):
                failures.append(f"R D_Xi{j} on {format_tree(tau)}")
            n += 1
    return CheckResult("commutation", not failures, n, failures)


# --------------------------------------------------------------------------
# Malliavin schedules

EXPECTED_SCHEDULE = {4: ({0, 2}, 4), 3: ({1}, 3), 2: ({0}, 2)}


@_timed
def check_stroock(trees=None) -> CheckResult:
    failures = []
    n = 0
    for tau in _trees(trees):
        m = xi_count(tau)
        if m not in EXPECTED_SCHEDULE:
            continue
        sch = stroock_schedule(tau)
        want = EXPECTED_SCHEDULE[m]
        if (sch.contributing, sch.top_order) != want:
            failures.append(f"{format_tree(tau)}: {sorted(sch.contributing)}/top {sch.top_order}")
        if top_order_counterterms(tau):
            failures.append(f"{format_tree(tau)}: counterterms survive the top-order derivative")
        n += 1
    return CheckResult("stroock_schedule", not failures, n, failures)


# --------------------------------------------------------------------------
# power counting


@_timed
def check_condition_c(trees=None, table: DegreeTable = CALIBRATED) -> CheckResult:
    """Condition (C) on every mirror graph and the affine law ``alpha = 2 p``."""
    failures = []
    pairs = set()
    trees = _trees(trees)
    for tau in trees:
        rep = power_count(mirror_graph(tau), table)
        h = homogeneity(tau)
        if not rep.passed:
            viol = [str(v) for v in rep.integrability_violations + rep.recentering_violations]
            failures.append(f"{format_tree(tau)} [{table.name}]: {'; '.join(viol[:3])}")
        pairs.add((h.p, rep.alpha))
    slope, offset = _affine(pairs)
    affine = slope is not None
    if not affine:
        failures.append(f"alpha is not an affine function of the homogeneity: {sorted(pairs)}")
    detail = {"table": table.name, "alpha_slope": str(slope), "alpha_offset": str(offset)}
    return CheckResult("condition_c", not failures, len(trees), failures, detail)


def _affine(pairs):
    pts = sorted(pairs)
    if len({p for p, _ in pts}) != len(pts):
        return None, None
    if len(pts) < 2:
        return Fraction(0), Fraction(pts[0][1]) if pts else Fraction(0)
    (p0, a0), (p1, a1) = pts[0], pts[1]
    slope = Fraction(a1 - a0) / (p1 - p0)
    offset = a0 - slope * p0
    if all(a == slope * p + offset for p, a in pts):
        return slope, offset
    return None, None


@_timed
def check_telescoping(table: DegreeTable = CALIBRATED) -> CheckResult:
    """Subdivergence graphs fail before the rewrite and every non-counterterm
    output passes afterwards."""
    failures = []
    n = 0
    for g in (graph_one_incoming(), graph_two_incoming()):
        if not check_integrability(g, table):
            failures.append(f"{g.name}: no integrability violation before the rewrite")
            continue
        div = find_divergent_subgraphs(g, table)
        for term in telescope_renormalize(g, div[0], table):
            n += 1
            if term.tag == "counterterm":
                if not term.symbols:
                    failures.append(f"{g.name}: counterterm without a character diagram")
                continue
            bad = check_integrability(term.graph, table)
            if bad:
                failures.append(f"{g.name}/{term.tag}: {bad[0]}")
    return CheckResult("telescoping", not failures, n, failures)


def run_battery(catalog: Catalog | None = None, table: DegreeTable = CALIBRATED, trees=None) -> list:
    """All symbolic checks; ``trees`` restricts the per-tree checks."""
    pool = trees if trees is not None else (list(catalog) if catalog is not None else None)
    return [
        check_worked_identities(),
        check_commutation(pool),
        check_stroock(pool),
        check_condition_c(pool, table),
        check_telescoping(table),
    ]
