"""Symbolic Malliavin derivatives of trees and Stroock term scheduling."""

from __future__ import annotations

from dataclasses import dataclass, field

from .hopf import prepare
from .trees import FormalSum, Tree, noise_count, noise_derive, xi_count


def malliavin_expand(tau, k: int, lenient: bool = False) -> FormalSum:
    """``D_{Xi_k} ... D_{Xi_1} tau``.

    ``tau`` may be a tree or a formal sum of trees.  Asking for more
    derivatives than there are noises is a domain error unless ``lenient``
    is set, in which case the (zero) result is returned.
    """
    s = tau if isinstance(tau, FormalSum) else FormalSum.of(tau)
    if k < 0:
        raise ValueError("derivative order must be non-negative")
    if not lenient:
        most = max((noise_count(b) for b in s.bases()), default=0)
        if k > most:
            raise ValueError(f"order {k} exceeds the noise count {most}")
    for j in range(1, k + 1):
        s = s.map_basis(lambda t, j=j: noise_derive(t, j))
    return s


def term_count(s: FormalSum) -> int:
    """Number of terms counted with multiplicity."""
    return int(s.total_coefficient())


@dataclass
class StroockSchedule:
    total_noises: int
    expectation_orders: list = field(default_factory=list)
    top_order: int = 0

    @property
    def contributing(self) -> set:
        return {k for k, ok in self.expectation_orders if ok}


def stroock_schedule(tau: Tree) -> StroockSchedule:
    """Expectation orders ``0..m-1``; order ``k`` contributes iff ``m - k`` is even."""
    m = xi_count(tau)
    orders = [(k, (m - k) % 2 == 0) for k in range(m)]
    return StroockSchedule(total_noises=m, expectation_orders=orders, top_order=m)


def top_order_counterterms(tau: Tree) -> FormalSum:
    """Top-order Malliavin derivative of the counterterms ``R tau - tau``.

    Counterterms carry strictly fewer noises, so the result is zero.
    """
    ct = prepare(tau) - FormalSum.of(tau)
    return malliavin_expand(ct, xi_count(tau), lenient=True)
