"""Acceptance criteria 1-10, one test each, with their runtime budgets."""

import time
from math import perm

import numpy as np
import pytest

from bhzkit.graphs import perfect_matchings
from bhzkit.malliavin import malliavin_expand, term_count
from bhzkit.numerics.experiments import EpsilonProbe, ModelEvaluator, ScalingFit, mollifier_difference_norm
from bhzkit.numerics.grid import Grid, MollifierSpec
from bhzkit.numerics.grid import TestFunctionSpec as PhiSpec
from bhzkit.numerics.noise import convolve, reflect, sample_mollified_noise
from bhzkit.rules import (
    EXPECTED_GROUPS,
    catalog_report,
    compare_with_expected,
    enumerate_negative,
    enumerate_noises_inductive,
    inductive_domain,
    region_counts,
)
from bhzkit.trees import xi_count
from bhzkit.verify import (
    check_commutation,
    check_condition_c,
    check_stroock,
    check_telescoping,
    check_worked_identities,
)


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f}s, budget {self.seconds}s"


def test_01_catalog_reproduction():
    with Budget(10):
        c = enumerate_negative()
        counts = region_counts(c)
        assert counts["-1-2k"] == 2
        assert counts["-1/2"] == 8
        assert counts["-2k"] == 9
        assert counts["-4k"] == len(EXPECTED_GROUPS["-4k"]) == 23
        cmp = compare_with_expected(c)
        assert cmp["ok"], cmp
        assert catalog_report(c)["max_noise_count"] == 4


def test_02_dual_construction():
    with Budget(10):
        inductive = enumerate_noises_inductive().tree_set()
        rule = {t for t in enumerate_negative() if inductive_domain(t)}
        assert inductive == rule


def test_03_worked_identities():
    with Budget(1):
        res = check_worked_identities()
    assert res.passed, res.failures


def test_04_commutation_battery():
    with Budget(30):
        res = check_commutation(enumerate_negative())
    assert res.passed, res.failures[:5]
    assert res.checked == sum(xi_count(t) for t in enumerate_negative())


def test_05_stroock_schedules():
    c = enumerate_negative()
    with Budget(1):
        res = check_stroock(c)
    assert res.passed, res.failures
    assert res.checked == sum(1 for t in c if xi_count(t) in (2, 3, 4))


def test_06_power_counting():
    with Budget(60):
        cond = check_condition_c(enumerate_negative())
        tele = check_telescoping()
    assert cond.passed, cond.failures[:5]
    assert cond.detail["alpha_slope"] == "2" and cond.detail["alpha_offset"] == "0"
    assert tele.passed, tele.failures


@pytest.mark.slow
@pytest.mark.parametrize("tree", ["Xi*I[Xi]", "I'[Xi]*I'[Xi]"])
def test_07_bhz_property(tree):
    with Budget(300):
        est = ModelEvaluator(tree, mode="renormalized", eps=1 / 8, n_samples=400, seed=0).fit()
    assert est.centered_within(3.0), (est.mean_, est.stderr_)


@pytest.mark.slow
def test_08_scaling_slope():
    with Budget(600):
        est = ScalingFit("Xi*I[Xi]", lambdas=(1 / 2, 1 / 4, 1 / 8, 1 / 16), n_samples=200, seed=0).fit()
    assert est.slope_ == pytest.approx(-1.0, abs=0.2), est.result_.to_dict()


@pytest.mark.slow
def test_09_epsilon_trend():
    with Budget(600):
        probe = EpsilonProbe("Xi*I[Xi]", eps_list=(1 / 4, 1 / 8, 1 / 16), n_samples=200, seed=0).fit()
        eps = [1 / 4, 1 / 8, 1 / 16]
        scaled = [mollifier_difference_norm(e, e / 2, eta=0.5) / e**0.5 for e in eps]
    assert probe.strictly_decreasing, probe.table_
    assert max(scaled) / min(scaled) <= 2.0, scaled


def test_10_oracles():
    with Budget(120):
        # Ito isometry for the mollified noise tested against phi
        g = Grid(nx=32, nt=160, dt=1.13 / 160)
        m = MollifierSpec(1 / 4)
        phi = PhiSpec(0.75).values(g)
        exact = float(np.sum(convolve(reflect(m.sample(g)), phi, g) ** 2) * g.cell)
        n = 600
        vals = np.array([np.sum(sample_mollified_noise(g, m, 7, i).values * phi) * g.cell for i in range(n)])
        sq = vals**2
        assert abs(sq.mean() - exact) <= 3 * sq.std(ddof=1) / np.sqrt(n)

        # FFT convolution against an explicit periodic sum on a coarse grid
        cg = Grid(nx=12, nt=16, dt=1.13 / 16)
        rng = np.random.default_rng(0)
        k, f = rng.standard_normal(cg.shape), rng.standard_normal(cg.shape)
        idx_t = (np.arange(cg.nt)[:, None] - np.arange(cg.nt)[None, :]) % cg.nt
        idx_x = (np.arange(cg.nx)[:, None] - np.arange(cg.nx)[None, :]) % cg.nx
        brute = np.einsum("ipjq,pq->ij", k[idx_t][:, :, idx_x], f) * cg.cell
        assert np.max(np.abs(convolve(k, f, cg) - brute)) < 1e-10

        # Wick pairing counts (m-1)!!
        for m_, want in ((2, 1), (4, 3), (6, 15), (8, 105), (3, 0)):
            assert len(perfect_matchings(list(range(m_)))) == want

        # falling-factorial Malliavin term counts
        for tau in enumerate_negative():
            mm = xi_count(tau)
            for kk in range(mm + 1):
                assert term_count(malliavin_expand(tau, kk)) == perm(mm, kk)
