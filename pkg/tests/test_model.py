"""Characters, model evaluation and the Gaussian (Wick) moment oracles."""

import numpy as np
import pytest
from scipy.fft import irfft2, rfft2

from bhzkit.numerics.characters import (
    STANDARD_SYMBOLS,
    CharacterTable,
    MissingCharacter,
    UnsupportedSymbol,
    compute_character,
)
from bhzkit.numerics.experiments import full_grid_for
from bhzkit.numerics.grid import MollifierSpec
from bhzkit.numerics.grid import TestFunctionSpec as PhiSpec
from bhzkit.numerics.kernels import build_kernels
from bhzkit.numerics.model import ModelError, evaluate_model
from bhzkit.numerics.noise import convolve, sample_mollified_noise
from bhzkit.trees import parse_tree

T = parse_tree
EPS = 1 / 8


@pytest.fixture(scope="module")
def setup():
    g = full_grid_for(EPS)
    m = MollifierSpec(EPS)
    ks = build_kernels(g)
    return g, m, ks, CharacterTable.compute(g, m, kernels=ks)


class TestCharacters:
    def test_symmetric_zero(self, setup):
        _, _, _, chars = setup
        assert abs(chars[T("I'[Xi]*I'[Xi@X^(0,1)]")]) < 1e-12

    def test_asymmetric_nonzero(self, setup):
        g, _, ks, _ = setup
        v = compute_character(T("I'[Xi]*I'[Xi@X^(0,1)]"), g, MollifierSpec(EPS, symmetric=False), ks)
        assert abs(v) > 1e-4

    def test_signs(self, setup):
        _, _, _, chars = setup
        assert chars[T("Xi*I[Xi]")] < 0 and chars[T("I'[Xi]*I'[Xi]")] < 0

    def test_vanishing_symbols(self, setup):
        g, m, ks, _ = setup
        for s in ("Xi", "I'[Xi*I[Xi]]", "Xi1*I[Xi]"):
            assert compute_character(T(s), g, m, ks) == 0.0

    def test_unsupported(self, setup):
        g, m, ks, _ = setup
        with pytest.raises(UnsupportedSymbol):
            compute_character(T("I'[Xi]*I'[Xi*I[I'[Xi]*I'[Xi]]]"), g, m, ks)

    def test_missing(self, setup):
        with pytest.raises(MissingCharacter):
            setup[3][T("Xi*I[Xi]*I[Xi]*I[Xi]")]

    def test_grid_refinement(self):
        m = MollifierSpec(EPS)
        a = CharacterTable.compute(full_grid_for(EPS, 64, 1 / 256), m)
        b = CharacterTable.compute(full_grid_for(EPS, 128, 1 / 256), m)
        for s in STANDARD_SYMBOLS[:2]:
            t = T(s)
            assert abs(a[t] - b[t]) <= 0.05 * abs(b[t])


class TestEvaluate:
    def test_noise_leaf(self, setup):
        g, m, ks, _ = setup
        f = sample_mollified_noise(g, m, 0, 0)
        assert np.array_equal(evaluate_model(T("Xi"), f, kernels=ks).values, f.values)

    def test_planted_is_convolution(self, setup):
        g, m, ks, _ = setup
        f = sample_mollified_noise(g, m, 0, 1)
        out = evaluate_model(T("I'[Xi]"), f, kernels=ks).values
        assert np.allclose(out, convolve(ks["DK"], f.values, g))

    def test_recentred_vanishes_at_base_point(self, setup):
        g, m, ks, _ = setup
        f = sample_mollified_noise(g, m, 0, 2)
        z = (g.nt // 2, g.nx // 3)
        out = evaluate_model(T("I[Xi]"), f, "recentered", z=z, kernels=ks).values
        assert out[z] == 0.0

    def test_renormalised_shift(self, setup):
        g, m, ks, chars = setup
        f = sample_mollified_noise(g, m, 0, 3)
        naive = evaluate_model(T("Xi*I[Xi]"), f, kernels=ks).values
        ren = evaluate_model(T("Xi*I[Xi]"), f, "renormalized", chars=chars, kernels=ks).values
        assert np.allclose(ren - naive, chars[T("Xi*I[Xi]")])

    def test_errors(self, setup):
        g, m, ks, chars = setup
        f = sample_mollified_noise(g, m, 0, 0)
        with pytest.raises(ModelError):
            evaluate_model(T("Xi"), f, "bogus")
        with pytest.raises(ModelError):
            evaluate_model(T("Xi*I'[Xi]"), f, kernels=ks)
        with pytest.raises(ModelError):
            evaluate_model(T("Xi"), f, "recentered", kernels=ks)
        with pytest.raises(ModelError):
            evaluate_model(T("Xi*I[Xi]"), f, "renormalized", kernels=ks)
        with pytest.raises(ModelError):
            evaluate_model(T("Xi*I[Xi2]"), f, kernels=ks)


def _autocorr(a_hat, b_hat, g):
    """``C(u) = sum_v a(v) b(v - u) dt dx``."""
    return irfft2(a_hat * np.conj(b_hat), s=g.shape) * g.cell


class TestWickOracles:
    N = 300

    def test_naive_mean_is_minus_character(self, setup):
        g, m, ks, chars = setup
        y = (g.nt // 2, g.nx // 2)
        vals = np.array(
            [evaluate_model(T("Xi*I[Xi]"), sample_mollified_noise(g, m, 11, i), kernels=ks).values[y] for i in range(self.N)]
        )
        se = vals.std(ddof=1) / np.sqrt(self.N)
        assert abs(vals.mean() + chars[T("Xi*I[Xi]")]) <= 3 * se

    def test_second_moment(self, setup):
        """E<Pi tau, phi>^2 = sum_u Phi(u) (C_ff C_gg + C_fg C_gf)(u) for tau = Xi I(Xi)."""
        g, m, ks, chars = setup
        rho = m.sample(g)
        rh = rfft2(rho)
        gh = rfft2(convolve(ks["K"], rho, g))
        phi = PhiSpec(0.5).values(g)
        ph = rfft2(phi)
        Phi = _autocorr(ph, ph, g)
        cov = _autocorr(rh, rh, g) * _autocorr(gh, gh, g) + _autocorr(rh, gh, g) * _autocorr(gh, rh, g)
        exact = float(np.sum(Phi * cov) * g.cell)
        vals = []
        for i in range(self.N):
            out = evaluate_model(T("Xi*I[Xi]"), sample_mollified_noise(g, m, 12, i), "renormalized", chars=chars, kernels=ks)
            vals.append(np.sum(out.values * phi) * g.cell)
        sq = np.array(vals) ** 2
        assert abs(sq.mean() - exact) <= 3 * sq.std(ddof=1) / np.sqrt(self.N)
