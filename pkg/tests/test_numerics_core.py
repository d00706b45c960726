"""Grid, kernel and noise checks, including the brute-force and Ito-isometry oracles."""

import numpy as np
import pytest

from bhzkit.numerics.grid import (
    BUMP_INTEGRAL,
    Grid,
    MollifierSpec,
    ResolutionError,
    SupportError,
    TestFunctionSpec as PhiSpec,
    bump,
    pair_with_test,
)
from bhzkit.numerics.kernels import build_kernels, cutoff, heat
from bhzkit.numerics.noise import convolve, noise_covariance, reflect, rng_for, sample_mollified_noise, white_noise

COARSE = Grid(nx=16, nt=24, dt=1.13 / 24)


def brute_convolution(k, f, grid):
    """``sum_w k(y - w) f(w) dt dx`` by explicit loops over the periodic grid."""
    nt, nx = grid.shape
    out = np.zeros(grid.shape)
    for i in range(nt):
        for j in range(nx):
            acc = 0.0
            for p in range(nt):
                for q in range(nx):
                    acc += k[(i - p) % nt, (j - q) % nx] * f[p, q]
            out[i, j] = acc * grid.cell
    return out


class TestGrid:
    def test_parse(self):
        g = Grid.parse("64x320")
        assert g.shape == (320, 64) and g.length == pytest.approx(1.13)

    def test_parse_bad(self):
        with pytest.raises(ValueError):
            Grid.parse("64by320")

    def test_lags_signed(self):
        g = Grid(nx=8, nt=10, dt=0.1)
        assert g.x_lags[0] == 0 and g.x_lags.min() < 0
        assert g.t_lags[1] == pytest.approx(0.1) and g.t_lags[-1] == pytest.approx(-0.1)

    def test_resolution_rule(self):
        g = Grid(nx=32, nt=100, dt=1.13 / 100)
        with pytest.raises(ResolutionError, match="Refine"):
            g.check_scale(1 / 8)
        Grid(nx=32, nt=400, dt=1 / 256).check_scale(1 / 8)

    def test_bump(self):
        assert bump(np.array(0.0)) == 1.0
        assert bump(np.array([1.0, -1.5])).tolist() == [0.0, 0.0]
        assert BUMP_INTEGRAL == pytest.approx(1.2069, abs=1e-4)

    def test_mollifier_normalised(self):
        g = Grid(nx=64, nt=400, dt=1 / 256)
        for sym in (True, False):
            rho = MollifierSpec(1 / 8, symmetric=sym).sample(g)
            assert rho.sum() * g.cell == pytest.approx(1.0)

    def test_mollifier_support(self):
        m = MollifierSpec(1 / 8)
        assert m.profile(np.array(m.a * 1.01), np.array(0.0)) == 0.0
        assert m.profile(np.array(0.0), np.array(0.0)) == 1.0

    def test_test_function_unit_integral(self):
        g = Grid(nx=128, nt=1024, dt=1.13 / 1024)
        phi = PhiSpec(0.5).values(g)
        assert phi.sum() * g.cell == pytest.approx(1.0, rel=1e-3)
        assert pair_with_test(np.ones(g.shape), PhiSpec(0.5), g) == pytest.approx(1.0, rel=1e-3)

    def test_test_function_errors(self):
        g = Grid(nx=16, nt=64, dt=1.13 / 64)
        with pytest.raises(ResolutionError):
            PhiSpec(0.125).values(g)
        with pytest.raises(SupportError):
            PhiSpec(3.0).values(g)


@pytest.fixture(scope="module")
def ks():
    return build_kernels(Grid(nx=64, nt=320, dt=1.25 / 320))


class TestKernels:
    def test_heat_unit_mass(self):
        x = np.linspace(-0.5, 0.5, 2001)[:-1]
        for t in (0.005, 0.3):
            assert heat(np.array([t]), x).sum() * (x[1] - x[0]) == pytest.approx(1.0, rel=1e-8)

    def test_heat_branches_agree(self):
        x = np.linspace(-0.5, 0.5, 33)
        from bhzkit.numerics import kernels

        t = np.array([kernels._SPLIT * 0.999, kernels._SPLIT * 1.001])
        a, b = heat(t, x)
        assert np.allclose(a, b, rtol=1e-2)

    def test_cutoff_support(self):
        assert cutoff(np.array([1.0]), np.array([0.0]))[0, 0] == 0.0
        assert cutoff(np.array([0.01]), np.array([0.0]))[0, 0] == 1.0

    def test_null_mean(self, ks):
        assert abs(ks["K"].sum() * ks.grid.cell) < 1e-8

    def test_causal(self, ks):
        assert np.all(ks["K"][0] == 0)
        late = ks.grid.t_lags >= 1.0
        assert np.all(ks["K"][late] == 0)

    def test_dk_exactly_odd(self, ks):
        dk = ks["DK"]
        assert np.allclose(dk, -np.roll(dk[:, ::-1], 1, axis=1), rtol=0, atol=1e-12)
        assert np.allclose(ks["K"], np.roll(ks["K"][:, ::-1], 1, axis=1))

    def test_constant_near_one(self, ks):
        assert ks.c == pytest.approx(1.0, abs=1e-4)


class TestNoise:
    def test_rng_streams(self):
        a = rng_for(3, 0).standard_normal(4)
        assert np.array_equal(a, rng_for(3, 0).standard_normal(4))
        assert not np.array_equal(a, rng_for(3, 1).standard_normal(4))

    def test_white_noise_variance(self):
        g = Grid(nx=64, nt=256, dt=1 / 256)
        w = white_noise(g, 0)
        assert np.var(w) * g.cell == pytest.approx(1.0, rel=0.02)

    def test_fft_matches_brute_force(self):
        rng = np.random.default_rng(1)
        k = rng.standard_normal(COARSE.shape)
        f = rng.standard_normal(COARSE.shape)
        assert np.max(np.abs(convolve(k, f, COARSE) - brute_convolution(k, f, COARSE))) < 1e-10

    def test_kernel_convolution_matches_brute_force(self):
        ks = build_kernels(COARSE)
        f = white_noise(COARSE, 2)
        for name in ("K", "DK"):
            assert np.max(np.abs(convolve(ks[name], f, COARSE) - brute_convolution(ks[name], f, COARSE))) < 1e-10

    def test_reflect(self):
        k = np.arange(12.0).reshape(3, 4)
        r = reflect(k)
        assert r[0, 0] == k[0, 0] and r[1, 1] == k[-1, -1] and np.array_equal(reflect(r), k)

    def test_ito_isometry(self):
        """Var <zeta, phi> = || rho^- * phi ||^2 within three standard errors."""
        g = Grid(nx=32, nt=160, dt=1.13 / 160)
        m = MollifierSpec(1 / 4)
        phi = PhiSpec(0.75).values(g)
        exact = float(np.sum(convolve(reflect(m.sample(g)), phi, g) ** 2) * g.cell)
        n = 600
        vals = np.array([np.sum(sample_mollified_noise(g, m, 7, i).values * phi) * g.cell for i in range(n)])
        second = vals**2
        se = second.std(ddof=1) / np.sqrt(n)
        assert abs(second.mean() - exact) <= 3 * se
        assert abs(vals.mean()) <= 3 * vals.std(ddof=1) / np.sqrt(n)

    def test_covariance_is_autocorrelation(self):
        g = Grid(nx=64, nt=400, dt=1 / 256)
        m = MollifierSpec(1 / 8)
        rho = m.sample(g)
        cov = noise_covariance(g, m)
        assert cov[0, 0] == pytest.approx(np.sum(rho**2) * g.cell)
        assert np.allclose(cov, reflect(cov))
