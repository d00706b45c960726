import numpy as np
import pytest

from bhzkit.numerics.characters import UnsupportedSymbol, compute_character
from bhzkit.numerics.experiments import full_grid_for
from bhzkit.numerics.grid import MollifierSpec, ResolutionError
from bhzkit.numerics.kernels import build_kernels
from bhzkit.numerics.model import ModelError, evaluate_model
from bhzkit.numerics.noise import convolve
from bhzkit.numerics.twoscale import TwoScaleEngine, TwoScaleGrid
from bhzkit.trees import parse_tree

EPS = 1 / 32


@pytest.fixture(scope="module")
def engine():
    return TwoScaleEngine(TwoScaleGrid(nx=int(4 / EPS), dt=EPS**2 / 4, eps=EPS))


def test_layout(engine):
    spec = engine.spec
    lo, hi = spec.valid_rows()
    assert 0 <= lo < spec.z[0] < hi <= engine.fine.nt
    assert engine.coarse.dt == pytest.approx(spec.ratio * spec.dt)


def test_coarse_step_guard():
    with pytest.raises(ResolutionError):
        TwoScaleEngine(TwoScaleGrid(nx=32, dt=1 / 256, eps=1 / 8))


def test_deterministic(engine):
    a = engine.sample(3, 1).conv((0, 0))
    b = engine.sample(3, 1).conv((0, 0))
    assert np.array_equal(a, b)


def test_variance_matches_full_grid(engine):
    """Var (d^a K * zeta)(z) agrees with the exact full-grid value."""
    n = 300
    z = engine.spec.z
    g = full_grid_for(EPS, int(8 / EPS))
    ks = build_kernels(g)
    rho = MollifierSpec(EPS).sample(g)
    samples = [engine.sample(0, i) for i in range(n)]
    for name, a in (("K", (0, 0)), ("DK", (0, 1))):
        v = np.array([s.conv(a)[z] for s in samples]) ** 2
        exact = np.sum(convolve(ks[name], rho, g) ** 2) * g.cell
        assert abs(v.mean() - exact) <= 3 * v.std(ddof=1) / np.sqrt(n)


def test_character_uses_short_range_kernel(engine):
    chars = engine.characters(["Xi*I[Xi]"])
    g = full_grid_for(EPS, int(8 / EPS))
    full = compute_character(parse_tree("Xi*I[Xi]"), g, MollifierSpec(EPS))
    assert chars[parse_tree("Xi*I[Xi]")] == pytest.approx(full, rel=0.02)


def test_unsupported_character(engine):
    with pytest.raises(UnsupportedSymbol):
        engine.characters(["I'[Xi]*I'[Xi]"])


def test_nested_tree_rejected(engine):
    with pytest.raises(ModelError):
        evaluate_model(parse_tree("Xi*I[Xi*I[Xi]]"), engine.sample(0, 0))
