"""Monte Carlo experiments wrapped as scikit-learn style estimators."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate
from scipy.stats import linregress
from sklearn.base import BaseEstimator

from ..trees import Tree, format_tree, parse_tree
from .characters import CharacterTable
from .grid import BUMP_INTEGRAL, WINDOW, Grid, GridField, MollifierSpec, TestFunctionSpec, bump
from .kernels import build_kernels
from .model import evaluate_model
from .noise import convolve, white_noise
from .twoscale import TwoScaleEngine, TwoScaleGrid

DEFAULT_LAMBDAS = (0.5, 0.25, 0.125, 0.0625)


def _tree(t) -> Tree:
    return parse_tree(t) if isinstance(t, str) else t


def full_grid_for(eps: float, nx: int | None = None, dt: float | None = None, length: float = WINDOW) -> Grid:
    """Uniform grid resolving ``eps`` by 8 cells in space and 4 in time (unless given)."""
    nx = int(round(8 / eps)) if nx is None else int(nx)
    dt = eps**2 / 4 if dt is None else float(dt)
    return Grid.for_scales(nx, dt, length)


def base_point(grid: Grid, half: float):
    """A base point late in the window, leaving room for the test support."""
    back = int(np.ceil((half + 0.02) / grid.dt))
    return (grid.nt - back, grid.nx // 2)


@dataclass
class ScalingFitResult:
    lambdas: list
    norms: list
    means: list
    slope: float
    slope_stderr: float
    samples: int
    seed: int
    tree: str = ""
    eps: float = 0.0
    engine: str = ""

    def rows(self):
        for lam, n, m in zip(self.lambdas, self.norms, self.means):
            yield {"lambda": lam, "l2_norm": n, "mean": m}

    def to_dict(self):
        return asdict(self)


def _supports_two_scale(tau: Tree) -> bool:
    from ..trees import XI

    return tau.noise == "Xi" and all(c == XI for _, c in tau.children)


class _Sampler:
    """Shared field/evaluation plumbing for both grid engines."""

    def __init__(self, tau, eps, nx, dt, engine, half, symmetric=True):
        self.tau = tau
        self.mollifier = MollifierSpec(eps, symmetric)
        if engine == "auto":
            engine = "two-scale" if _supports_two_scale(tau) else "full"
        self.engine = engine
        if engine == "two-scale":
            spec = TwoScaleGrid(
                nx=int(round(4 / eps)) if nx is None else nx,
                dt=eps**2 / 4 if dt is None else dt,
                eps=eps,
                half=half,
                symmetric=symmetric,
            )
            self.ts = TwoScaleEngine(spec)
            self.grid = spec.fine
            self.z = spec.z
            self.kernels = self.ts.near
        else:
            self.grid = full_grid_for(eps, nx, dt)
            self.grid.check_scale(eps)
            self.z = base_point(self.grid, half)
            self.kernels = build_kernels(self.grid)
            self.rho = self.mollifier.sample(self.grid)

    def characters(self, symbols=None):
        from .characters import STANDARD_SYMBOLS

        if self.engine == "two-scale":
            return self.ts.characters(symbols or ("Xi*I[Xi]",))
        return CharacterTable.compute(self.grid, self.mollifier, symbols or STANDARD_SYMBOLS, self.kernels)

    def noise(self, seed, i, white=None):
        if self.engine == "two-scale":
            return self.ts.sample(seed, i)
        W = white_noise(self.grid, seed, i) if white is None else white
        return GridField(convolve(self.rho, W, self.grid), self.grid, role="noise")


class ScalingFit(BaseEstimator):
    """MC estimate of ``|| <Pi_z tau, phi^lam_z> ||_{L^2}`` per scale and its log-log slope.

    ``engine`` is ``"two-scale"`` (trees whose edges act on bare noises),
    ``"full"`` (uniform periodic grid) or ``"auto"``.
    """

    def __init__(
        self,
        tree="Xi*I[Xi]",
        lambdas=DEFAULT_LAMBDAS,
        n_samples=200,
        seed=0,
        eps=1 / 128,
        nx=None,
        dt=None,
        mode="renormalized",
        engine="auto",
        symmetric=True,
    ):
        self.tree = tree
        self.lambdas = lambdas
        self.n_samples = n_samples
        self.seed = seed
        self.eps = eps
        self.nx = nx
        self.dt = dt
        self.mode = mode
        self.engine = engine
        self.symmetric = symmetric

    def fit(self, X=None, y=None):
        tau = _tree(self.tree)
        lams = [float(l) for l in self.lambdas]
        half = max(l**2 / 8 for l in lams)
        s = _Sampler(tau, self.eps, self.nx, self.dt, self.engine, half, self.symmetric)
        chars = s.characters() if self.mode == "renormalized" else None
        phis = [TestFunctionSpec(l, s.z).values(s.grid) for l in lams]
        vals = np.empty((self.n_samples, len(lams)))
        for i in range(self.n_samples):
            f = s.noise(self.seed, i)
            out = evaluate_model(tau, f, self.mode, z=s.z, chars=chars).values
            vals[i] = [np.sum(out * p) * s.grid.cell for p in phis]
        self.samples_ = vals
        self.norms_ = np.sqrt(np.mean(vals**2, axis=0))
        self.means_ = vals.mean(axis=0)
        fit = linregress(np.log(lams), np.log(self.norms_))
        self.slope_ = float(fit.slope)
        self.slope_stderr_ = float(fit.stderr)
        self.engine_ = s.engine
        self.grid_ = s.grid
        self.result_ = ScalingFitResult(
            lambdas=lams,
            norms=[float(v) for v in self.norms_],
            means=[float(v) for v in self.means_],
            slope=self.slope_,
            slope_stderr=self.slope_stderr_,
            samples=self.n_samples,
            seed=self.seed,
            tree=format_tree(tau),
            eps=float(self.eps),
            engine=s.engine,
        )
        return self


class ModelEvaluator(BaseEstimator):
    """MC statistics of ``(Pi tau)(y)`` at a single point.

    ``fit`` stores the per-sample values, their mean and standard error.
    """

    def __init__(self, tree="Xi*I[Xi]", mode="renormalized", eps=1 / 8, nx=None, dt=None, n_samples=400, seed=0, z=None):
        self.tree = tree
        self.mode = mode
        self.eps = eps
        self.nx = nx
        self.dt = dt
        self.n_samples = n_samples
        self.seed = seed
        self.z = z

    def fit(self, X=None, y=None):
        tau = _tree(self.tree)
        s = _Sampler(tau, self.eps, self.nx, self.dt, "full", 0.0)
        chars = s.characters() if self.mode == "renormalized" else None
        point = s.z if self.z is None else tuple(self.z)
        base = point if self.mode == "recentered" else None
        vals = np.empty(self.n_samples)
        for i in range(self.n_samples):
            out = evaluate_model(tau, s.noise(self.seed, i), self.mode, z=base, chars=chars).values
            vals[i] = out[point]
        self.values_ = vals
        self.mean_ = float(vals.mean())
        self.stderr_ = float(vals.std(ddof=1) / np.sqrt(len(vals)))
        self.characters_ = chars
        return self

    def centered_within(self, k: float = 3.0) -> bool:
        return abs(self.mean_) <= k * self.stderr_


class EpsilonProbe(BaseEstimator):
    """Norms of ``<Pi^eps_z tau - Pi^eps'_z tau, phi^lam_z>`` for ``eps' = eps/2``, coupled noise."""

    def __init__(self, tree="Xi*I[Xi]", eps_list=(0.25, 0.125, 0.0625), lam=1.0, n_samples=200, seed=0, nx=256, dt=1 / 4096, mode="renormalized"):
        self.tree = tree
        self.eps_list = eps_list
        self.lam = lam
        self.n_samples = n_samples
        self.seed = seed
        self.nx = nx
        self.dt = dt
        self.mode = mode

    def fit(self, X=None, y=None):
        tau = _tree(self.tree)
        eps_all = sorted({float(e) for e in self.eps_list} | {float(e) / 2 for e in self.eps_list}, reverse=True)
        grid = full_grid_for(min(eps_all), self.nx, self.dt)
        for e in eps_all:
            grid.check_scale(e)
        z = base_point(grid, self.lam**2 / 8)
        ks = build_kernels(grid)
        phi = TestFunctionSpec(self.lam, z).values(grid)
        rhos, chars = {}, {}
        for e in eps_all:
            m = MollifierSpec(e)
            rhos[e] = m.sample(grid)
            chars[e] = CharacterTable.compute(grid, m, kernels=ks) if self.mode == "renormalized" else None
        pair = {}
        for i in range(self.n_samples):
            W = white_noise(grid, self.seed, i)
            for e in eps_all:
                f = GridField(convolve(rhos[e], W, grid), grid, role="noise")
                out = evaluate_model(tau, f, self.mode, z=z, chars=chars[e], kernels=ks).values
                pair.setdefault(e, []).append(np.sum(out * phi) * grid.cell)
        vals = {e: np.array(v) for e, v in pair.items()}
        table = []
        for e in sorted((float(x) for x in self.eps_list), reverse=True):
            d = vals[e] - vals[e / 2]
            table.append(
                {
                    "eps": e,
                    "eps_prime": e / 2,
                    "diff_norm": float(np.sqrt(np.mean(d**2))),
                    "stderr": float(np.std(d**2, ddof=1) / np.sqrt(len(d)) / (2 * np.sqrt(np.mean(d**2)))),
                }
            )
        self.values_ = vals
        self.table_ = table
        self.grid_ = grid
        return self

    @property
    def strictly_decreasing(self) -> bool:
        norms = [r["diff_norm"] for r in self.table_]
        return all(b < a for a, b in zip(norms, norms[1:]))


# --------------------------------------------------------------------------
# mollifier difference in a negative-index kernel norm


def _overlap_1d(scale_a: float, scale_b: float) -> float:
    """``int psi(u / scale_a) psi(u / scale_b) du``."""
    r = min(scale_a, scale_b)
    val, _ = integrate.quad(lambda u: float(bump(np.array(u / scale_a)) * bump(np.array(u / scale_b))), -r, r, limit=200)
    return val


def pair_mollifier_test(eps: float, lam: float) -> float:
    """``<rho^eps, phi^lam_0>`` by separable 1D quadrature (symmetric profile)."""
    m = MollifierSpec(eps)
    ft = _overlap_1d(m.a * eps**2, lam**2 / 8) / (m.a * eps**2 * BUMP_INTEGRAL) / (lam**2 / 8 * BUMP_INTEGRAL)
    fx = _overlap_1d(m.b * eps, lam / 4) / (m.b * eps * BUMP_INTEGRAL) / (lam / 4 * BUMP_INTEGRAL)
    return ft * fx


def mollifier_difference_norm(eps: float, eps_prime: float, eta: float = 0.5, lambdas=None) -> float:
    """``sup_lam lam^(3+eta) |<rho^eps - rho^eps', phi^lam>|`` over a dyadic-refined scale list."""
    if lambdas is None:
        lambdas = 2.0 ** (-np.arange(0, 64) / 4.0)
    if eps == eps_prime:
        return 0.0
    return float(
        max(l ** (3 + eta) * abs(pair_mollifier_test(eps, l) - pair_mollifier_test(eps_prime, l)) for l in lambdas)
    )
