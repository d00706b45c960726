"""``bhzkit`` command line: catalogs, the symbolic battery and numeric runs.

Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 resolution
error or (with ``--strict``) an enumeration that hit its caps.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.stats import linregress

from .trees import TermSyntaxError, format_tree, noise_count, parse_tree

log = logging.getLogger("bhzkit")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOLUTION = 0, 1, 2, 3
OUT_ENV = "BHZKIT_OUT"
DEFAULT_OUT = "bhzkit-out"


class ConfigError(ValueError):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _fraction_list(text: str) -> list:
    return [_fraction(t) for t in text.split(",") if t.strip()]


@dataclass
class RunConfig:
    """Everything a run depends on; written verbatim into the manifest."""

    command: str
    subcommand: str | None = None
    kappa: str = "1/100"
    max_noises: int = 4
    max_poly: int = 1
    derivative: int = 0
    tree: str | None = None
    mirror: str | None = None
    degree_table: str = "calibrated"
    grid: str | None = None
    eps: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    samples: int | None = None
    seed: int = 0
    engine: str = "auto"
    asymmetric: bool = False
    strict: bool = False
    out: str = DEFAULT_OUT

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        out = ns.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
        return cls(
            command=ns.command,
            subcommand=getattr(ns, "experiment", None),
            kappa=str(ns.kappa),
            max_noises=getattr(ns, "max_noises", 4),
            max_poly=getattr(ns, "max_poly", 1),
            derivative=getattr(ns, "derivative", 0),
            tree=getattr(ns, "tree", None),
            mirror=getattr(ns, "mirror", None),
            degree_table=getattr(ns, "degree_table", "calibrated"),
            grid=getattr(ns, "grid", None),
            eps=[str(e) for e in (getattr(ns, "eps", None) or [])],
            lambdas=[str(v) for v in (getattr(ns, "lam", None) or [])],
            samples=getattr(ns, "samples", None),
            seed=getattr(ns, "seed", 0),
            engine=getattr(ns, "engine", "auto"),
            asymmetric=getattr(ns, "asymmetric", False),
            strict=getattr(ns, "strict", False),
            out=str(out),
        )

    def to_dict(self) -> dict:
        return asdict(self)


class Run:
    """Output directory bookkeeping plus the manifest written at the end."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.stem = cfg.command if cfg.subcommand is None else f"{cfg.command}-{cfg.subcommand}"
        self.files = []
        self.results = {}
        self.t0 = time.perf_counter()

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.files.append(p.name)
        return p

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text)
        return p

    def write_csv(self, rows: list, columns: list, name: str | None = None) -> Path:
        p = self.path(name or f"{self.stem}.csv")
        with p.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=columns)
            w.writeheader()
            for r in rows:
                w.writerow({k: r.get(k, "") for k in columns})
        return p

    def finish(self, status: int) -> int:
        from . import __version__

        manifest = {
            "tool": "bhzkit",
            "version": __version__,
            "config": self.cfg.to_dict(),
            "exit_status": status,
            "seconds": round(time.perf_counter() - self.t0, 3),
            "outputs": self.files,
            "results": self.results,
        }
        p = self.dir / f"{self.stem}.manifest.json"
        p.write_text(json.dumps(manifest, indent=2, default=str))
        return status


# --------------------------------------------------------------------------
# catalog


def cmd_catalog(cfg: RunConfig) -> int:
    from .rules import catalog_document, catalog_report, compare_with_expected, derivative_catalog, enumerate_negative

    kappa = Fraction(cfg.kappa)
    run = Run(cfg)
    base = enumerate_negative(cfg.max_noises, cfg.max_poly, kappa)
    if cfg.derivative:
        cat = derivative_catalog(base, cfg.derivative)
        tags = [f"Xi{j}" for j in range(1, cfg.derivative + 1)]
        bad = [format_tree(t) for t in cat if any(t.noise_tags().count(x) != 1 for x in tags)]
        check = {"ok": not bad, "bad": bad}
    else:
        cat = base
        check = compare_with_expected(base)
    doc = catalog_document(cat, kappa)
    run.write_text(f"{run.stem}.txt", doc)
    report = catalog_report(cat, kappa)
    report["check"] = check
    report["truncated"] = base.truncated
    run.write_text(f"{run.stem}.json", json.dumps(report, indent=2))
    rows = [
        {"homogeneity": g["homogeneity"], "value": g["value"], "count": g["count"], "term": t["term"], "noises": t["noises"]}
        for g in report["groups"]
        for t in g["trees"]
    ]
    run.write_csv(rows, ["homogeneity", "value", "count", "term", "noises"])
    print(doc)
    sizes = ", ".join(f"{g['homogeneity']}: {g['count']}" for g in report["groups"])
    print(f"total {report['total']} trees ({sizes}); max noises {report['max_noise_count']}")
    run.results = {"total": report["total"], "check": check, "truncated": base.truncated}
    if not check["ok"]:
        print(f"expected-catalog check FAILED: {json.dumps(check)}", file=sys.stderr)
        return run.finish(EXIT_FAIL)
    if base.truncated and cfg.strict:
        print("enumeration caps exhausted: negative trees exist beyond the caps", file=sys.stderr)
        return run.finish(EXIT_RESOLUTION)
    if base.truncated:
        log.warning("caps exclude further negative trees (rerun with larger caps or --strict to fail)")
    return run.finish(EXIT_OK)


# --------------------------------------------------------------------------
# verify


def cmd_verify(cfg: RunConfig) -> int:
    from .graphs import mirror_graph, to_dot
    from .powercount import DEGREE_TABLES, power_count
    from .rules import enumerate_negative
    from .verify import run_battery

    table = DEGREE_TABLES[cfg.degree_table]
    run = Run(cfg)
    trees = None
    if cfg.tree:
        tau = parse_tree(cfg.tree)
        trees = [tau]
        g = mirror_graph(tau)
        run.write_text(f"{run.stem}-mirror.dot", to_dot(g, "mirror"))
        rep = power_count(g, table)
        run.results["power_count"] = {
            "tree": format_tree(tau),
            "alpha": rep.alpha,
            "integrability": [str(v) for v in rep.integrability_violations],
            "recentering": [str(v) for v in rep.recentering_violations],
        }
    else:
        trees = list(enumerate_negative(cfg.max_noises, cfg.max_poly, Fraction(cfg.kappa)))
    results = run_battery(table=table, trees=trees)
    rows = []
    for r in results:
        rows.append({"check": r.name, "passed": int(r.passed), "checked": r.checked, "failures": len(r.failures), "seconds": round(r.seconds, 3)})
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark:4} {r.name:20} checked={r.checked}")
        for f in r.failures:
            print(f"     {f}")
    run.write_csv(rows, ["check", "passed", "checked", "failures", "seconds"])
    run.results["checks"] = [r.to_dict() for r in results]
    run.write_text(f"{run.stem}.json", json.dumps(run.results, indent=2, default=str))
    return run.finish(EXIT_OK if all(r.passed for r in results) else EXIT_FAIL)


# --------------------------------------------------------------------------
# numeric experiments


def _grid_scales(cfg: RunConfig, nx=None, dt=None):
    from .numerics.grid import WINDOW, Grid

    if cfg.grid is None:
        return nx, dt
    g = Grid.parse(cfg.grid, WINDOW)
    return g.nx, g.dt


def _one(values, default, name):
    if not values:
        return default
    if len(values) != 1:
        raise ConfigError(f"{name} takes a single value here")
    return float(Fraction(values[0]))


def _floats(values, default):
    return [float(Fraction(v)) for v in values] if values else list(default)


def _numeric_scaling(cfg: RunConfig, run: Run) -> int:
    from .numerics.experiments import DEFAULT_LAMBDAS, ScalingFit

    nx, dt = _grid_scales(cfg)
    est = ScalingFit(
        tree=cfg.tree or "Xi*I[Xi]",
        lambdas=_floats(cfg.lambdas, DEFAULT_LAMBDAS),
        n_samples=cfg.samples or 200,
        seed=cfg.seed,
        eps=_one(cfg.eps, 1 / 128, "--eps"),
        nx=nx,
        dt=dt,
        engine=cfg.engine,
        symmetric=not cfg.asymmetric,
    ).fit()
    res = est.result_
    run.write_csv(list(res.rows()), ["lambda", "l2_norm", "mean"])
    run.results = res.to_dict()
    print(f"engine {res.engine}, grid {est.grid_.nx}x{est.grid_.nt} dt={est.grid_.dt:.3g}")
    for r in res.rows():
        print(f"lambda={r['lambda']:<8.4g} ||.||_L2={r['l2_norm']:.5g}  mean={r['mean']:+.3g}")
    print(f"slope {res.slope:+.3f} +- {res.slope_stderr:.3f}")
    return EXIT_OK


def _numeric_epsilon(cfg: RunConfig, run: Run) -> int:
    from .numerics.experiments import EpsilonProbe, mollifier_difference_norm

    nx, dt = _grid_scales(cfg, 256, 1 / 4096)
    est = EpsilonProbe(
        tree=cfg.tree or "Xi*I[Xi]",
        eps_list=_floats(cfg.eps, (1 / 4, 1 / 8, 1 / 16)),
        lam=_one(cfg.lambdas, 1.0, "--lambda"),
        n_samples=cfg.samples or 200,
        seed=cfg.seed,
        nx=nx,
        dt=dt,
    ).fit()
    rows = []
    for r in est.table_:
        r = dict(r)
        r["mollifier_norm"] = mollifier_difference_norm(r["eps"], r["eps_prime"])
        rows.append(r)
        print(f"eps={r['eps']:<8.4g} eps'={r['eps_prime']:<8.4g} diff={r['diff_norm']:.4g} +- {r['stderr']:.2g}  mollifier={r['mollifier_norm']:.4g}")
    run.write_csv(rows, ["eps", "eps_prime", "diff_norm", "stderr", "mollifier_norm"])
    run.results = {"rows": rows, "strictly_decreasing": est.strictly_decreasing}
    print("strictly decreasing" if est.strictly_decreasing else "NOT strictly decreasing")
    return EXIT_OK if est.strictly_decreasing else EXIT_FAIL


def _numeric_characters(cfg: RunConfig, run: Run) -> int:
    from .hopf import character_vanishes
    from .numerics.characters import STANDARD_SYMBOLS, CharacterTable
    from .numerics.experiments import full_grid_for
    from .numerics.grid import MollifierSpec

    eps = _one(cfg.eps, 1 / 8, "--eps")
    nx, dt = _grid_scales(cfg)
    grid = full_grid_for(eps, nx, dt)
    m = MollifierSpec(eps, symmetric=not cfg.asymmetric)
    symbols = [cfg.tree] if cfg.tree else list(STANDARD_SYMBOLS)
    table = CharacterTable.compute(grid, m, symbols)
    rows = []
    status = EXIT_OK
    for t, v in table.items():
        reason = character_vanishes(t).reason
        odd_x = t == parse_tree("I'[Xi]*I'[Xi@X^(0,1)]")
        rows.append({"symbol": format_tree(t), "eps": eps, "value": v, "vanishing_rule": reason})
        print(f"l({format_tree(t)}) = {v:+.6e}")
        if odd_x and m.symmetric and abs(v) > 1e-10:
            print("  symmetric mollifier should give zero here", file=sys.stderr)
            status = EXIT_FAIL
    run.write_csv(rows, ["symbol", "eps", "value", "vanishing_rule"])
    run.results = {"grid": [grid.nx, grid.nt, grid.dt], "values": rows}
    return status


def _numeric_graph_integral(cfg: RunConfig, run: Run) -> int:
    from .graphs import mirror_graph, to_dot
    from .numerics.experiments import DEFAULT_LAMBDAS
    from .numerics.graphint import graph_integral
    from .numerics.grid import WINDOW, Grid
    from .powercount import scaling_exponent

    tau = parse_tree(cfg.mirror or cfg.tree or "Xi*I[Xi]")
    g = mirror_graph(tau)
    run.write_text(f"{run.stem}.dot", to_dot(g, "mirror"))
    nx, dt = _grid_scales(cfg, 256, 1 / 8192)
    grid = Grid.for_scales(nx, dt, WINDOW)
    lams = _floats(cfg.lambdas, DEFAULT_LAMBDAS)
    vals = [graph_integral(g, lam, grid) for lam in lams]
    alpha = scaling_exponent(g)
    slope = float(linregress(np.log(lams), np.log(np.abs(vals))).slope)
    rows = [{"lambda": lam, "value": v} for lam, v in zip(lams, vals)]
    run.write_csv(rows, ["lambda", "value"])
    for r in rows:
        print(f"lambda={r['lambda']:<8.4g} I={r['value']:+.6e}")
    ok = abs(slope - alpha) <= 0.25
    print(f"slope {slope:+.3f} vs alpha {alpha} ({'ok' if ok else 'off'})")
    run.results = {"tree": format_tree(tau), "alpha": alpha, "slope": slope, "rows": rows}
    return EXIT_OK if ok else EXIT_FAIL


NUMERIC = {
    "scaling": _numeric_scaling,
    "epsilon": _numeric_epsilon,
    "characters": _numeric_characters,
    "graph-integral": _numeric_graph_integral,
}


def cmd_numeric(cfg: RunConfig) -> int:
    run = Run(cfg)
    status = NUMERIC[cfg.subcommand](cfg, run)
    return run.finish(status)


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kappa", type=_fraction, default=Fraction(1, 100), help="homogeneity offset (rational)")
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("-v", "--verbose", action="store_true")

    caps = argparse.ArgumentParser(add_help=False)
    caps.add_argument("--max-noises", type=int, default=4)
    caps.add_argument("--max-poly", type=int, default=1)

    p = argparse.ArgumentParser(prog="bhzkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("catalog", parents=[common, caps], help="enumerate negative trees")
    c.add_argument("--derivative", type=int, default=0, help="apply D_Xi_N ... D_Xi_1")
    c.add_argument("--strict", action="store_true", help="exit 3 when the caps exclude negative trees")

    v = sub.add_parser("verify", parents=[common, caps], help="symbolic invariant battery")
    v.add_argument("--tree", help="restrict the per-tree checks to one tree")
    v.add_argument("--degree-table", choices=("calibrated", "printed"), default="calibrated")

    n = sub.add_parser("numeric", help="Monte Carlo and quadrature experiments")
    nsub = n.add_subparsers(dest="experiment", required=True)
    for name in NUMERIC:
        q = nsub.add_parser(name, parents=[common])
        q.add_argument("--tree")
        q.add_argument("--grid", help="NXxNT over the 1.13 time window")
        q.add_argument("--eps", type=_fraction_list, default=None, help="comma-separated rationals")
        q.add_argument("--lambda", dest="lam", type=_fraction_list, default=None, help="comma-separated rationals")
        q.add_argument("--samples", type=int, default=None)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--asymmetric", action="store_true", help="use the skewed mollifier")
        if name == "scaling":
            q.add_argument("--engine", choices=("auto", "two-scale", "full"), default="auto")
        if name == "graph-integral":
            q.add_argument("--mirror", help="tree whose mirror graph is integrated")
    return p


def main(argv=None) -> int:
    from .numerics.characters import UnsupportedSymbol
    from .numerics.grid import ResolutionError, SupportError
    from .numerics.graphint import GraphSizeError, UnsupportedGraph
    from .numerics.model import ModelError

    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.from_args(ns)
        if ns.command == "catalog":
            return cmd_catalog(cfg)
        if ns.command == "verify":
            return cmd_verify(cfg)
        return cmd_numeric(cfg)
    except (ResolutionError, SupportError) as e:
        print(f"resolution error: {e}", file=sys.stderr)
        return EXIT_RESOLUTION
    except (TermSyntaxError, ConfigError, UnsupportedSymbol, UnsupportedGraph, GraphSizeError, ModelError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
