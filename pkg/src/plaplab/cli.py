"""Configuration-driven command line: solve, eigen, sweeps, verify.

Runs are described by a JSON config with problem / grid / weight / solver /
experiment blocks; unknown keys are rejected so configs stay exact. Every
run writes a manifest (config echo + seed + versions) next to its outputs,
which suffices to reproduce the run bit for bit.

Exit codes: 0 success, 1 property failure (a verdict failed or a solve did
not converge), 2 configuration or regime error.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    DegenerateDomainError,
    InitializationError,
    ProjectionError,
    RegimeError,
    SignChangeError,
)
from .deadcore import (
    build_barrier,
    comparison_check,
    dead_core_region,
    make_barrier_spec,
    split_bumps,
    sweep_n,
)
from .fields import Field, field_to_csv
from .functionals import Problem, weighted_q_mass
from .grids import Grid, build_grid
from .solver import (
    SolveOptions,
    SolveReport,
    ground_state,
    positivity_report,
    second_solution,
)
from .spectrum import EigenReport, lambda_lower_star, lambda_star, principal_eigen
from .verify import (
    SweepResult,
    blowup_asymptote,
    monotonicity_sweep,
    positivity_delta_sweep,
    positivity_q_sweep,
    q_limit_lambda_star,
    uniqueness_multistart,
)
from .weights import DiskBump2D, NodalFile, TwoBump1D, Weight, build_weight

SUBCOMMANDS = (
    "solve", "solve-second", "eigen", "sweep-n", "sweep-lambda",
    "sweep-q", "sweep-delta", "deadcore-check", "verify",
)

CONFIG_ERRORS = (ConfigError, SignChangeError, RegimeError, ProjectionError,
                 InitializationError, DegenerateDomainError)


@dataclass
class RunConfig:
    problem: Problem
    opts: SolveOptions
    experiment: dict
    output_dir: Path
    raw: dict


def _take(block: dict, allowed: dict, context: str) -> dict:
    """Pull keys with defaults; reject anything unknown."""
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {sorted(unknown)}")
    out = {}
    for key, default in allowed.items():
        if key in block:
            out[key] = block[key]
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r} in {context}")
        else:
            out[key] = default
    return out


_REQUIRED = object()


def parse_grid(block: dict) -> Grid:
    vals = _take(block, {"dim": _REQUIRED, "extent": _REQUIRED,
                         "nodes": _REQUIRED, "bc": _REQUIRED}, "grid block")
    return build_grid(vals["dim"], vals["extent"], vals["nodes"], vals["bc"])


def parse_weight(block: dict, grid: Grid, config_dir: Path) -> Weight:
    family = block.get("family")
    if family == "two_bump_1d":
        vals = _take(block, {"family": _REQUIRED, "a_plus": _REQUIRED,
                             "a_minus": _REQUIRED, "delta": _REQUIRED},
                     "weight block")
        spec = TwoBump1D(a_plus=vals["a_plus"], a_minus=vals["a_minus"],
                         delta=vals["delta"])
    elif family == "disk_bump_2d":
        vals = _take(block, {"family": _REQUIRED, "center": _REQUIRED,
                             "radius": _REQUIRED, "a_plus": _REQUIRED,
                             "a_minus": _REQUIRED}, "weight block")
        spec = DiskBump2D(center=tuple(vals["center"]), radius=vals["radius"],
                          a_plus=vals["a_plus"], a_minus=vals["a_minus"])
    elif family == "nodal_file":
        vals = _take(block, {"family": _REQUIRED, "path": _REQUIRED},
                     "weight block")
        path = Path(vals["path"])
        if not path.is_absolute():
            path = config_dir / path
        spec = NodalFile(path=str(path))
    else:
        raise ConfigError(
            f"weight family must be one of two_bump_1d, disk_bump_2d, "
            f"nodal_file; got {family!r}"
        )
    return build_weight(grid, spec)


def parse_solver(block: dict) -> SolveOptions:
    vals = _take(block, {
        "max_iters": 30000, "grad_tol": 1e-8, "energy_window_tol": 1e-14,
        "window": 25, "step0": 1.0, "backtrack": 0.5, "armijo_c": 1e-4,
        "seed": 42, "n_starts": 3, "residual_target": 1e-8, "polish": True,
        "trace": False,
    }, "solver block")
    try:
        return SolveOptions(
            max_iters=int(vals["max_iters"]), grad_tol=float(vals["grad_tol"]),
            energy_window_tol=float(vals["energy_window_tol"]),
            window=int(vals["window"]), step0=float(vals["step0"]),
            backtrack=float(vals["backtrack"]), armijo_c=float(vals["armijo_c"]),
            seed=int(vals["seed"]), n_starts=int(vals["n_starts"]),
            residual_target=float(vals["residual_target"]),
            polish=bool(vals["polish"]), keep_trace=bool(vals["trace"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid solver block: {exc}") from exc


def load_config(path: Path, seed_override: int | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    top = _take(raw, {"problem": _REQUIRED, "grid": _REQUIRED,
                      "weight": _REQUIRED, "solver": {},
                      "experiment": {}, "output_dir": "out"}, "config")
    grid = parse_grid(top["grid"])
    weight = parse_weight(top["weight"], grid, path.parent)
    pb = _take(top["problem"], {"p": _REQUIRED, "q": _REQUIRED,
                                "lambda": _REQUIRED, "eps": None},
               "problem block")
    try:
        prob = Problem.build(pb["p"], pb["q"], pb["lambda"], weight,
                             eps=pb["eps"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    opts = parse_solver(top["solver"])
    if seed_override is not None:
        opts = replace(opts, seed=int(seed_override))
    return RunConfig(problem=prob, opts=opts, experiment=dict(top["experiment"]),
                     output_dir=Path(top["output_dir"]), raw=raw)


# -- serialization helpers -------------------------------------------------

def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON-serializable: {type(x)}")


def write_json(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def solve_report_obj(rep: SolveReport) -> dict:
    eb = rep.energies
    return {
        "m_value": rep.m_value,
        "M_value": rep.M_value,
        "energies": {"dirichlet": eb.dirichlet, "mass": eb.mass,
                     "weighted": eb.weighted, "E": eb.E, "I": eb.I},
        "residual": rep.residual,
        "multiplier": rep.multiplier,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "out_of_regime": rep.out_of_regime,
        "sup_norm": rep.field.sup_norm(),
        "starts": [{"index": s.index, "m_value": s.m_value,
                    "iterations": s.iterations, "converged": s.converged,
                    "stop_reason": s.stop_reason} for s in rep.starts],
        "diagnostics": {k: _json_default(v) if isinstance(v, (np.floating, np.integer, np.bool_))
                        else v for k, v in rep.diagnostics.items()},
    }


def eigen_report_obj(rep: EigenReport) -> dict:
    return {
        "value": rep.value,
        "feasibility_gap": rep.feasibility_gap,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "diagnostics": {k: v for k, v in rep.diagnostics.items()
                        if not isinstance(v, np.ndarray)},
    }


def write_manifest(cfg: RunConfig, subcommand: str, out: Path) -> None:
    import scipy

    write_json({
        "subcommand": subcommand,
        "config": cfg.raw,
        "seed": cfg.opts.seed,
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }, out / "manifest.json")


def _write_trace(rep: SolveReport, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,value,residual,sup_norm\n")
        for row in rep.trace:
            fh.write(f"{row[0]},{row[1]!r},{row[2]!r},{row[3]!r}\n")


# -- subcommand implementations ---------------------------------------------

def _window_nodes(grid: Grid, spec) -> np.ndarray:
    box = np.atleast_2d(np.asarray(spec, dtype=float))
    if box.shape != (grid.dim, 2):
        raise ConfigError(
            f"window must give [lo, hi] per axis, got shape {box.shape}"
        )
    mask = np.ones(grid.n_nodes, dtype=bool)
    for axis in range(grid.dim):
        x = grid.node_coords[:, axis]
        mask &= (x >= box[axis, 0]) & (x <= box[axis, 1])
    return np.flatnonzero(mask)


def run_solve(cfg: RunConfig, out: Path) -> int:
    exp = _take(cfg.experiment, {"check_regime": False, "eps_pos": 1e-6},
                "experiment block")
    lam_star_val = None
    extras = {}
    if exp["check_regime"]:
        star = lambda_star(cfg.problem, opts=cfg.opts)
        lam_star_val = star.value
        extras["lambda_star"] = star.value
    rep = ground_state(cfg.problem, cfg.opts, lam_star=lam_star_val)
    pos = positivity_report(rep.field, cfg.problem.weight, exp["eps_pos"])
    obj = solve_report_obj(rep)
    obj["positivity"] = {
        "positive_on_plus": pos.positive_on_plus,
        "positive_everywhere": pos.positive_everywhere,
        "dead_core_fraction": pos.dead_core_fraction,
    }
    obj.update(extras)
    write_json(obj, out / "report.json")
    field_to_csv(rep.field, out / "solution.csv")
    field_to_csv(rep.constrained_field, out / "constrained_minimizer.csv")
    if cfg.opts.keep_trace:
        _write_trace(rep, out / "trace.csv")
    return 0 if rep.converged else 1


def run_solve_second(cfg: RunConfig, out: Path) -> int:
    exp = _take(cfg.experiment, {"use_spectrum": True, "eps_pos": 1e-6},
                "experiment block")
    gates = {}
    if exp["use_spectrum"]:
        eig = principal_eigen(cfg.problem, cfg.opts)
        star = lambda_star(cfg.problem, opts=cfg.opts)
        qphi = weighted_q_mass(eig.minimizer, cfg.problem.weight, cfg.problem.q)
        gates = {"lam1": eig.value, "lam_star": star.value,
                 "phi1_q_mass": qphi}
    rep = second_solution(cfg.problem, cfg.opts, **gates)
    pos = positivity_report(rep.field, cfg.problem.weight, exp["eps_pos"])
    obj = solve_report_obj(rep)
    obj["positivity"] = {
        "positive_on_plus": pos.positive_on_plus,
        "positive_everywhere": pos.positive_everywhere,
    }
    obj["gates"] = gates
    write_json(obj, out / "report.json")
    field_to_csv(rep.field, out / "solution.csv")
    field_to_csv(rep.constrained_field, out / "constrained_minimizer.csv")
    return 0 if rep.converged else 1


def run_eigen(cfg: RunConfig, out: Path) -> int:
    eig = principal_eigen(cfg.problem, cfg.opts)
    star = lambda_star(cfg.problem, opts=cfg.opts)
    lower = lambda_lower_star(cfg.problem, cfg.opts)
    qphi = weighted_q_mass(eig.minimizer, cfg.problem.weight, cfg.problem.q)
    write_json({
        "lambda_1": eigen_report_obj(eig),
        "lambda_star": eigen_report_obj(star),
        "lambda_lower_star": eigen_report_obj(lower),
        "phi1_q_mass": qphi,
        "ordering_ok": bool(eig.value <= star.value + 1e-6
                            and star.value <= lower.value + 1e-6),
    }, out / "report.json")
    field_to_csv(eig.minimizer, out / "phi1.csv")
    field_to_csv(star.minimizer, out / "lambda_star_minimizer.csv")
    field_to_csv(lower.minimizer, out / "lambda_lower_star_minimizer.csv")
    ok = eig.converged and star.converged and lower.converged
    return 0 if ok else 1


def run_sweep_n(cfg: RunConfig, out: Path) -> int:
    exp = _take(cfg.experiment, {
        "schedule": _REQUIRED, "window": _REQUIRED, "eps_dc": 1e-6,
        "barrier": None, "allow_exploratory": False, "lam1": None,
    }, "experiment block")
    window = _window_nodes(cfg.problem.grid, exp["window"])
    barrier_ball = None
    if exp["barrier"] is not None:
        b = _take(exp["barrier"], {"center": _REQUIRED, "t": _REQUIRED,
                                   "R": _REQUIRED}, "barrier block")
        barrier_ball = (b["center"], float(b["t"]), float(b["R"]))
    res = sweep_n(cfg.problem, exp["schedule"], window, cfg.opts,
                  eps_dc=float(exp["eps_dc"]), barrier_ball=barrier_ball,
                  lam1=exp["lam1"],
                  allow_exploratory=bool(exp["allow_exploratory"]))
    with open(out / "sweep.csv", "w", encoding="utf-8") as fh:
        fh.write("n,m_plus,M,min_on_omega_prime,coverage\n")
        for pt in res.points:
            fh.write(f"{pt.n!r},{pt.m_plus!r},{pt.M!r},"
                     f"{pt.min_on_window!r},{pt.coverage!r}\n")
    obj = {
        "n_zero": res.n_zero,
        "points": [{
            "n": pt.n, "m_plus": pt.m_plus, "M": pt.M,
            "min_on_omega_prime": pt.min_on_window, "coverage": pt.coverage,
            "converged": pt.converged,
            "comparison": None if pt.comparison is None else {
                "boundary_dominates": pt.comparison.boundary_dominates,
                "interior_dominates": pt.comparison.interior_dominates,
                "dead_core_confirmed": pt.comparison.dead_core_confirmed,
            },
        } for pt in res.points],
    }
    write_json(obj, out / "report.json")
    field_to_csv(res.reports[-1].field, out / "final_solution.csv")
    coverage = [pt.coverage for pt in res.points]
    monotone = all(b >= a - 1e-12 for a, b in zip(coverage, coverage[1:]))
    return 0 if (res.n_zero is not None and monotone) else 1


def _sweep_outputs(res: SweepResult, out: Path) -> int:
    res.to_csv(out / f"{res.name}.csv")
    write_json(res.to_json_obj(), out / "report.json")
    return 0 if res.passed else 1


def run_sweep_lambda(cfg: RunConfig, out: Path) -> int:
    exp = _take(cfg.experiment, {"lambdas": _REQUIRED, "mono_tol": 1e-6,
                                 "decay_ratio": 0.1}, "experiment block")
    res = monotonicity_sweep(cfg.problem, exp["lambdas"], cfg.opts,
                             mono_tol=float(exp["mono_tol"]),
                             decay_ratio=float(exp["decay_ratio"]))
    return _sweep_outputs(res, out)


def run_sweep_q(cfg: RunConfig, out: Path) -> int:
    exp = _take(cfg.experiment, {
        "q_values": _REQUIRED, "target": "positivity", "eps_pos": 1e-6,
        "limit_tol": 5e-2,
    }, "experiment block")
    if exp["target"] == "positivity":
        res = positivity_q_sweep(cfg.problem, exp["q_values"], cfg.opts,
                                 eps_pos=float(exp["eps_pos"]))
    elif exp["target"] == "lambda-star-limit":
        res = q_limit_lambda_star(cfg.problem, exp["q_values"], cfg.opts,
                                  limit_tol=float(exp["limit_tol"]))
    else:
        raise ConfigError(
            "sweep-q target must be 'positivity' or 'lambda-star-limit', "
            f"got {exp['target']!r}"
        )
    return _sweep_outputs(res, out)


def run_sweep_delta(cfg: RunConfig, out: Path) -> int:
    exp = _take(cfg.experiment, {"deltas": _REQUIRED, "eps_pos": 1e-6},
                "experiment block")
    res = positivity_delta_sweep(cfg.problem, exp["deltas"], cfg.opts,
                                 eps_pos=float(exp["eps_pos"]))
    return _sweep_outputs(res, out)


def run_deadcore_check(cfg: RunConfig, out: Path) -> int:
    exp = _take(cfg.experiment, {
        "barrier": _REQUIRED, "n": 1.0, "eps_dc": 1e-6, "margin": None,
    }, "experiment block")
    b = _take(exp["barrier"], {"center": _REQUIRED, "t": _REQUIRED,
                               "R": _REQUIRED}, "barrier block")
    rep = ground_state(cfg.problem, cfg.opts)
    spec = make_barrier_spec(cfg.problem, b["center"], float(b["t"]),
                             float(b["R"]), float(exp["n"]))
    barrier = build_barrier(cfg.problem.grid, spec, cfg.problem.weight)
    margin = None if exp["margin"] is None else float(exp["margin"])
    cmp_rep = comparison_check(rep.field, barrier, margin)
    region = dead_core_region(rep.field, float(exp["eps_dc"]),
                              cfg.problem.weight)
    obj = {
        "solve": solve_report_obj(rep),
        "barrier": {"center": list(spec.center), "t": spec.t, "R": spec.R,
                    "beta": spec.beta, "k": spec.k, "regime": spec.regime},
        "comparison": {
            "boundary_dominates": cmp_rep.boundary_dominates,
            "interior_dominates": cmp_rep.interior_dominates,
            "dead_core_confirmed": cmp_rep.dead_core_confirmed,
            "margin": cmp_rep.margin,
            "ring_gap": cmp_rep.ring_gap,
            "inner_max": cmp_rep.inner_max,
        },
        "dead_core": {
            "fraction": region.fraction,
            "minus_fraction": region.minus_fraction,
            "component_count": region.component_count,
        },
    }
    write_json(obj, out / "report.json")
    field_to_csv(rep.field, out / "solution.csv")
    field_to_csv(Field(cfg.problem.grid, barrier.values), out / "barrier.csv")
    ok = (cmp_rep.boundary_dominates and cmp_rep.interior_dominates
          and cmp_rep.dead_core_confirmed)
    return 0 if ok else 1


def run_verify(cfg: RunConfig, out: Path, threads: int = 1) -> int:
    """Default verification bundle on the configured problem."""
    exp = _take(cfg.experiment, {
        "lambdas": [-8.0, -4.0, -2.0, -1.0, -0.5],
        "q_values": [1.2, 1.5, 1.8, 1.95],
        "deltas": [1.0, 0.3, 0.1, 0.03],
        "uniqueness_lambda": -1.0,
        "dist_tol": 1e-4,
        "inequality_samples": 100000,
        "picone_pairs": 1000,
        "seed": 7,
    }, "experiment block")
    prob = cfg.problem

    def _blowup():
        lam1 = principal_eigen(prob, cfg.opts).value
        lams = [lam1 - d for d in (0.4, 0.2, 0.1, 0.05)]
        try:
            return blowup_asymptote(prob, lams, cfg.opts, branch="plus")
        except RegimeError as exc:
            return SweepResult(
                name="blowup_asymptote_plus", param_name="lam",
                param_values=lams, columns={},
                verdicts={"asymptote": "out-of-regime"},
                tolerances={}, gates={"branch": "int a*phi1^q > 0"},
                notes={"reason": str(exc)},
            )

    jobs = {
        "uniqueness": lambda: uniqueness_multistart(
            replace(prob, lam=float(exp["uniqueness_lambda"])), cfg.opts,
            dist_tol=float(exp["dist_tol"])),
        "monotonicity": lambda: monotonicity_sweep(prob, exp["lambdas"], cfg.opts),
        "positivity_q": lambda: positivity_q_sweep(prob, exp["q_values"], cfg.opts),
        "positivity_delta": lambda: positivity_delta_sweep(prob, exp["deltas"], cfg.opts),
        "q_limit": lambda: q_limit_lambda_star(prob, exp["q_values"], cfg.opts),
        "blowup": _blowup,
    }
    results: dict[str, SweepResult] = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {name: pool.submit(fn) for name, fn in jobs.items()}
            for name in jobs:
                results[name] = futures[name].result()
    else:
        for name, fn in jobs.items():
            results[name] = fn()

    ineq = _inequality_suite(int(exp["inequality_samples"]),
                             int(exp["picone_pairs"]), int(exp["seed"]))
    summary = {
        "drivers": {name: res.to_json_obj() for name, res in results.items()},
        "inequalities": ineq,
        "passed": bool(all(r.passed for r in results.values())
                       and ineq["power_mean_min_gap"] >= 0.0
                       and ineq["picone_min_gap"] >= -1e-10),
    }
    for name, res in results.items():
        res.to_csv(out / f"{name}.csv")
    write_json(summary, out / "suite_summary.json")
    return 0 if summary["passed"] else 1


def _inequality_suite(n_tuples: int, n_pairs: int, seed: int) -> dict:
    from .functionals import picone_gap, power_mean_gap

    rng = np.random.default_rng(seed)
    vals = np.exp(rng.uniform(-3.0, 3.0, size=(4, n_tuples)))
    t = rng.uniform(0.0, 1.0, n_tuples)
    gaps = power_mean_gap(vals[0], vals[1], vals[2], vals[3], t)
    grid = build_grid(1, 1.0, 401, "neumann")
    worst = np.inf
    for _ in range(n_pairs):
        u = Field(grid, rng.uniform(0.5, 1.5, grid.n_nodes))
        v = Field(grid, rng.uniform(0.0, 1.0, grid.n_nodes))
        worst = min(worst, picone_gap(u, v, 3.0, 2.0))
    return {
        "power_mean_min_gap": float(np.min(gaps)),
        "power_mean_samples": int(n_tuples),
        "picone_min_gap": float(worst),
        "picone_pairs": int(n_pairs),
    }


RUNNERS = {
    "solve": run_solve,
    "solve-second": run_solve_second,
    "eigen": run_eigen,
    "sweep-n": run_sweep_n,
    "sweep-lambda": run_sweep_lambda,
    "sweep-q": run_sweep_q,
    "sweep-delta": run_sweep_delta,
    "deadcore-check": run_deadcore_check,
}


def run(config_path, subcommand: str, out_dir=None, seed: int | None = None,
        threads: int = 1) -> int:
    """Execute one subcommand; returns the process exit code."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    cfg = load_config(Path(config_path), seed_override=seed)
    out = Path(out_dir) if out_dir is not None else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(cfg, subcommand, out)
    if subcommand == "verify":
        return run_verify(cfg, out, threads=threads)
    return RUNNERS[subcommand](cfg, out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plaplab",
        description="Constrained-minimization laboratory for the indefinite "
                    "subhomogeneous problem -div(|Du|^{p-2}Du) = lam*u^{p-1} "
                    "+ a(x)*u^{q-1}.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the solver seed")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads for independent sweep drivers")
    args = parser.parse_args(argv)
    try:
        return run(args.config, args.subcommand, out_dir=args.out,
                   seed=args.seed, threads=args.threads)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
