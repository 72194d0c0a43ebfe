"""Command-line front end: run, diagnose, verify, sweep.

Exit codes: 0 success / converged, 1 configuration error, 2 iteration cap hit,
3 line-search stall, 4 undefined estimator, 5 trace bound violated.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys

import numpy as np

from . import config as cfgmod
from . import diagnostics, optimizer, traceio
from .errors import (
    ConfigError,
    DomainError,
    InsufficientDataError,
    InvalidSpecError,
    SlsoptError,
    UndefinedEstimateError,
    UnsatisfiableSafeguardError,
    UnsupportedProblemError,
)
from .plotting import convergence_svg

__all__ = ["main", "main_entry", "cmd_run", "cmd_diagnose", "cmd_verify", "cmd_sweep"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAX_ITERS = 2
EXIT_STALL = 3
EXIT_UNDEFINED = 4
EXIT_VIOLATION = 5

_CONFIG_ERRORS = (ConfigError, InvalidSpecError, DomainError, UnsatisfiableSafeguardError)


def _load(config_path, overrides, seed):
    overrides = list(overrides or [])
    if seed is not None:
        overrides.append(f"run.seed={seed}")
    return cfgmod.read_config(config_path, overrides=overrides)


def _status_exit(status: str) -> int:
    if status in ("converged_grad", "converged_fgap"):
        return EXIT_OK
    if status == "stalled":
        return EXIT_STALL
    return EXIT_MAX_ITERS


def _run_once(cfg) -> tuple[optimizer.RunResult, object]:
    problem = cfgmod.build_problem(cfg)
    run_config = cfgmod.build_run_config(cfg, problem=problem)
    return optimizer.run(run_config), problem


def cmd_run(config_path, overrides=(), seed=None) -> int:
    """Execute one run, write the CSV trace (and optional SVG), print a summary."""
    try:
        cfg = _load(config_path, overrides, seed)
        result, problem = _run_once(cfg)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_csv = cfg.run.out_csv
    if out_csv:
        traceio.write_trace(out_csv, result.trajectory)
        print(f"trace: {out_csv} ({len(result.trajectory)} rows)")

    f_star = problem.known.f_star if problem.known is not None else None
    n_restarts = sum(1 for r in result.trajectory if r.restarted)
    print(f"status: {result.status}")
    print(f"iterations: {len(result.trajectory)}")
    if result.trajectory:
        print(f"restart_fraction: {n_restarts / len(result.trajectory):.4f}")
    if f_star is not None:
        try:
            rate, r2 = optimizer.contraction_estimate(result.trajectory, f_star)
            print(f"contraction_rate: {rate!r}")
            print(f"fit_r_squared: {r2!r}")
        except InsufficientDataError:
            print("contraction_rate: n/a (fewer than 10 exact samples)")

    if cfg.run.out_svg and f_star is not None:
        pts = [
            (r.k, r.f_full - f_star)
            for r in result.trajectory
            if r.f_full is not None and r.f_full - f_star > 0
        ]
        if pts:
            svg = convergence_svg(
                [("gap", [p[0] for p in pts], [p[1] for p in pts])],
                title="optimality gap",
            )
            with open(cfg.run.out_svg, "w", newline="\n") as fh:
                fh.write(svg)
            print(f"plot: {cfg.run.out_svg}")

    return _status_exit(result.status)


def _sample_points(problem, rng, count):
    return [rng.standard_normal(problem.n) for _ in range(count)]


def cmd_diagnose(config_path, num_points: int = 100, overrides=(), seed=None, samples_csv=None) -> int:
    """Estimate the regularity constants on sampled points and print them."""
    try:
        cfg = _load(config_path, overrides, seed)
        problem = cfgmod.build_problem(cfg)
        state = cfgmod.build_direction_state(cfg)
        ls = cfgmod.build_linesearch_params(cfg)
        sgr = cfgmod.build_sgr_params(cfg)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rng = np.random.default_rng(cfg.run.seed)
    points = _sample_points(problem, rng, num_points)
    known = problem.known

    def per_point_rule(x):
        return diagnostics.frozen_direction_rule(state.fresh(), x)

    try:
        rho_hat = diagnostics.estimate_rho(problem, points)
        c3_vals = []
        for x in points:
            m = diagnostics.exact_moments(problem, x, per_point_rule(x))
            if m.var_g > 0:
                c3_vals.append(max(0.0, -m.cov_dg) / m.var_g)
        if c3_vals:
            c3_hat = max(c3_vals)
        else:
            # zero gradient variance everywhere makes the covariance bound
            # vacuous; any nonnegative constant works, so report the infimum
            c3_hat = 0.0
            print("note: gradient variance vanished at every sample; covariance bound is vacuous")

        print(f"rho_hat = {rho_hat!r}")
        print(f"c3_hat = {c3_hat!r}")

        if known is None or known.f_star is None or known.L is None:
            raise UnsupportedProblemError(
                "growth and gradient-domination estimates need known f_star and L; "
                "this instance records neither smoothness constant"
            )
        wgc_hat = diagnostics.estimate_wgc(problem, points, known.L)
        mu_hat = diagnostics.estimate_pl(problem, points)
        print(f"mu_hat = {mu_hat!r}")
        print(f"wgc_hat = {wgc_hat!r}")
    except (UndefinedEstimateError, UnsupportedProblemError) as exc:
        print(f"estimator undefined for this instance: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED

    mu = known.mu if known is not None and known.mu is not None else mu_hat
    constants = diagnostics.TheoremConstants(
        c1=sgr.c1,
        c2=sgr.c2,
        c3=c3_hat,
        rho=rho_hat,
        mu=mu,
        L=known.L,
        L_max=known.L_max,
        gamma=ls.gamma,
        delta=ls.delta,
        alpha_max=ls.alpha_max,
    )
    report = diagnostics.compute_eta(constants)
    print(f"sigma = {constants.sigma!r}")
    print(f"eta = {report.eta!r}")
    print(f"eta_alpha_max = {report.rate!r}")
    print(f"theorem_hypothesis_ok = {'true' if report.hypothesis_ok else 'false'}")
    print(f"rate_certified = {'true' if report.certified else 'false'}")

    if constants.lemma_applicable:
        norm_slacks, descent_slacks = [], []
        for x in points:
            rep = diagnostics.verify_lemma_bounds(problem, x, per_point_rule(x), constants)
            norm_slacks.append(rep.norm_slack)
            descent_slacks.append(rep.descent_slack)
        print(f"lemma_norm_min_slack = {min(norm_slacks)!r}")
        print(f"lemma_descent_min_slack = {min(descent_slacks)!r}")
    else:
        print("lemma bounds skipped: hypothesis c2 > c3 (1 - 1/rho) fails")

    if samples_csv:
        lines = ["index,f,grad_norm,e_norm_g_sq,var_g,rho_ratio"]
        for i, x in enumerate(points):
            m = diagnostics.exact_moments(problem, x, diagnostics.negative_gradient_rule)
            f = float(problem.component_values(x).mean())
            gn = float(np.linalg.norm(m.E_g))
            ratio = m.E_norm_g_sq / (gn * gn) if gn > 0 else float("nan")
            lines.append(
                f"{i},{f!r},{gn!r},{m.E_norm_g_sq!r},{m.var_g!r},{ratio!r}"
            )
        with open(samples_csv, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"samples: {samples_csv}")

    return EXIT_OK


def cmd_verify(config_path, trace_path=None, overrides=(), seed=None) -> int:
    """Replay a run (or read a trace) and re-assert every per-iteration bound."""
    try:
        cfg = _load(config_path, overrides, seed)
        problem = cfgmod.build_problem(cfg)
        sgr = cfgmod.build_sgr_params(cfg)
        ls = cfgmod.build_linesearch_params(cfg)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    known = problem.known
    if known is None or known.L_max is None:
        print("config error: verification needs a generator with known L_max", file=sys.stderr)
        return EXIT_CONFIG

    if trace_path is not None:
        try:
            records = traceio.read_trace(trace_path)
        except (ConfigError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"checking {len(records)} rows from {trace_path}")
    else:
        run_config = cfgmod.build_run_config(cfg, problem=problem)
        result = optimizer.run(run_config)
        if result.status == "stalled":
            print("status: stalled (verification not reached)", file=sys.stderr)
            return EXIT_STALL
        records = result.trajectory
        print(f"status: {result.status}; checking {len(records)} rows")

    violation = optimizer.verify_trace_bounds(records, sgr, ls, known.L_max)
    if violation is not None:
        print(
            f"violation at k={violation.k}: {violation.bound}: {violation.detail}",
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    print("all per-iteration bounds hold")
    return EXIT_OK


def _sweep_worker(args):
    config_text, seed, out_csv = args
    cfg = cfgmod.parse_config(config_text, overrides=[f"run.seed={seed}", f"run.out_csv={out_csv}"])
    problem = cfgmod.build_problem(cfg)
    run_config = cfgmod.build_run_config(cfg, problem=problem)
    result = optimizer.run(run_config)
    traceio.write_trace(out_csv, result.trajectory)
    f_star = problem.known.f_star if problem.known is not None else None
    final_gap = None
    if f_star is not None:
        from .problems import full_oracle

        f, _ = full_oracle(problem, result.final_x)
        final_gap = f - f_star
    return seed, result.status, len(result.trajectory), final_gap


def _parse_seed_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",")]


def cmd_sweep(config_path, seeds: str, jobs: int | None = None, overrides=()) -> int:
    """Run one independent trajectory per seed, writing one CSV each."""
    try:
        seed_list = _parse_seed_range(seeds)
        cfg = _load(config_path, overrides, None)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    base, ext = os.path.splitext(cfg.run.out_csv or "trace.csv")
    config_text = cfgmod.serialize_config(cfg)
    tasks = [(config_text, s, f"{base}_seed{s}{ext}") for s in seed_list]
    workers = min(jobs or os.cpu_count() or 1, len(tasks))

    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_worker, tasks))
    else:
        outcomes = [_sweep_worker(t) for t in tasks]

    any_stall = False
    all_converged = True
    for seed, status, iters, gap in sorted(outcomes):
        gap_text = "" if gap is None else f" gap={gap!r}"
        print(f"seed={seed} status={status} iters={iters}{gap_text}")
        if status == "stalled":
            any_stall = True
        if status not in ("converged_grad", "converged_fgap"):
            all_converged = False
    if any_stall:
        return EXIT_STALL
    return EXIT_OK if all_converged else EXIT_MAX_ITERS


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slsopt",
        description="stochastic line-search optimization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one optimization run")
    p_run.add_argument("config")
    p_run.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p_run.add_argument("--seed", type=int, default=None, help="override run.seed")

    p_diag = sub.add_parser("diagnose", help="estimate regularity constants")
    p_diag.add_argument("config")
    p_diag.add_argument("--points", type=int, default=100)
    p_diag.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p_diag.add_argument("--seed", type=int, default=None)
    p_diag.add_argument("--samples-csv", default=None)

    p_ver = sub.add_parser("verify", help="re-assert per-iteration bounds")
    p_ver.add_argument("config")
    p_ver.add_argument("--trace", default=None, help="check an existing trace CSV instead of replaying")
    p_ver.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p_ver.add_argument("--seed", type=int, default=None)

    p_sweep = sub.add_parser("sweep", help="independent runs over a seed range")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--seeds", required=True, help="range a..b or comma list")
    p_sweep.add_argument("--jobs", type=int, default=None)
    p_sweep.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, overrides=args.override, seed=args.seed)
        if args.command == "diagnose":
            return cmd_diagnose(
                args.config,
                num_points=args.points,
                overrides=args.override,
                seed=args.seed,
                samples_csv=args.samples_csv,
            )
        if args.command == "verify":
            return cmd_verify(args.config, trace_path=args.trace, overrides=args.override, seed=args.seed)
        return cmd_sweep(args.config, seeds=args.seeds, jobs=args.jobs, overrides=args.override)
    except SlsoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
