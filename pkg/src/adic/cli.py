"""Command line interface: single runs, benchmark plans and trace audits."""

from __future__ import annotations

import argparse
import sys

from . import bench
from .catalog import catalog_build, catalog_list, mini_suite
from .diagnostics import audit
from .driver import SolverConfig, read_trace, solve, write_trace
from .model import NoisyGradientWrapper


def _run(args):
    prob = catalog_build(args.problem)
    if args.noise > 0:
        seed = args.seed if args.seed is not None else 0
        prob = NoisyGradientWrapper(
            inner=prob, sigma=args.noise,
            rng_seed=bench.cell_seed(args.problem, args.variant.upper(),
                                     args.noise, seed)).problem
    kwargs = dict(variant=args.variant.upper())
    if args.noise > 0:
        kwargs.update(tol_dual=1e-3, tol_primal=1e-3)
    if args.tol_dual is not None:
        kwargs["tol_dual"] = args.tol_dual
    if args.tol_primal is not None:
        kwargs["tol_primal"] = args.tol_primal
    if args.max_iters is not None:
        kwargs["max_iters"] = args.max_iters
    if args.time_limit is not None:
        kwargs["time_limit_s"] = args.time_limit
    res = solve(prob, SolverConfig(**kwargs))
    print(f"status: {res.status}")
    print(f"iters: {res.iters} (tangential {res.tangential_count}, "
          f"normal {res.normal_count})")
    print(f"final: chi_T={res.final_chi_T:.3e} chi_N={res.final_chi_N:.3e} "
          f"|c|_inf={res.final_norm_c_inf:.3e}")
    print(f"x: {res.x}")
    print(f"wall_s: {res.wall_time:.3f}")
    if args.trace:
        write_trace(res.trace, args.trace)
        print(f"trace written to {args.trace}")
    return 0


def _bench(args):
    entries = mini_suite() if args.suite == "mini" else catalog_list()
    problems = [e.name for e in entries]
    overrides = {}
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters
    plan = bench.ExperimentPlan(
        problems=problems,
        variants=[v.strip().upper() for v in args.variants.split(",")],
        noise_levels=[float(t) for t in args.noise.split(",")],
        seeds=args.seeds,
        overrides=overrides,
        parallelism=args.jobs,
    )
    rows = bench.run_plan(plan, csv_path=args.out)
    print(f"{len(rows)} runs -> {args.out}")
    for row in bench.reliability(rows, ("variant", "noise")):
        print(f"variant={row['variant']} noise={row['noise']:g} "
              f"rel={row['rel']:.2f} rel_kkt={row['rel_kkt']:.2f} "
              f"({row['runs']} runs)")
    if args.profile:
        stats = bench.profile_from_rows(rows, cost_key="iters")
        with open(args.profile, "w") as fh:
            fh.write("variant,iters_area,time_area,rel\n")
            tstats = bench.profile_from_rows(rows, cost_key="wall_s")
            for v in sorted(stats.areas):
                fh.write(f"{v},{stats.areas[v]:.6f},{tstats.areas[v]:.6f},"
                         f"{stats.reliability[v]:.2f}\n")
        print(f"profile -> {args.profile}")
    return 0


def _audit(args):
    trace = read_trace(args.trace)
    problem = catalog_build(args.problem) if args.problem else None
    cfg = SolverConfig(variant=args.variant.upper())
    rep = audit(trace, problem, cfg, deep=args.deep, run_id=args.trace)
    print(rep.format())
    return 0 if rep.passed else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="adic")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="solve one catalog problem")
    r.add_argument("--problem", required=True)
    r.add_argument("--variant", default="lp", choices=["lp", "bk", "pr"])
    r.add_argument("--noise", type=float, default=0.0)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--max-iters", type=int, default=None)
    r.add_argument("--time-limit", type=float, default=None)
    r.add_argument("--tol-dual", type=float, default=None)
    r.add_argument("--tol-primal", type=float, default=None)
    r.add_argument("--trace", default=None)
    r.set_defaults(fn=_run)

    b = sub.add_parser("bench", help="run a benchmark plan")
    b.add_argument("--suite", default="mini", choices=["mini", "all"])
    b.add_argument("--variants", default="lp,bk,pr")
    b.add_argument("--noise", default="0")
    b.add_argument("--seeds", type=int, default=1)
    b.add_argument("--max-iters", type=int, default=None)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", default="results.csv")
    b.add_argument("--profile", default=None)
    b.set_defaults(fn=_bench)

    a = sub.add_parser("audit", help="audit a trace file")
    a.add_argument("--trace", required=True)
    a.add_argument("--problem", default=None)
    a.add_argument("--variant", default="lp", choices=["lp", "bk", "pr"])
    a.add_argument("--deep", action="store_true")
    a.set_defaults(fn=_audit)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
