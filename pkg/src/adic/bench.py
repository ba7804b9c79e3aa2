"""Benchmark orchestration: run matrices over (problem, variant, noise,
seed), reliability tables and truncated performance-profile areas."""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .catalog import catalog_build, catalog_list, reference_objective  # noqa: F401
from .driver import SolverConfig, solve
from .model import NoisyGradientWrapper

CSV_COLUMNS = ["problem", "variant", "noise", "seed", "status", "iters",
               "tangential_iters", "normal_iters", "final_chi_t",
               "final_chi_n", "final_norm_c_inf", "wall_s"]

# statuses meeting the chi-based termination criterion
CRITERION_STATUSES = ("KKT", "INFEASIBLE_CRITICAL")


@dataclass
class ExperimentPlan:
    problems: Sequence[str]
    variants: Sequence[str] = ("LP", "BK", "PR")
    noise_levels: Sequence[float] = (0.0,)
    seeds: int = 20
    overrides: Dict = field(default_factory=dict)
    parallelism: int = 1


@dataclass
class ProfileStats:
    areas: Dict[str, float]
    reliability: Dict[str, float]
    ratios: Dict[str, List[float]]
    t_max: float


def cell_seed(problem: str, variant: str, noise: float, seed_index: int) -> int:
    """Stable 64-bit seed derived from the cell identity."""
    key = f"{problem}|{variant}|{noise:.10g}|{seed_index}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def run_cell(problem_name: str, variant: str, noise: float, seed_index: int,
             overrides: Optional[Dict] = None) -> dict:
    """Execute one run matrix cell and return its CSV row."""
    prob = catalog_build(problem_name)
    if noise > 0:
        wrapper = NoisyGradientWrapper(
            inner=prob, sigma=noise,
            rng_seed=cell_seed(problem_name, variant, noise, seed_index))
        prob = wrapper.problem
    cfg_kwargs = {"variant": variant}
    if noise > 0:
        cfg_kwargs["tol_dual"] = 1e-3
        cfg_kwargs["tol_primal"] = 1e-3
    cfg_kwargs.update(overrides or {})
    cfg_kwargs["keep_vectors"] = cfg_kwargs.get("keep_vectors", False)
    res = solve(prob, SolverConfig(**cfg_kwargs))
    return {
        "problem": problem_name, "variant": variant, "noise": noise,
        "seed": seed_index, "status": res.status, "iters": res.iters,
        "tangential_iters": res.tangential_count,
        "normal_iters": res.normal_count,
        "final_chi_t": res.final_chi_T, "final_chi_n": res.final_chi_N,
        "final_norm_c_inf": res.final_norm_c_inf, "wall_s": res.wall_time,
    }


def _cell_args(plan: ExperimentPlan):
    for p in plan.problems:
        for v in plan.variants:
            for nz in plan.noise_levels:
                for s in range(plan.seeds):
                    yield (p, v.upper(), float(nz), s, dict(plan.overrides))


def run_plan(plan: ExperimentPlan, csv_path: Optional[str] = None) -> List[dict]:
    """Execute the full cartesian run matrix; failures become statuses.

    Rows come back sorted on (problem, variant, noise, seed) so results
    are identical for any parallelism degree.
    """
    args = list(_cell_args(plan))
    if plan.parallelism > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=plan.parallelism) as ex:
            rows = list(ex.map(_run_cell_star, args, chunksize=4))
    else:
        rows = [run_cell(*a) for a in args]
    rows.sort(key=lambda r: (r["problem"], r["variant"], r["noise"], r["seed"]))
    if csv_path:
        write_csv(rows, csv_path)
    return rows


def _run_cell_star(a):
    return run_cell(*a)


def write_csv(rows: List[dict], path: str):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in CSV_COLUMNS})


def read_csv(path: str) -> List[dict]:
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            r["noise"] = float(r["noise"])
            r["seed"] = int(r["seed"])
            r["iters"] = int(r["iters"])
            r["tangential_iters"] = int(r["tangential_iters"])
            r["normal_iters"] = int(r["normal_iters"])
            for k in ("final_chi_t", "final_chi_n", "final_norm_c_inf", "wall_s"):
                r[k] = float(r[k])
            out.append(r)
    return out


def reliability(rows: List[dict], group_keys: Sequence[str] = ("variant",)) -> List[dict]:
    """Percentage of runs meeting the termination criterion per group.

    `rel` counts both feasible and infeasible-critical terminations (the
    criterion-only reading); `rel_kkt` counts strict KKT only.
    """
    if not rows:
        raise ValueError("no runs to aggregate")
    groups: Dict[tuple, list] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in group_keys), []).append(r)
    table = []
    for key in sorted(groups):
        runs = groups[key]
        n = len(runs)
        solved = sum(r["status"] in CRITERION_STATUSES for r in runs)
        kkt = sum(r["status"] == "KKT" for r in runs)
        row = dict(zip(group_keys, key))
        row.update(runs=n, rel=100.0 * solved / n, rel_kkt=100.0 * kkt / n)
        table.append(row)
    return table


def performance_profile_area(costs: Dict[str, List[Optional[float]]],
                             t_max: float = 10.0) -> ProfileStats:
    """Truncated performance-profile areas from per-variant cost lists.

    costs[variant][p] is the cost on problem p, or None on failure.
    Ratios are cost/best per problem, failures capped at t_max; the area
    is the exact integral of the step function rho(t) over [1, t_max],
    normalized by (t_max - 1).
    """
    variants = list(costs)
    if len(variants) < 2:
        raise ValueError("need at least two variants")
    n_prob = len(costs[variants[0]])
    if n_prob == 0 or any(len(costs[v]) != n_prob for v in variants):
        raise ValueError("cost lists must be nonempty and aligned")

    ratios: Dict[str, List[float]] = {v: [] for v in variants}
    attempted = {v: 0 for v in variants}
    solved = {v: 0 for v in variants}
    for p in range(n_prob):
        vals = [costs[v][p] for v in variants]
        finite = [c for c in vals if c is not None]
        for v, c in zip(variants, vals):
            attempted[v] += 1
            solved[v] += c is not None
        if not finite:
            continue  # excluded from ratios, still counted in reliability
        best = min(finite)
        for v, c in zip(variants, vals):
            r = t_max if c is None else min(c / best, t_max)
            ratios[v].append(r)

    areas = {}
    for v in variants:
        rs = ratios[v]
        if rs:
            integral = sum(max(0.0, t_max - max(r, 1.0)) for r in rs) / len(rs)
            areas[v] = integral / (t_max - 1.0)
        else:
            areas[v] = 0.0
    rel = {v: 100.0 * solved[v] / attempted[v] for v in variants}
    return ProfileStats(areas=areas, reliability=rel, ratios=ratios, t_max=t_max)


def profile_from_rows(rows: List[dict], cost_key: str = "iters",
                      t_max: float = 10.0) -> ProfileStats:
    """Build profile stats from run rows, one cost per (variant, problem)."""
    variants = sorted({r["variant"] for r in rows})
    problems = sorted({r["problem"] for r in rows})
    costs = {v: [] for v in variants}
    for p in problems:
        for v in variants:
            sub = [r for r in rows if r["problem"] == p and r["variant"] == v]
            ok = [r[cost_key] for r in sub if r["status"] in CRITERION_STATUSES]
            costs[v].append(min(ok) if ok else None)
    return performance_profile_area(costs, t_max=t_max)
