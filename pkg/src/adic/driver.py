"""Outer loop: criticality measures, adaptive stepsize, normal/tangential
switching, bookkeeping and trace emission."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .linalg import RankDeficiencyError, lsq_multipliers
from .model import Problem, project_to_box
from .steps import kappa_t, normal_step, tangential_step
from .subproblems import chi_N, chi_T, dykstra_project

VARIANTS = ("LP", "BK", "PR")

# tangential steps with a dual measure below this are pure noise
OMEGA_T_FLOOR = 1e-16


@dataclass
class SolverConfig:
    beta: float = 1e3
    eta: float = 2.0
    varsigma: float = 1e-5
    theta_T: float = 1.0
    theta_N: float = 5.0
    kappa_n: float = 1e-2
    variant: str = "LP"
    tol_dual: float = 1e-4
    tol_primal: float = 1e-5
    tol_feas: Optional[float] = None  # default 1e-6 * (1 + ||c(x0)||_inf)
    max_iters: int = 50000
    time_limit_s: float = 3600.0
    normal_when_switch: str = "never"  # or "always"
    max_reductions: int = 60
    projection_tol: float = 1e-10
    projection_max_iter: int = 10000
    rho_monitor: float = 10.0
    record_psi: bool = False
    keep_vectors: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.normal_when_switch not in ("never", "always"):
            raise ValueError("normal_when_switch must be 'never' or 'always'")
        if not (0 < self.varsigma <= 0.5):
            raise ValueError("varsigma must lie in (0, 1/2]")
        if not (0 < self.kappa_n < 0.5):
            raise ValueError("kappa_n must lie in (0, 1/2)")


@dataclass
class IterState:
    k: int
    x: np.ndarray
    Gamma: float
    g: np.ndarray
    c: np.ndarray
    J: np.ndarray
    omega_T: float = 0.0
    omega_N: float = 0.0
    alpha_T: float = 0.0
    chi_T_value: Optional[float] = None
    d_T: Optional[np.ndarray] = None
    d_N: Optional[np.ndarray] = None
    p1: Optional[np.ndarray] = None
    projection_converged: bool = True


@dataclass
class StepRecord:
    k: int
    kind: str  # "T" | "N" | "TN" | "none"
    omega_t: float
    omega_n: float
    alpha_t: float
    gamma: float  # Gamma after the iteration
    norm_c_inf: float
    g_dot_st: Optional[float]
    normal_decrease: Optional[float]
    psi: Optional[float]
    wall_ms: float
    # extras kept for audits, not part of the wire format
    norm_c2: float = 0.0
    x: Optional[np.ndarray] = None
    g_vec: Optional[np.ndarray] = None
    s_n: Optional[np.ndarray] = None
    s_t: Optional[np.ndarray] = None
    radius_used: Optional[float] = None
    projection_converged: bool = True

    def to_json(self) -> str:
        return json.dumps({
            "k": self.k, "kind": self.kind, "omega_t": self.omega_t,
            "omega_n": self.omega_n, "alpha_t": self.alpha_t,
            "gamma": self.gamma, "norm_c_inf": self.norm_c_inf,
            "g_dot_st": self.g_dot_st, "normal_decrease": self.normal_decrease,
            "psi": self.psi, "wall_ms": self.wall_ms,
        })


@dataclass
class RunResult:
    status: str  # KKT | INFEASIBLE_CRITICAL | ITER_LIMIT | TIME_LIMIT | STEP_FAILURE
    x: np.ndarray
    final_omega_T: float
    final_omega_N: float
    final_chi_T: float
    final_chi_N: float
    final_norm_c_inf: float
    iters: int
    tangential_count: int
    normal_count: int
    wall_time: float
    trace: List[StepRecord] = field(default_factory=list)


def adagrad_stepsize(Gamma: float, omega_T: float, eta: float, varsigma: float) -> float:
    return eta / math.sqrt(Gamma + omega_T ** 2 + varsigma)


def switch_test(omega_N: float, omega_T: float, alpha_T: float, beta: float) -> bool:
    """True iff the tangential branch is allowed: omega_N <= beta*alpha_T*omega_T."""
    return omega_N <= beta * alpha_T * omega_T


def compute_measures(problem: Problem, state: IterState, cfg: SolverConfig,
                     need_chi_T: bool = True) -> IterState:
    """Fill the criticality measures, caches and stepsize at state.x.

    For the PR variant the dual measure is the projection residual pi_T;
    chi_T is computed on demand only (uniform termination test).
    """
    l, u = problem.lower, problem.upper
    state.omega_N, state.d_N = chi_N(state.x, state.c, state.J, l, u)
    if cfg.variant == "PR":
        proj = dykstra_project(state.x, state.g, state.J, l, u,
                               tol=cfg.projection_tol,
                               max_iter=cfg.projection_max_iter)
        state.p1 = proj.p1
        state.omega_T = proj.pi_T
        state.projection_converged = proj.converged
        if need_chi_T:
            state.chi_T_value, state.d_T = chi_T(state.x, state.g, state.J, l, u)
    else:
        state.chi_T_value, state.d_T = chi_T(state.x, state.g, state.J, l, u)
        state.omega_T = state.chi_T_value
    state.alpha_T = adagrad_stepsize(state.Gamma, state.omega_T, cfg.eta, cfg.varsigma)
    return state


def diagnostics_psi(x, g, c, J, rho_monitor, f_value=None):
    """Advisory sharp-augmented-Lagrangian surrogate and KKT diagnostics.

    Returns (psi, lambda_hat, g_T) where psi = [f +] lam^T c + rho*||c||;
    the objective term is included only when a reporting value is handed
    in.  On rank deficiency all three come back as None.
    """
    try:
        lam, g_t = lsq_multipliers(J, g)
    except RankDeficiencyError:
        return None, None, None
    psi = float(lam @ c) + rho_monitor * float(np.linalg.norm(c))
    if f_value is not None:
        psi += f_value
    return psi, lam, g_t


@dataclass
class AdagradReport:
    tangential_count: int
    lhs_linear: float
    rhs_linear: float
    lhs_quadratic: float
    rhs_quadratic: float
    ok: bool


def trace_check_adagrad(trace: List[StepRecord], eta: float, varsigma: float) -> AdagradReport:
    """Check the two AdaGrad-norm trace inequalities over the tangential
    subsequence:

        sum alpha*omega^2  >  eta*sqrt(s) * (sqrt(1 + Gamma/s) - 1)
        sum alpha^2*omega^2 <= eta^2 * log(1 + Gamma/s)

    with s the stepsize offset and Gamma the final accumulated sum.
    """
    tang = [r for r in trace if r.kind in ("T", "TN")]
    if not tang:
        return AdagradReport(0, 0.0, 0.0, 0.0, 0.0, True)
    lhs1 = sum(r.alpha_t * r.omega_t ** 2 for r in tang)
    lhs2 = sum((r.alpha_t * r.omega_t) ** 2 for r in tang)
    gamma_end = tang[-1].gamma
    rhs1 = eta * math.sqrt(varsigma) * (math.sqrt(1.0 + gamma_end / varsigma) - 1.0)
    rhs2 = eta ** 2 * math.log(1.0 + gamma_end / varsigma)
    ok = (lhs1 > rhs1 * (1.0 - 1e-12)) and (lhs2 <= rhs2 * (1.0 + 1e-12))
    return AdagradReport(len(tang), lhs1, rhs1, lhs2, rhs2, ok)


def rate_monitor(terms, factor=1.05, fit_len=11):
    """Empirical 1/sqrt(k+1) decay check on running averages of
    omega_T + ||c||, with the constant fitted on the first `fit_len`
    iterations.

    Returns (ok, kappa_fit, worst_ratio).  Vacuous pass when the run is
    shorter than the fit window.
    """
    terms = list(terms)
    if len(terms) < fit_len:
        return True, float("nan"), 0.0
    kappa_fit = math.sqrt(fit_len) * (sum(terms[:fit_len]) / fit_len)
    worst = 0.0
    run = sum(terms[:fit_len])
    for k in range(fit_len - 1, len(terms)):
        if k >= fit_len:
            run += terms[k]
        avg = run / (k + 1)
        bound = factor * kappa_fit / math.sqrt(k + 1)
        if bound > 0:
            worst = max(worst, avg / bound)
        elif avg > 0:
            return False, kappa_fit, float("inf")
    return worst <= 1.0, kappa_fit, worst


def _tangential_conditions_hold(x, g, J, lower, upper, s_t, alpha_T, omega_T,
                                kt, theta_T_bound, inf_norm_bound):
    """A-posteriori verification used when the projection did not converge."""
    xp = x + s_t
    feas_tol = 1e-10 * (1.0 + float(np.max(np.abs(xp))))
    if np.any(xp < lower - feas_tol) or np.any(xp > upper + feas_tol):
        return False
    jfro = np.linalg.norm(J, "fro")
    if np.max(np.abs(J @ s_t), initial=0.0) > 1e-8 * (1.0 + jfro * np.linalg.norm(s_t)):
        return False
    if float(g @ s_t) > -kt * alpha_T * omega_T ** 2 * (1.0 - 1e-12):
        return False
    nrm = np.max(np.abs(s_t)) if inf_norm_bound else np.linalg.norm(s_t)
    return nrm <= theta_T_bound * alpha_T * omega_T * (1.0 + 1e-12)


def solve(problem: Problem, cfg: SolverConfig = None,
          reporting_objective=None) -> RunResult:
    """Run the solver on `problem` and return the full result with trace."""
    cfg = cfg or SolverConfig()
    l, u = problem.lower, problem.upper
    x = project_to_box(problem.x0, l, u)
    Gamma = 0.0
    trace: List[StepRecord] = []
    t0 = time.perf_counter()
    status = "ITER_LIMIT"
    n_tang = n_norm = 0
    kt = kappa_t(cfg.variant, cfg.eta, cfg.varsigma)
    tol_feas = cfg.tol_feas
    final_from_loop = None  # (chi_T, chi_N, omega_T, omega_N, norm_c_inf) at final x

    for k in range(cfg.max_iters):
        if time.perf_counter() - t0 > cfg.time_limit_s:
            status = "TIME_LIMIT"
            break

        st = IterState(k=k, x=x, Gamma=Gamma,
                       g=problem.grad(x), c=problem.cons(x), J=problem.jac(x))
        if tol_feas is None:
            tol_feas = 1e-6 * (1.0 + float(np.max(np.abs(st.c), initial=0.0)))
        compute_measures(problem, st, cfg, need_chi_T=(cfg.variant != "PR"))
        norm_c_inf = float(np.max(np.abs(st.c), initial=0.0))

        # uniform chi-based termination for all variants
        if st.omega_N <= cfg.tol_primal:
            if st.chi_T_value is None:
                st.chi_T_value, st.d_T = chi_T(x, st.g, st.J, l, u)
            if st.chi_T_value <= cfg.tol_dual:
                status = "KKT" if norm_c_inf <= tol_feas else "INFEASIBLE_CRITICAL"
                final_from_loop = (st.chi_T_value, st.omega_N, st.omega_T,
                                   st.omega_N, norm_c_inf)
                break

        sw = switch_test(st.omega_N, st.omega_T, st.alpha_T, cfg.beta)
        ns = None
        if st.omega_N > 0 and (not sw or cfg.normal_when_switch == "always"):
            ns = normal_step(x, st.c, st.J, l, u, st.omega_N, cfg.theta_N,
                             cfg.kappa_n, problem.cons_oracle,
                             max_reductions=cfg.max_reductions)
            if not ns.satisfied:
                if st.omega_N > cfg.tol_primal:
                    status = "STEP_FAILURE"
                    trace.append(_make_record(st, "none", Gamma, norm_c_inf,
                                              None, ns.achieved_decrease, None,
                                              t0, cfg, x))
                    if st.chi_T_value is None:
                        st.chi_T_value, _ = chi_T(x, st.g, st.J, l, u)
                    final_from_loop = (st.chi_T_value, st.omega_N, st.omega_T,
                                       st.omega_N, norm_c_inf)
                    break
                ns = None
        x_plus = x + ns.s_N if ns is not None else x

        ts = None
        if sw and st.omega_T > OMEGA_T_FLOOR:
            ts = tangential_step(x, st.g, st.J, l, u, st.omega_T, st.alpha_T,
                                 cfg.variant, d_T=st.d_T, p1=st.p1,
                                 projection_converged=st.projection_converged)
            if not st.projection_converged:
                ok = _tangential_conditions_hold(
                    x, st.g, st.J, l, u, ts.s_T, st.alpha_T, st.omega_T, kt,
                    ts.theta_T, inf_norm_bound=(cfg.variant == "BK"))
                if not ok:
                    # fall back to a normal-only iteration
                    ts = None
                    if ns is None and st.omega_N > 0:
                        ns = normal_step(x, st.c, st.J, l, u, st.omega_N,
                                         cfg.theta_N, cfg.kappa_n,
                                         problem.cons_oracle,
                                         max_reductions=cfg.max_reductions)
                        if not ns.satisfied:
                            ns = None
                        else:
                            x_plus = x + ns.s_N

        if ts is not None:
            x_next = x_plus + ts.s_T
            Gamma = Gamma + st.omega_T ** 2
            n_tang += 1
        else:
            x_next = x_plus
        if ns is not None:
            n_norm += 1

        kind = ("TN" if ns is not None and ts is not None else
                "T" if ts is not None else
                "N" if ns is not None else "none")

        psi_val = None
        if cfg.record_psi:
            psi_val, _, _ = diagnostics_psi(x, st.g, st.c, st.J, cfg.rho_monitor)
        rec = _make_record(st, kind, Gamma, norm_c_inf,
                           ts.g_dot_sT if ts is not None else None,
                           ns.achieved_decrease if ns is not None else None,
                           psi_val, t0, cfg, x)
        if cfg.keep_vectors:
            rec.s_n = ns.s_N if ns is not None else None
            rec.s_t = ts.s_T if ts is not None else None
            rec.radius_used = ns.radius_used if ns is not None else None
            rec.projection_converged = st.projection_converged
        trace.append(rec)
        x = x_next

    wall = time.perf_counter() - t0
    if final_from_loop is not None:
        chi_t_f, chi_n_f, om_t_f, om_n_f, nci_f = final_from_loop
    else:
        # halted by a cap: re-evaluate the measures at the final iterate
        c = problem.cons(x)
        J = problem.jac(x)
        g = problem.grad(x)
        chi_n_f, _ = chi_N(x, c, J, l, u)
        chi_t_f, _ = chi_T(x, g, J, l, u)
        om_n_f = chi_n_f
        om_t_f = (dykstra_project(x, g, J, l, u, tol=cfg.projection_tol,
                                  max_iter=cfg.projection_max_iter).pi_T
                  if cfg.variant == "PR" else chi_t_f)
        nci_f = float(np.max(np.abs(c), initial=0.0))

    return RunResult(status=status, x=x,
                     final_omega_T=om_t_f, final_omega_N=om_n_f,
                     final_chi_T=chi_t_f if chi_t_f is not None else float("nan"),
                     final_chi_N=chi_n_f,
                     final_norm_c_inf=nci_f,
                     iters=len(trace), tangential_count=n_tang,
                     normal_count=n_norm, wall_time=wall, trace=trace)


def _make_record(st: IterState, kind, gamma_after, norm_c_inf, g_dot_st,
                 normal_decrease, psi_val, t0, cfg, x):
    rec = StepRecord(
        k=st.k, kind=kind, omega_t=st.omega_T, omega_n=st.omega_N,
        alpha_t=st.alpha_T, gamma=gamma_after, norm_c_inf=norm_c_inf,
        g_dot_st=g_dot_st, normal_decrease=normal_decrease, psi=psi_val,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        norm_c2=float(np.linalg.norm(st.c)),
    )
    if cfg.keep_vectors:
        rec.x = np.array(x, copy=True)
        rec.g_vec = np.array(st.g, copy=True)
    return rec


def write_trace(trace: List[StepRecord], path: str):
    """JSON-lines export, one record per line."""
    with open(path, "w") as fh:
        for r in trace:
            fh.write(r.to_json() + "\n")


def read_trace(path: str) -> List[StepRecord]:
    out = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                out.append(StepRecord(
                    k=d["k"], kind=d["kind"], omega_t=d["omega_t"],
                    omega_n=d["omega_n"], alpha_t=d["alpha_t"], gamma=d["gamma"],
                    norm_c_inf=d["norm_c_inf"], g_dot_st=d["g_dot_st"],
                    normal_decrease=d["normal_decrease"], psi=d["psi"],
                    wall_ms=d["wall_ms"]))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"malformed trace at line {ln}: {exc}") from exc
    return out
