"""Post-hoc trace audits: per-iteration condition checks, AdaGrad trace
inequalities and the empirical decay-rate monitor."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .driver import (
    AdagradReport,
    SolverConfig,
    StepRecord,
    rate_monitor,
    trace_check_adagrad,
)
from .model import Problem
from .steps import kappa_t

_REL = 1e-9  # slack on scalar inequality re-checks


@dataclass
class AuditReport:
    run_id: str
    checks: Dict[str, int] = field(default_factory=dict)  # condition -> passes
    violations: List[Tuple[int, str, str]] = field(default_factory=list)
    adagrad: Optional[AdagradReport] = None
    rate_ok: bool = True
    rate_kappa_fit: float = float("nan")
    rate_worst: float = 0.0

    @property
    def passed(self) -> bool:
        return (not self.violations and self.rate_ok
                and (self.adagrad is None or self.adagrad.ok))

    def format(self) -> str:
        lines = [f"run: {self.run_id}", f"passed: {self.passed}"]
        for cond in sorted(self.checks):
            lines.append(f"pass.{cond}: {self.checks[cond]}")
        lines.append(f"violations: {len(self.violations)}")
        for k, cond, detail in self.violations[:50]:
            lines.append(f"violation.k={k}: {cond} ({detail})")
        if self.adagrad is not None:
            a = self.adagrad
            lines += [
                f"adagrad.tangential_count: {a.tangential_count}",
                f"adagrad.linear: {a.lhs_linear:.6g} > {a.rhs_linear:.6g}",
                f"adagrad.quadratic: {a.lhs_quadratic:.6g} <= {a.rhs_quadratic:.6g}",
                f"adagrad.ok: {a.ok}",
            ]
        lines += [f"rate.kappa_fit: {self.rate_kappa_fit:.6g}",
                  f"rate.worst_ratio: {self.rate_worst:.6g}",
                  f"rate.ok: {self.rate_ok}"]
        return "\n".join(lines)


def _check(rep: AuditReport, k: int, cond: str, ok: bool, detail: str = ""):
    if ok:
        rep.checks[cond] = rep.checks.get(cond, 0) + 1
    else:
        rep.violations.append((k, cond, detail))


def audit(trace: List[StepRecord], problem: Optional[Problem],
          cfg: SolverConfig, deep: bool = False,
          run_id: str = "run") -> AuditReport:
    """Re-derive every recorded condition from the trace.

    Scalar conditions are always checked; feasibility, nullspace and step
    norms need the logged vectors.  Deep mode re-runs the constraint and
    Jacobian oracles at the logged iterates.
    """
    rep = AuditReport(run_id=run_id)
    kt = kappa_t(cfg.variant, cfg.eta, cfg.varsigma)
    alpha_cap = cfg.eta / math.sqrt(cfg.varsigma)
    gamma_prev = 0.0

    for r in trace:
        scale = 1.0 + r.omega_t ** 2
        _check(rep, r.k, "achle1",
               r.alpha_t <= alpha_cap * (1 + 1e-12)
               and r.alpha_t * r.omega_t < cfg.eta,
               f"alpha={r.alpha_t}")
        expect = cfg.eta / math.sqrt(gamma_prev + r.omega_t ** 2 + cfg.varsigma)
        _check(rep, r.k, "alpha-formula",
               abs(r.alpha_t - expect) <= 1e-9 * (1 + expect),
               f"alpha={r.alpha_t} expected={expect}")
        if r.kind in ("T", "TN"):
            _check(rep, r.k, "gamma-update",
                   abs(r.gamma - (gamma_prev + r.omega_t ** 2)) <= 1e-9 * scale,
                   f"gamma={r.gamma}")
            _check(rep, r.k, "switch",
                   r.omega_n <= cfg.beta * r.alpha_t * r.omega_t * (1 + _REL),
                   f"omega_n={r.omega_n}")
            if r.g_dot_st is not None:
                bound = -kt * r.alpha_t * r.omega_t ** 2
                _check(rep, r.k, "T-descent",
                       r.g_dot_st <= bound + _REL * abs(bound) + 1e-15,
                       f"g.s={r.g_dot_st} bound={bound}")
        else:
            _check(rep, r.k, "gamma-update",
                   abs(r.gamma - gamma_prev) <= 1e-12 * (1 + gamma_prev),
                   f"gamma={r.gamma}")
        if r.kind == "TN":
            _check(rep, r.k, "TN-mode", cfg.normal_when_switch == "always",
                   "TN without normal_when_switch=always")
        if r.kind in ("N", "TN") and r.normal_decrease is not None:
            _check(rep, r.k, "N-descent",
                   r.normal_decrease >= cfg.kappa_n * r.omega_n ** 2,
                   f"decrease={r.normal_decrease}")

        if r.x is not None and problem is not None:
            _vector_checks(rep, r, problem, cfg, kt, deep)
        gamma_prev = r.gamma

    rep.adagrad = trace_check_adagrad(trace, cfg.eta, cfg.varsigma)
    terms = [r.omega_t + (r.norm_c2 if r.norm_c2 else r.norm_c_inf)
             for r in trace]
    rep.rate_ok, rep.rate_kappa_fit, rep.rate_worst = rate_monitor(terms)
    return rep


def _vector_checks(rep: AuditReport, r: StepRecord, problem: Problem,
                   cfg: SolverConfig, kt: float, deep: bool):
    l, u = problem.lower, problem.upper
    x = r.x
    J = problem.jac(x)
    jfro = np.linalg.norm(J, "fro")

    if r.s_n is not None:
        xn = x + r.s_n
        ftol = 1e-10 * (1.0 + float(np.max(np.abs(xn))))
        _check(rep, r.k, "sN-feas",
               bool(np.all(xn >= l - ftol) and np.all(xn <= u + ftol)),
               "normal step leaves the box")
        _check(rep, r.k, "sN-bound",
               float(np.max(np.abs(r.s_n))) <= cfg.theta_N * r.omega_n * (1 + _REL),
               f"|s_N|={np.max(np.abs(r.s_n))}")
        if deep:
            c0 = problem.cons(x)
            c1 = problem.cons(xn)
            dec = 0.5 * float(c0 @ c0) - 0.5 * float(c1 @ c1)
            _check(rep, r.k, "N-descent-deep",
                   dec >= cfg.kappa_n * r.omega_n ** 2 * (1 - _REL),
                   f"decrease={dec}")

    if r.s_t is not None:
        base = x + (r.s_n if r.s_n is not None else 0.0)
        xt = base + r.s_t
        ftol = 1e-10 * (1.0 + float(np.max(np.abs(xt))))
        # s_T is feasible from x_k (conditions at index k); at TN
        # iterations the composite point is checked too
        xk_t = x + r.s_t
        _check(rep, r.k, "sT-feas",
               bool(np.all(xk_t >= l - ftol) and np.all(xk_t <= u + ftol)),
               "tangential step leaves the box")
        _check(rep, r.k, "sT-nullspace",
               float(np.max(np.abs(J @ r.s_t)))
               <= 1e-8 * (1.0 + jfro * float(np.linalg.norm(r.s_t))),
               f"|J s_T|={np.max(np.abs(J @ r.s_t))}")
        if cfg.variant == "BK":
            nrm = float(np.max(np.abs(r.s_t)))
            theta = 1.0
        elif cfg.variant == "PR":
            nrm = float(np.linalg.norm(r.s_t))
            theta = 1.0
        else:
            nrm = float(np.linalg.norm(r.s_t))
            theta = math.sqrt(problem.n)
        _check(rep, r.k, "sT-bound",
               nrm <= theta * r.alpha_t * r.omega_t * (1 + _REL),
               f"|s_T|={nrm} cap={theta * r.alpha_t * r.omega_t}")
        if r.g_vec is not None:
            gs = float(r.g_vec @ r.s_t)
            bound = -kt * r.alpha_t * r.omega_t ** 2
            _check(rep, r.k, "T-descent-vec",
                   gs <= bound + _REL * abs(bound) + 1e-15,
                   f"g.s={gs} bound={bound}")
