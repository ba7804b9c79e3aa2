"""Normal trust-region step on the constraint violation and the three
tangential-step strategies (LP, backtracking, projection)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .subproblems import (
    _displacement_box,
    dykstra_project,
    solve_separable_lp,
    tangential_backtrack_step,
    tangential_lp_step,
    tangential_projection_step,
)


@dataclass
class NormalStepResult:
    s_N: np.ndarray
    new_c: np.ndarray
    radius_used: float
    reductions: int
    achieved_decrease: float
    satisfied: bool


@dataclass
class TangentialStepResult:
    s_T: np.ndarray
    variant: str  # "LP" | "BK" | "PR"
    g_dot_sT: float
    theta_T: float
    projection_converged: bool = True


def normal_step(x, c, J, lower, upper, omega_N, theta_N, kappa_n,
                cons_oracle, max_reductions=60, shrink=0.5) -> NormalStepResult:
    """Trust-region step on 0.5*||c||^2 with a linear model.

    Radii start at theta_N * omega_N and shrink geometrically; a trial
    step (the separable LP minimizer of c^T J s over box and radius) is
    accepted once it achieves both the linear-model decrease
    0.5 * chi_N * Delta and the quadratic decrease kappa_n * omega_N^2.
    One constraint evaluation per trial radius.
    """
    half_c2 = 0.5 * float(c @ c)
    cost = J.T @ c
    delta = theta_N * omega_N
    s = np.zeros_like(np.asarray(x, dtype=float))
    new_c = c
    dec = 0.0
    red = 0
    for red in range(max_reductions + 1):
        lo, hi = _displacement_box(x, lower, upper, delta)
        s = solve_separable_lp(cost, lo, hi).d
        new_c = np.atleast_1d(np.asarray(cons_oracle(x + s), dtype=float))
        dec = half_c2 - 0.5 * float(new_c @ new_c)
        if dec >= 0.5 * omega_N * delta and dec >= kappa_n * omega_N ** 2:
            return NormalStepResult(s_N=s, new_c=new_c, radius_used=delta,
                                    reductions=red, achieved_decrease=dec,
                                    satisfied=True)
        delta *= shrink
    return NormalStepResult(s_N=s, new_c=new_c, radius_used=delta / shrink,
                            reductions=red, achieved_decrease=dec,
                            satisfied=False)


def tangential_step(x, g, J, lower, upper, omega_T, alpha_T, variant,
                    d_T=None, p1=None, projection_converged=True) -> TangentialStepResult:
    """Dispatch to the variant's tangential step.

    LP resolves a fresh LP with the shrunk box; BK rescales the cached
    d_T; PR rescales the cached projection displacement p1.
    """
    n = len(x)
    if variant == "LP":
        s = tangential_lp_step(x, g, J, lower, upper, alpha_T * omega_T)
        theta = float(np.sqrt(n))
    elif variant == "BK":
        s = tangential_backtrack_step(d_T, alpha_T * omega_T)
        theta = 1.0
    elif variant == "PR":
        if p1 is None:
            p1 = dykstra_project(x, g, J, lower, upper).p1
        s = tangential_projection_step(p1, alpha_T)
        theta = 1.0
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return TangentialStepResult(s_T=s, variant=variant, g_dot_sT=float(g @ s),
                                theta_T=theta,
                                projection_converged=projection_converged)


def kappa_t(variant: str, eta: float, varsigma: float) -> float:
    """Per-variant descent constant in g^T s <= -kappa_t * alpha * omega^2."""
    if variant in ("LP", "BK"):
        return 1.0 / max(eta, 1.0)
    if variant == "PR":
        return float(np.sqrt(varsigma)) / max(eta, 1.0)
    raise ValueError(f"unknown variant {variant!r}")
