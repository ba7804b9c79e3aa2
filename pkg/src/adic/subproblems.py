"""Per-iteration subproblems: separable box LPs, equality-constrained box
LPs solved by a bounded-variable simplex, and Dykstra projections.

All decision vectors d are displacements from the current iterate x, so
the boxes passed around always contain 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .linalg import gram_factor


@dataclass
class BoxLpInstance:
    """min cost^T d  s.t.  equality @ d = 0 (optional),  lower <= d <= upper."""

    cost: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    equality: Optional[np.ndarray] = None


@dataclass
class LpSolution:
    d: np.ndarray
    objective: float
    status: str  # "optimal" | "iteration-limit"


@dataclass
class ProjectionResult:
    p1: np.ndarray
    pi_T: float
    iterations: int
    converged: bool


def solve_separable_lp(cost, lower, upper) -> LpSolution:
    """Box LP without equality rows; solved coordinatewise in closed form.

    Ties (cost_i == 0) resolve to d_i = 0, keeping the step minimal-norm.
    """
    cost = np.asarray(cost, dtype=float)
    d = np.where(cost > 0, lower, np.where(cost < 0, upper, 0.0))
    return LpSolution(d=d, objective=float(cost @ d), status="optimal")


def _independent_rows(A: np.ndarray, tol: float = 1e-11) -> np.ndarray:
    """Indices of a maximal independent row subset, via pivoted QR of A^T."""
    m = A.shape[0]
    if m == 0:
        return np.arange(0)
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    ref = max(diag[0] if diag.size else 0.0, 1.0)
    rank = int(np.sum(diag > tol * ref))
    return np.sort(piv[:rank])


def solve_equality_box_lp(inst: BoxLpInstance, max_pivots: int | None = None) -> LpSolution:
    """Bounded-variable simplex with Bland's rule for
    min c^T d  s.t.  A d = 0,  l <= d <= u  (l <= 0 <= u, boxes finite).

    Starts from d = 0 with a pivoted-QR basis of A's columns; nonbasic
    variables strictly inside their bounds are pushed to a bound (or into
    the basis) before/while ordinary pivoting proceeds.
    """
    c = np.asarray(inst.cost, dtype=float)
    l = np.asarray(inst.lower, dtype=float)
    u = np.asarray(inst.upper, dtype=float)
    n = c.shape[0]
    A = inst.equality
    if A is None or np.size(A) == 0:
        return solve_separable_lp(c, l, u)
    A = np.atleast_2d(np.asarray(A, dtype=float))

    rows = _independent_rows(A)
    if len(rows) < A.shape[0]:
        warnings.warn("dependent equality rows dropped in box LP", RuntimeWarning)
        A = A[rows]
    m = A.shape[0]
    if m == 0:
        return solve_separable_lp(c, l, u)
    if max_pivots is None:
        max_pivots = 50 * (n + m)

    # basis from pivoted QR on columns
    _, _, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    basis = list(piv[:m])
    in_basis = np.zeros(n, dtype=bool)
    in_basis[basis] = True

    x = np.zeros(n)
    # nonbasic status: -1 at lower, +1 at upper, 0 strictly between
    stat = np.zeros(n, dtype=int)
    stat[l == 0.0] = -1
    stat[u == 0.0] = +1

    tol_rc = 1e-10 * (1.0 + np.max(np.abs(c), initial=0.0))
    eps = 1e-11
    status = "iteration-limit"

    for _ in range(max_pivots):
        B = A[:, basis]
        lufac = scipy.linalg.lu_factor(B)
        y = scipy.linalg.lu_solve(lufac, c[basis], trans=1)
        r = c - A.T @ y  # reduced costs (basic entries ~0)

        enter, sdir = -1, 0
        push = -1
        for j in range(n):
            if in_basis[j]:
                continue
            if stat[j] == -1 and r[j] < -tol_rc:
                enter, sdir = j, +1
                break
            if stat[j] == +1 and r[j] > tol_rc:
                enter, sdir = j, -1
                break
            if stat[j] == 0:
                if r[j] > tol_rc:
                    enter, sdir = j, -1
                    break
                if r[j] < -tol_rc:
                    enter, sdir = j, +1
                    break
                if push < 0:
                    push = j
        if enter < 0:
            if push < 0:
                status = "optimal"
                break
            enter, sdir = push, +1  # drive a zero-cost free variable to a vertex

        w = scipy.linalg.lu_solve(lufac, A[:, enter])
        # distance to the entering variable's own blocking bound
        t = (u[enter] - x[enter]) if sdir > 0 else (x[enter] - l[enter])
        leave = -1
        for i, bi in enumerate(basis):
            delta = -sdir * w[i]
            if delta > eps:
                ti = (u[bi] - x[bi]) / delta
            elif delta < -eps:
                ti = (l[bi] - x[bi]) / delta
            else:
                continue
            # relative tie window: an absolute one swamps the comparison
            # when the box (hence every ratio) is tiny
            tw = 1e-12 * max(t, ti, 1e-300)
            if ti < t - tw or (ti <= t + tw and (leave < 0 or bi < basis[leave])):
                t, leave = ti, i
        t = max(t, 0.0)

        x[enter] += sdir * t
        xb = x[np.array(basis)] - sdir * t * w
        for i, bi in enumerate(basis):
            x[bi] = xb[i]
        if leave < 0:
            stat[enter] = +1 if sdir > 0 else -1
            x[enter] = u[enter] if sdir > 0 else l[enter]
        else:
            out = basis[leave]
            in_basis[out] = False
            # snap the leaving variable onto the bound it hit
            stat[out] = -1 if abs(x[out] - l[out]) <= abs(x[out] - u[out]) else +1
            x[out] = l[out] if stat[out] == -1 else u[out]
            basis[leave] = enter
            in_basis[enter] = True
            stat[enter] = 0

    # re-solve the basic block from the final basis: the incremental
    # updates and bound snaps above can leave an eps-scale equality
    # residual that matters when the optimum itself is tiny
    try:
        mask = ~in_basis
        rhs = -A[:, mask] @ x[mask] if mask.any() else np.zeros(m)
        x[np.array(basis)] = scipy.linalg.lu_solve(
            scipy.linalg.lu_factor(A[:, basis]), rhs)
    except (scipy.linalg.LinAlgError, ValueError):
        pass
    np.clip(x, l, u, out=x)
    return LpSolution(d=x, objective=float(c @ x), status=status)


def _displacement_box(x, lower, upper, cap):
    lo = np.maximum(lower - x, -cap)
    hi = np.minimum(upper - x, cap)
    # guard against drift when x sits on a bound
    return np.minimum(lo, 0.0), np.maximum(hi, 0.0)


def chi_N(x, c, J, lower, upper):
    """Primal criticality: best linearized violation decrease in the unit box.

    Returns (|c^T J d_N|, d_N) where d_N solves the separable LP with
    cost J^T c over [max(lower-x,-1), min(upper-x,1)].
    """
    cost = J.T @ c
    lo, hi = _displacement_box(x, lower, upper, 1.0)
    sol = solve_separable_lp(cost, lo, hi)
    return abs(sol.objective), sol.d


def chi_T(x, g, J, lower, upper):
    """Dual criticality: |g^T d_T| with d_T from the equality box LP."""
    lo, hi = _displacement_box(x, lower, upper, 1.0)
    sol = solve_equality_box_lp(BoxLpInstance(cost=g, lower=lo, upper=hi, equality=J))
    return abs(float(g @ sol.d)), sol.d


def tangential_lp_step(x, g, J, lower, upper, radius) -> np.ndarray:
    """Tangential step from the LP with the step box shrunk to the radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    lo, hi = _displacement_box(x, lower, upper, radius)
    sol = solve_equality_box_lp(BoxLpInstance(cost=g, lower=lo, upper=hi, equality=J))
    return sol.d


def tangential_backtrack_step(d_T, radius) -> np.ndarray:
    """Scale d_T to sup-norm radius; the scale never exceeds 1 so the step
    stays inside the LP box that produced d_T."""
    nrm = float(np.max(np.abs(d_T)))
    if nrm == 0.0:
        raise ValueError("backtrack step requested with d_T = 0")
    return min(radius / nrm, 1.0) * d_T


def dykstra_project(x, g, J, lower, upper, tol=1e-10, max_iter=10000) -> ProjectionResult:
    """Project x - g onto {x + y : J y = 0, lower <= x + y <= upper}.

    Dykstra alternation between the affine subspace {z : J z = J x} and
    the box, with increments carried for both sets.
    """
    x = np.asarray(x, dtype=float)
    z0 = x - np.asarray(g, dtype=float)
    fac = gram_factor(J)
    Jx = J @ x
    stop = tol * (1.0 + np.linalg.norm(x) + np.linalg.norm(g))

    y = z0.copy()
    p = np.zeros_like(y)
    q = np.zeros_like(y)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = y + p
        a = w - J.T @ fac.solve(J @ w - Jx)
        p = w - a
        v = a + q
        y_new = np.clip(v, lower, upper)
        q = v - y_new
        # both the iterate change and the gap between the two projections
        # must be small: y alone can stall inside the box while the affine
        # side is still far away
        if max(np.max(np.abs(y_new - y)), np.max(np.abs(y_new - a))) <= stop:
            y = y_new
            converged = True
            break
        y = y_new

    p1 = y - x
    return ProjectionResult(p1=p1, pi_T=float(np.linalg.norm(p1)),
                            iterations=it, converged=converged)


def tangential_projection_step(p1, alpha_T) -> np.ndarray:
    """Step min(alpha_T, 1) * p1 along the projected gradient displacement."""
    return min(alpha_T, 1.0) * np.asarray(p1, dtype=float)
