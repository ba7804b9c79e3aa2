"""Problem abstraction: oracles, bounds, slack lifting and noisy gradients.

A :class:`Problem` exposes the gradient of the objective, the equality
constraints and their Jacobian, but never the objective value itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass
class Problem:
    """Smooth problem  min f(x)  s.t.  c(x) = 0,  lower <= x <= upper.

    Only first-order information is available: the gradient oracle g(x),
    the constraint values c(x) and the Jacobian J(x).  There is no oracle
    for f itself.
    """

    n: int
    m: int
    lower: np.ndarray
    upper: np.ndarray
    x0: np.ndarray
    grad_oracle: Callable[[np.ndarray], np.ndarray]
    cons_oracle: Callable[[np.ndarray], np.ndarray]
    jac_oracle: Callable[[np.ndarray], np.ndarray]
    name: str = "problem"
    known_solution: Optional[np.ndarray] = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.m > self.n:
            raise ValueError(f"m={self.m} exceeds n={self.n}")
        for v, nm in ((self.lower, "lower"), (self.upper, "upper"), (self.x0, "x0")):
            if v.shape != (self.n,):
                raise ValueError(f"{nm} has shape {v.shape}, expected ({self.n},)")
        if np.any(self.lower > self.upper):
            raise ValueError("lower > upper on some component")

    def grad(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.grad_oracle(x), dtype=float)

    def cons(self, x: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.cons_oracle(x), dtype=float))

    def jac(self, x: np.ndarray) -> np.ndarray:
        J = np.atleast_2d(np.asarray(self.jac_oracle(x), dtype=float))
        if J.shape != (self.m, self.n):
            raise ValueError(f"Jacobian shape {J.shape}, expected ({self.m}, {self.n})")
        return J


@dataclass
class GeneralProblem:
    """Problem with two-sided constraints  c_lower <= c(x) <= c_upper.

    Input form for :func:`add_slacks`; rows with c_lower == c_upper are
    plain equalities.
    """

    n: int
    m: int
    lower: np.ndarray
    upper: np.ndarray
    x0: np.ndarray
    grad_oracle: Callable[[np.ndarray], np.ndarray]
    cons_oracle: Callable[[np.ndarray], np.ndarray]
    jac_oracle: Callable[[np.ndarray], np.ndarray]
    c_lower: np.ndarray
    c_upper: np.ndarray
    name: str = "general"


def project_to_box(x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Componentwise median of (lower, x, upper)."""
    return np.minimum(np.maximum(np.asarray(x, dtype=float), lower), upper)


def add_slacks(gp: GeneralProblem) -> Problem:
    """Lift two-sided constraints to equalities with bounded slack variables.

    Range rows c_L < c_U become c_i(x) - s_j = 0 with s_j in [c_L, c_U];
    equality rows pass through as c_i(x) - c_L = 0.  The Jacobian gains a
    -1 entry in the slack column of each range row; the slack start value
    is c(x0) clamped into its bounds.
    """
    cl = np.asarray(gp.c_lower, dtype=float)
    cu = np.asarray(gp.c_upper, dtype=float)
    if np.any(cl > cu):
        raise ValueError("constraint row with c_lower > c_upper")
    range_rows = np.flatnonzero(cl < cu)
    eq_rows = np.flatnonzero(cl == cu)
    n_sl = len(range_rows)
    n_new = gp.n + n_sl
    shift = np.zeros(gp.m)
    shift[eq_rows] = cl[eq_rows]

    # -I block mapping slack j to its range row
    E = np.zeros((gp.m, n_sl))
    for j, i in enumerate(range_rows):
        E[i, j] = -1.0

    inner_cons, inner_jac, inner_grad = gp.cons_oracle, gp.jac_oracle, gp.grad_oracle
    nx = gp.n

    def cons(z):
        x, s = z[:nx], z[nx:]
        out = np.atleast_1d(np.asarray(inner_cons(x), dtype=float)) - shift
        out[range_rows] -= s
        return out

    def jac(z):
        J = np.atleast_2d(np.asarray(inner_jac(z[:nx]), dtype=float))
        return np.hstack([J, E])

    def grad(z):
        g = np.asarray(inner_grad(z[:nx]), dtype=float)
        return np.concatenate([g, np.zeros(n_sl)])

    lower = np.concatenate([gp.lower, cl[range_rows]])
    upper = np.concatenate([gp.upper, cu[range_rows]])
    c0 = np.atleast_1d(np.asarray(inner_cons(gp.x0), dtype=float))
    s0 = np.clip(c0[range_rows], cl[range_rows], cu[range_rows])
    x0 = np.concatenate([gp.x0, s0])

    return Problem(
        n=n_new, m=gp.m, lower=lower, upper=upper, x0=x0,
        grad_oracle=grad, cons_oracle=cons, jac_oracle=jac,
        name=gp.name + "+slacks",
    )


@dataclass
class NoisyGradientWrapper:
    """Componentwise multiplicative Gaussian noise on the gradient oracle.

    g~_i = g_i(x) * (1 + sigma * xi_i) with xi_i drawn from a seeded PCG64
    stream in query order, so equal (seed, query sequence) pairs give
    bit-identical gradients.
    """

    inner: Problem
    sigma: float
    rng_seed: int
    draw_count: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        self._rng = np.random.Generator(np.random.PCG64(self.rng_seed))

    def grad(self, x: np.ndarray) -> np.ndarray:
        return noisy_grad(self, x)

    @property
    def problem(self) -> Problem:
        """The inner problem with the gradient oracle replaced by the noisy one."""
        p = self.inner
        return Problem(
            n=p.n, m=p.m, lower=p.lower, upper=p.upper, x0=p.x0,
            grad_oracle=self.grad, cons_oracle=p.cons_oracle,
            jac_oracle=p.jac_oracle, name=p.name,
            known_solution=p.known_solution,
        )


def noisy_grad(wrapper: NoisyGradientWrapper, x: np.ndarray) -> np.ndarray:
    g = wrapper.inner.grad(x)
    if wrapper.sigma == 0.0:
        # still consume the stream so the query sequence stays aligned
        xi = wrapper._rng.standard_normal(g.shape[0])
        wrapper.draw_count += 1
        return g
    xi = wrapper._rng.standard_normal(g.shape[0])
    wrapper.draw_count += 1
    return g * (1.0 + wrapper.sigma * xi)
