"""Built-in analytic test problems.

Every entry is a parameter-free builder returning a fresh Problem; the
matching objective functions live in a private map consumed only by the
bench module and the test suite (the solver never sees f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from .model import GeneralProblem, Problem, add_slacks

INF = float("inf")


@dataclass
class CatalogEntry:
    name: str
    builder: Callable[[], Problem]
    tags: tuple = ()


_ENTRIES: Dict[str, CatalogEntry] = {}
_OBJECTIVES: Dict[str, Callable[[np.ndarray], float]] = {}


def _register(name, tags, objective):
    def deco(builder):
        _ENTRIES[name] = CatalogEntry(name=name, builder=builder, tags=tuple(tags))
        _OBJECTIVES[name] = objective
        return builder
    return deco


def catalog_list() -> List[CatalogEntry]:
    """All entries, sorted by name (deterministic)."""
    return [_ENTRIES[k] for k in sorted(_ENTRIES)]


def mini_suite() -> List[CatalogEntry]:
    """Entries used for quick benchmarking: everything not tagged "hard"."""
    return [e for e in catalog_list() if "hard" not in e.tags]


def catalog_build(name: str) -> Problem:
    if name not in _ENTRIES:
        raise KeyError(f"unknown catalog problem {name!r}")
    return _ENTRIES[name].builder()


def _vec(*vals):
    return np.array(vals, dtype=float)


# --- quadratic objective, linear constraint, active bound ------------------

@_register("lq2", ("bounds-active", "convex"),
           lambda x: 0.5 * ((x[0] - 2.0) ** 2 + x[1] ** 2))
def _lq2():
    return Problem(
        n=2, m=1,
        lower=_vec(0, 0), upper=_vec(INF, INF), x0=_vec(0, 0),
        grad_oracle=lambda x: _vec(x[0] - 2.0, x[1]),
        cons_oracle=lambda x: _vec(x[0] + x[1] - 1.0),
        jac_oracle=lambda x: np.array([[1.0, 1.0]]),
        name="lq2", known_solution=_vec(1, 0),
    )


# --- linear objective on a circle ------------------------------------------

@_register("circle", ("nonlinear-constraint", "nonconvex"),
           lambda x: x[0] + x[1])
def _circle():
    # constraint scaled down and the box kept tight so that the
    # restoration requirement kappa_n*omega_N^2 stays attainable everywhere
    # the iterates can drift
    s = 0.15
    return Problem(
        n=2, m=1,
        lower=_vec(-2, -2), upper=_vec(2, 2), x0=_vec(1.4, 0.6),
        grad_oracle=lambda x: _vec(1.0, 1.0),
        cons_oracle=lambda x: _vec(s * (x[0] ** 2 + x[1] ** 2 - 2.0)),
        jac_oracle=lambda x: np.array([[2.0 * s * x[0], 2.0 * s * x[1]]]),
        name="circle", known_solution=_vec(-1, -1),
    )


# --- parabola-equality problem ----------------------------------------------

@_register("parabola", ("nonlinear-constraint",),
           lambda x: (1.0 - x[0]) ** 2)
def _parabola():
    # the 1.5 constraint scaling balances restoration against the
    # objective pull so the violation decays without a long plateau
    s = 1.5
    return Problem(
        n=2, m=1,
        lower=_vec(-2, -2), upper=_vec(2, 4), x0=_vec(-1.2, 1.0),
        grad_oracle=lambda x: _vec(-2.0 * (1.0 - x[0]), 0.0),
        cons_oracle=lambda x: _vec(s * (x[1] - x[0] ** 2)),
        jac_oracle=lambda x: np.array([[-2.0 * s * x[0], s]]),
        name="parabola", known_solution=_vec(1, 1),
    )


# --- trigonometric objective, one linear constraint -------------------------

@_register("trigline", ("nonconvex",),
           lambda x: 8.0 * math.sin(math.pi * x[0] / 12.0)
           * math.cos(math.pi * x[1] / 16.0))
def _trigline():
    # the amplitude keeps the gradients O(1); with the raw trig scale the
    # projection variant inches along an almost-flat landscape
    a = math.pi / 12.0
    b = math.pi / 16.0
    m = 8.0
    return Problem(
        n=2, m=1,
        lower=_vec(-INF, -INF), upper=_vec(INF, INF), x0=_vec(0, 0),
        grad_oracle=lambda x: _vec(
            m * a * math.cos(a * x[0]) * math.cos(b * x[1]),
            -m * b * math.sin(a * x[0]) * math.sin(b * x[1])),
        cons_oracle=lambda x: _vec(4.0 * x[0] - 3.0 * x[1]),
        jac_oracle=lambda x: np.array([[4.0, -3.0]]),
        name="trigline",
    )


# --- convex quadratic, one linear constraint in 3 vars -----------------------

@_register("quadline3", ("convex",),
           lambda x: (x[0] + x[1]) ** 2 + (x[1] + x[2]) ** 2)
def _quadline3():
    return Problem(
        n=3, m=1,
        lower=np.full(3, -INF), upper=np.full(3, INF), x0=_vec(-4, 1, 1),
        grad_oracle=lambda x: _vec(2 * (x[0] + x[1]),
                                   2 * (x[0] + x[1]) + 2 * (x[1] + x[2]),
                                   2 * (x[1] + x[2])),
        cons_oracle=lambda x: _vec(x[0] + 2 * x[1] + 3 * x[2] - 1.0),
        jac_oracle=lambda x: np.array([[1.0, 2.0, 3.0]]),
        name="quadline3", known_solution=_vec(0.5, -0.5, 0.5),
    )


# --- convex quadratic, two linear constraints in 5 vars ----------------------

@_register("quadline5", ("convex",),
           lambda x: (x[0] - 1.0) ** 2 + (x[1] - x[2]) ** 2 + (x[3] - x[4]) ** 2)
def _quadline5():
    return Problem(
        n=5, m=2,
        lower=np.full(5, -INF), upper=np.full(5, INF),
        x0=_vec(3, 5, -3, 2, -2),
        grad_oracle=lambda x: _vec(2 * (x[0] - 1.0),
                                   2 * (x[1] - x[2]), -2 * (x[1] - x[2]),
                                   2 * (x[3] - x[4]), -2 * (x[3] - x[4])),
        cons_oracle=lambda x: _vec(x.sum() - 5.0,
                                   x[2] - 2.0 * (x[3] + x[4]) + 3.0),
        jac_oracle=lambda x: np.array([[1.0, 1, 1, 1, 1],
                                       [0.0, 0, 1, -2, -2]]),
        name="quadline5", known_solution=np.ones(5),
    )


# --- separable quadratic, three linear constraints ---------------------------

@_register("quadnet", ("convex",),
           lambda x: ((x[0] - x[1]) ** 2 + (x[1] + x[2] - 2.0) ** 2
                      + (x[3] - 1.0) ** 2 + (x[4] - 1.0) ** 2))
def _quadnet():
    return Problem(
        n=5, m=3,
        lower=np.full(5, -INF), upper=np.full(5, INF),
        x0=_vec(2.5, 0.5, 2, -1, 0.5),
        grad_oracle=lambda x: _vec(2 * (x[0] - x[1]),
                                   -2 * (x[0] - x[1]) + 2 * (x[1] + x[2] - 2.0),
                                   2 * (x[1] + x[2] - 2.0),
                                   2 * (x[3] - 1.0), 2 * (x[4] - 1.0)),
        cons_oracle=lambda x: _vec(x[0] + 3 * x[1] - 4.0,
                                   x[2] + x[3] - 2.0 * x[4],
                                   x[1] - x[4]),
        jac_oracle=lambda x: np.array([[1.0, 3, 0, 0, 0],
                                       [0.0, 0, 1, 1, -2],
                                       [0.0, 1, 0, 0, -1]]),
        name="quadnet", known_solution=np.ones(5),
    )


# --- box-constrained projection onto a budget hyperplane ---------------------

@_register("boxsimplex", ("bounds-active", "convex"),
           lambda x: 0.5 * float(np.sum((x - np.array([1.5, -0.5, 0.8, 0.3])) ** 2)))
def _boxsimplex():
    a = _vec(1.5, -0.5, 0.8, 0.3)
    return Problem(
        n=4, m=1,
        lower=np.zeros(4), upper=np.ones(4), x0=np.full(4, 0.25),
        grad_oracle=lambda x: x - a,
        cons_oracle=lambda x: _vec(x.sum() - 1.0),
        jac_oracle=lambda x: np.ones((1, 4)),
        name="boxsimplex", known_solution=_vec(0.85, 0.0, 0.15, 0.0),
    )


# --- slack-transformed disk constraint ---------------------------------------

@_register("diskslack", ("slack", "bounds-active", "nonlinear-constraint", "hard"),
           lambda x: (x[0] - 1.0) ** 2 + (x[1] - 2.0) ** 2)
def _diskslack():
    s5 = math.sqrt(5.0)
    gp = GeneralProblem(
        n=2, m=1,
        lower=np.full(2, -INF), upper=np.full(2, INF), x0=_vec(0.5, 0.1),
        grad_oracle=lambda x: _vec(2 * (x[0] - 1.0), 2 * (x[1] - 2.0)),
        cons_oracle=lambda x: _vec(x[0] ** 2 + x[1] ** 2),
        jac_oracle=lambda x: np.array([[2.0 * x[0], 2.0 * x[1]]]),
        c_lower=_vec(0.0), c_upper=_vec(1.0),
        name="diskslack",
    )
    p = add_slacks(gp)
    p.name = "diskslack"
    p.known_solution = _vec(1.0 / s5, 2.0 / s5, 1.0)
    return p


# --- slack-transformed linear range constraint --------------------------------

@_register("rangeqp", ("slack", "bounds-active", "convex"),
           lambda x: 0.5 * ((x[0] - 2.0) ** 2 + (x[1] - 1.0) ** 2))
def _rangeqp():
    # 0 <= x1 + 2 x2 <= 3 becomes x1 + 2 x2 - s = 0 with s in [0, 3];
    # the unconstrained minimizer (2, 1) violates the upper range, so the
    # slack sits at its upper bound and x is the projection onto x1+2x2=3
    gp = GeneralProblem(
        n=2, m=1,
        lower=np.full(2, -3.0), upper=np.full(2, 3.0), x0=_vec(0.0, 0.0),
        grad_oracle=lambda x: _vec(x[0] - 2.0, x[1] - 1.0),
        cons_oracle=lambda x: _vec(x[0] + 2.0 * x[1]),
        jac_oracle=lambda x: np.array([[1.0, 2.0]]),
        c_lower=_vec(0.0), c_upper=_vec(3.0),
        name="rangeqp",
    )
    p = add_slacks(gp)
    p.name = "rangeqp"
    p.known_solution = _vec(1.8, 0.6, 3.0)
    return p


# --- infeasible critical point on the boundary -------------------------------

@_register("wall", ("infeasible", "bounds-active"),
           lambda x: float(x[0]))
def _wall():
    # 0.5*c^2 = 0.5*(x+1)^2 has its constrained stationary point at the
    # bound x = 0, where c = 1 != 0
    return Problem(
        n=1, m=1,
        lower=_vec(0.0), upper=_vec(INF), x0=_vec(2.0),
        grad_oracle=lambda x: _vec(1.0),
        cons_oracle=lambda x: _vec(x[0] + 1.0),
        jac_oracle=lambda x: np.array([[1.0]]),
        name="wall", known_solution=_vec(0.0),
    )


# --- linear objective on a sphere --------------------------------------------

@_register("sphere3", ("nonlinear-constraint", "nonconvex", "hard"),
           lambda x: x[2])
def _sphere3():
    # minimize the height coordinate over the unit sphere (scaled by 1/4);
    # the optimum is the south pole.  Tagged hard: the LP/BK variants let
    # the violation bulge on the curved surface before restoring it, so
    # the runs converge but with a long plateau in the decay profile
    t = 0.25
    return Problem(
        n=3, m=1,
        lower=np.full(3, -2.0), upper=np.full(3, 2.0), x0=_vec(0.4, -0.3, -0.6),
        grad_oracle=lambda x: _vec(0.0, 0.0, 1.0),
        cons_oracle=lambda x: _vec(t * (float(x @ x) - 1.0)),
        jac_oracle=lambda x: 2.0 * t * x.reshape(1, -1),
        name="sphere3", known_solution=_vec(0.0, 0.0, -1.0),
    )


# --- corner: equality plus two active bounds ----------------------------------

@_register("corner", ("bounds-active", "convex"),
           lambda x: 0.5 * ((x[0] + 1.0) ** 2 + (x[1] + 1.0) ** 2))
def _corner():
    return Problem(
        n=2, m=1,
        lower=np.zeros(2), upper=np.full(2, INF), x0=_vec(2.0, 2.0),
        grad_oracle=lambda x: _vec(x[0] + 1.0, x[1] + 1.0),
        cons_oracle=lambda x: _vec(x[0] - x[1]),
        jac_oracle=lambda x: np.array([[1.0, -1.0]]),
        name="corner", known_solution=_vec(0.0, 0.0),
    )


# --- strongly convex transcendental objective ---------------------------------

@_register("expline", ("convex", "transcendental"),
           lambda x: math.exp(x[0]) + math.exp(-x[1]) + 0.5 * float(x @ x))
def _expline():
    return Problem(
        n=2, m=1,
        lower=np.full(2, -INF), upper=np.full(2, INF), x0=_vec(2.0, -1.0),
        grad_oracle=lambda x: _vec(math.exp(x[0]) + x[0],
                                   -math.exp(-x[1]) + x[1]),
        cons_oracle=lambda x: _vec(x[0] + x[1] - 1.0),
        jac_oracle=lambda x: np.array([[1.0, 1.0]]),
        name="expline",
    )


# --- ellipse with linear objective and bounds ----------------------------------

@_register("ellipse", ("nonlinear-constraint", "nonconvex", "hard"),
           lambda x: -x[0] - x[1])
def _ellipse():
    # max x1+x2 on the ellipse x1^2/4 + x2^2 = 1.  The anisotropic curvature
    # keeps the switching rule in tangential mode long after the dual measure
    # is small, so the LP/BK variants typically time out while PR succeeds;
    # kept as a deliberately hard instance outside the mini suite.
    r = math.sqrt(5.0)
    t = 0.25
    return Problem(
        n=2, m=1,
        lower=np.full(2, -3.0), upper=np.full(2, 3.0), x0=_vec(1.0, 0.5),
        grad_oracle=lambda x: _vec(-1.0, -1.0),
        cons_oracle=lambda x: _vec(t * (0.25 * x[0] ** 2 + x[1] ** 2 - 1.0)),
        jac_oracle=lambda x: np.array([[t * 0.5 * x[0], t * 2.0 * x[1]]]),
        name="ellipse", known_solution=_vec(4.0 / r, 1.0 / r),
    )


def reference_objective(name: str):
    """Bench-only objective oracle for reporting; never used by the solver."""
    return _OBJECTIVES.get(name)
