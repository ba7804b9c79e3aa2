import json
import math

import numpy as np
import pytest

from adic import Problem, SolverConfig, catalog_build, solve
from adic.driver import (AdagradReport, StepRecord, adagrad_stepsize,
                         diagnostics_psi, rate_monitor, read_trace,
                         switch_test, trace_check_adagrad, write_trace)

INF = float("inf")


def _vec(*v):
    return np.array(v, dtype=float)


# ------------------------------------------------------------- config

def test_config_defaults_match_protocol():
    cfg = SolverConfig()
    assert cfg.varsigma == 1e-5
    assert cfg.eta == 2.0
    assert cfg.theta_T == 1.0
    assert cfg.theta_N == 5.0
    assert cfg.kappa_n == 1e-2
    assert cfg.beta == 1e3
    assert cfg.tol_dual == 1e-4
    assert cfg.tol_primal == 1e-5
    assert cfg.max_iters == 50000
    assert cfg.time_limit_s == 3600.0
    assert cfg.normal_when_switch == "never"


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(variant="XX")
    with pytest.raises(ValueError):
        SolverConfig(normal_when_switch="sometimes")
    with pytest.raises(ValueError):
        SolverConfig(varsigma=0.6)
    with pytest.raises(ValueError):
        SolverConfig(kappa_n=0.5)


# ------------------------------------------------------------- stepsize / switch

def test_stepsize_formula():
    assert adagrad_stepsize(0.0, 1.0, 2.0, 1e-5) == pytest.approx(2.0 / math.sqrt(1 + 1e-5))
    assert adagrad_stepsize(3.0, 1.0, 2.0, 1e-5) == pytest.approx(2.0 / math.sqrt(4 + 1e-5))
    assert adagrad_stepsize(0.0, 0.0, 2.0, 1e-5) == pytest.approx(2.0 / math.sqrt(1e-5))


def test_stepsize_achle1_bounds():
    rng = np.random.default_rng(61)
    eta, vs = 2.0, 1e-5
    for _ in range(1000):
        Gamma = float(rng.random() * 100)
        w = float(rng.random() * 10)
        a = adagrad_stepsize(Gamma, w, eta, vs)
        assert a <= eta / math.sqrt(vs) + 1e-12
        assert a * w < eta


def test_switch_examples():
    assert switch_test(0.0, 0.0, 1.0, 1e3)
    assert not switch_test(1.0, 0.0, 1.0, 1e3)
    assert switch_test(1.0, 1e-3, 2.0, 1e3)  # 1 <= 2


# ------------------------------------------------------------- diagnostics psi

def test_psi_feasible_point():
    psi, lam, g_t = diagnostics_psi(_vec(0, 0), _vec(1, 1),
                                    np.zeros(1), np.array([[1.0, 1.0]]), 10.0)
    assert psi == pytest.approx(0.0)


def test_psi_hand_instance():
    psi, lam, g_t = diagnostics_psi(_vec(0, 0), _vec(1, 1), _vec(0.5),
                                    np.array([[1.0, 1.0]]), 10.0)
    assert lam[0] == pytest.approx(-1.0)
    assert psi == pytest.approx(4.5)
    assert np.max(np.abs(np.array([[1.0, 1.0]]) @ g_t)) <= 1e-10


def test_psi_includes_reported_objective():
    psi, _, _ = diagnostics_psi(_vec(0, 0), _vec(1, 1), _vec(0.5),
                                np.array([[1.0, 1.0]]), 10.0, f_value=2.0)
    assert psi == pytest.approx(6.5)


def test_psi_rank_deficient_degrades(monkeypatch):
    import adic.driver as drv
    from adic.linalg import RankDeficiencyError

    def boom(J, g, factor=None):
        raise RankDeficiencyError("forced")

    monkeypatch.setattr(drv, "lsq_multipliers", boom)
    psi, lam, g_t = diagnostics_psi(_vec(0, 0), _vec(1, 1), _vec(1.0),
                                    np.array([[1.0, 1.0]]), 10.0)
    assert psi is None and lam is None and g_t is None


# ------------------------------------------------------------- adagrad check

def _trec(k, kind, omega_t, alpha_t, gamma, **kw):
    base = dict(omega_n=0.0, norm_c_inf=0.0, g_dot_st=None,
                normal_decrease=None, psi=None, wall_ms=0.0)
    base.update(kw)
    return StepRecord(k=k, kind=kind, omega_t=omega_t, alpha_t=alpha_t,
                      gamma=gamma, **base)


def test_adagrad_single_tangential_hand_check():
    eta, vs = 2.0, 1e-5
    alpha = eta / math.sqrt(0.0 + 1.0 + vs)
    rep = trace_check_adagrad([_trec(0, "T", 1.0, alpha, 1.0)], eta, vs)
    assert rep.tangential_count == 1
    assert rep.lhs_linear == pytest.approx(alpha)
    assert rep.rhs_linear == pytest.approx(
        eta * math.sqrt(vs) * (math.sqrt(1 + 1.0 / vs) - 1.0))
    assert rep.rhs_linear == pytest.approx(1.9936, abs=2e-3)
    assert rep.ok


def test_adagrad_empty_subsequence():
    rep = trace_check_adagrad([_trec(0, "N", 0.5, 1.0, 0.0)], 2.0, 1e-5)
    assert rep.tangential_count == 0
    assert rep.ok


def test_adagrad_synthetic_multistep():
    # honest bookkeeping over a synthetic tangential-only run
    eta, vs = 2.0, 1e-5
    rng = np.random.default_rng(67)
    gamma = 0.0
    trace = []
    for k in range(200):
        w = float(rng.random() * 2)
        alpha = eta / math.sqrt(gamma + w ** 2 + vs)
        gamma += w ** 2
        trace.append(_trec(k, "T", w, alpha, gamma))
    rep = trace_check_adagrad(trace, eta, vs)
    assert rep.ok


# ------------------------------------------------------------- rate monitor

def test_rate_monitor_short_run_vacuous():
    ok, kf, worst = rate_monitor([1.0] * 5)
    assert ok and math.isnan(kf)


def test_rate_monitor_exact_sqrt_decay_passes():
    # partial sums equal to sqrt(k+1) make every running mean 1/sqrt(k+1)
    terms = [math.sqrt(k + 1) - math.sqrt(k) for k in range(500)]
    ok, kf, worst = rate_monitor(terms)
    assert ok
    assert kf == pytest.approx(1.0)
    assert worst == pytest.approx(1.0 / 1.05)


def test_rate_monitor_plateau_fails():
    terms = [1.0] * 500  # no decay at all
    ok, _, worst = rate_monitor(terms)
    assert not ok and worst > 1.0


# ------------------------------------------------------------- solve end-to-end

def test_solve_lq2_reaches_known_solution():
    p = catalog_build("lq2")
    for variant in ("LP", "BK", "PR"):
        r = solve(p, SolverConfig(variant=variant))
        # terminal status depends on the feasibility threshold; criticality
        # and the solution itself are what the run must deliver
        assert r.status in ("KKT", "INFEASIBLE_CRITICAL")
        assert r.final_chi_T <= 1e-4 and r.final_chi_N <= 1e-5
        assert np.max(np.abs(r.x - _vec(1, 0))) <= 1e-3


def test_solve_terminates_immediately_at_critical_start():
    # c(x0)=0 and g in range(J^T), no active bounds: both measures vanish
    p = Problem(n=2, m=1, lower=np.full(2, -INF), upper=np.full(2, INF),
                x0=_vec(0.5, -0.5),
                grad_oracle=lambda x: _vec(3.0, 3.0),
                cons_oracle=lambda x: _vec(x[0] + x[1]),
                jac_oracle=lambda x: np.array([[1.0, 1.0]]), name="crit0")
    r = solve(p, SolverConfig(variant="LP"))
    assert r.status == "KKT"
    assert r.iters == 0


def test_solve_projects_infeasible_start():
    p = catalog_build("lq2")
    p.x0 = _vec(-5.0, -5.0)
    r = solve(p, SolverConfig(variant="LP", max_iters=100))
    for rec in r.trace:
        if rec.x is not None:
            assert np.all(rec.x >= p.lower - 1e-12)


def test_gamma_increases_exactly_on_tangential_records():
    r = solve(catalog_build("lq2"), SolverConfig(variant="LP"))
    gamma = 0.0
    for rec in r.trace:
        if rec.kind in ("T", "TN"):
            assert rec.gamma == pytest.approx(gamma + rec.omega_t ** 2, rel=1e-12)
        else:
            assert rec.gamma == gamma
        gamma = rec.gamma


def test_alpha_matches_gamma_after_on_tangential_records():
    cfg = SolverConfig(variant="BK")
    r = solve(catalog_build("quadline3"), cfg)
    for rec in r.trace:
        if rec.kind in ("T", "TN"):
            assert rec.alpha_t == pytest.approx(
                cfg.eta / math.sqrt(cfg.varsigma + rec.gamma), rel=1e-12)


def test_alpha_nonincreasing_along_tangential_subsequence():
    r = solve(catalog_build("quadline5"), SolverConfig(variant="LP"))
    alphas = [rec.alpha_t for rec in r.trace if rec.kind in ("T", "TN")]
    assert all(a2 <= a1 + 1e-15 for a1, a2 in zip(alphas, alphas[1:]))


def test_step_failure_status_on_wall():
    r = solve(catalog_build("wall"), SolverConfig(variant="LP"))
    # the infeasible stationary point is reached and classified, not an error
    assert r.status == "INFEASIBLE_CRITICAL"
    assert r.final_norm_c_inf == pytest.approx(1.0)
    assert abs(r.x[0]) <= 1e-8


def test_tn_records_only_in_always_mode():
    r = solve(catalog_build("circle"), SolverConfig(variant="LP"))
    assert all(rec.kind != "TN" for rec in r.trace)
    r2 = solve(catalog_build("circle"),
               SolverConfig(variant="LP", normal_when_switch="always"))
    assert any(rec.kind == "TN" for rec in r2.trace)
    assert r2.status in ("KKT", "INFEASIBLE_CRITICAL")


def test_iter_limit_status():
    r = solve(catalog_build("quadline3"), SolverConfig(variant="LP", max_iters=3))
    assert r.status == "ITER_LIMIT"
    assert r.iters == 3


def test_time_limit_status():
    r = solve(catalog_build("quadline3"),
              SolverConfig(variant="LP", time_limit_s=0.0))
    assert r.status == "TIME_LIMIT"


def test_kkt_status_reevaluates_cleanly():
    from adic.subproblems import chi_N, chi_T
    p = catalog_build("quadnet")
    cfg = SolverConfig(variant="LP")
    r = solve(p, cfg)
    assert r.status == "KKT"
    cn, _ = chi_N(r.x, p.cons(r.x), p.jac(r.x), p.lower, p.upper)
    ct, _ = chi_T(r.x, p.grad(r.x), p.jac(r.x), p.lower, p.upper)
    assert ct <= cfg.tol_dual and cn <= cfg.tol_primal
    assert np.max(np.abs(p.cons(r.x))) <= 1e-6 * (1 + np.max(np.abs(p.cons(p.x0))))


def test_counts_partition_trace():
    r = solve(catalog_build("lq2"), SolverConfig(variant="LP"))
    t = sum(1 for rec in r.trace if rec.kind in ("T", "TN"))
    n = sum(1 for rec in r.trace if rec.kind in ("N", "TN"))
    assert t == r.tangential_count
    assert n == r.normal_count


# ------------------------------------------------------------- trace I/O

def test_trace_wire_format_field_names():
    r = solve(catalog_build("lq2"), SolverConfig(variant="LP", max_iters=5))
    d = json.loads(r.trace[0].to_json())
    assert list(d.keys()) == ["k", "kind", "omega_t", "omega_n", "alpha_t",
                              "gamma", "norm_c_inf", "g_dot_st",
                              "normal_decrease", "psi", "wall_ms"]


def test_trace_roundtrip(tmp_path):
    r = solve(catalog_build("lq2"), SolverConfig(variant="LP"))
    path = tmp_path / "t.jsonl"
    write_trace(r.trace, str(path))
    back = read_trace(str(path))
    assert len(back) == len(r.trace)
    for a, b in zip(r.trace, back):
        assert a.k == b.k and a.kind == b.kind
        assert a.omega_t == b.omega_t and a.gamma == b.gamma


def test_trace_malformed_line_reports_position(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"k": 0, "kind": "T"}\nnot json\n')
    with pytest.raises(ValueError, match="line 1"):
        read_trace(str(path))
