"""End-to-end acceptance checks, one summary line per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) before
asserting, so a failing criterion still reports what was measured.
"""
import time

import numpy as np
import pytest

from bearing_swarm.engine import run
from bearing_swarm.geometry import bearing_from_angle
from bearing_swarm.graph import random_connected_graph, verify_lemma2
from bearing_swarm.scenario import bundled_scenarios, load_bundled, validate_scenario
from bearing_swarm.trials import finite_time_trial

from conftest import ACCEPTANCE_LINES

N_TRIALS = 100


def report(tag, ok, text):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {tag}: {text}")
    return ok


@pytest.fixture(scope="module")
def fig1():
    cfg = load_bundled("fig1-like")
    start = time.perf_counter()
    res = run(cfg)
    return cfg, res, time.perf_counter() - start


@pytest.fixture(scope="module")
def bundled_runs(fig1):
    out = {"fig1-like": fig1[:2]}
    for name in bundled_scenarios():
        if name not in out:
            cfg = load_bundled(name)
            out[name] = (cfg, run(cfg))
    return out


@pytest.fixture(scope="module")
def trials():
    return [finite_time_trial(seed) for seed in range(N_TRIALS)]


def test_fig1_steady_state_rmse(fig1):
    cfg, res, elapsed = fig1
    s = res.summary
    bh = s["beta"] * cfg.h
    ss = np.array(s["steady_state_rmse"])
    below = bool(np.all(ss <= 1e-4))
    in_band = bool(np.all((ss >= 0.1 * bh) & (ss <= 100 * bh)))
    fast = elapsed <= 60.0
    ok = report("C1 fig1-like steady-state RMSE", below and in_band and fast,
                f"max RMSE {ss.max():.3e} (need <= 1e-4: {below}), "
                f"ratio to beta*h {ss.min() / bh:.2f}..{ss.max() / bh:.2f} "
                f"(need within [0.1, 100]: {in_band}), beta = {s['beta']:.4g}, "
                f"runtime {elapsed:.1f} s")
    assert ok


def test_finite_time_convergence(trials):
    late = [(t.seed, t.first_below, t.run.t_star) for t in trials if not t.passed]
    ok = report("C2 finite-time convergence", not late,
                f"{N_TRIALS - len(late)}/{N_TRIALS} trials below 10*beta*h by t*"
                + (f"; late (seed, crossing, t*): "
                   + ", ".join(f"({s}, {c:.3f}, {b:.3f})" for s, c, b in late) if late else ""))
    assert ok


def test_oracle_equivalence(bundled_runs):
    ratios = {name: r.summary["oracle_ratio_after_t_star"] for name, (_, r) in bundled_runs.items()}
    ok = all(v is not None and v <= 1.0 for v in ratios.values())
    report("C3 distributed estimates match oracle after t*", ok,
           "max |p_i - p*| / (100 beta h kappa): "
           + ", ".join(f"{k} {v:.3g}" for k, v in sorted(ratios.items())))
    assert ok


def test_conservation(bundled_runs, trials):
    scen = max(r.summary["max_conservation_residual"] for _, r in bundled_runs.values())
    tri = max(float(t.run.conservation.max()) for t in trials)
    ok = report("C4 conservation of sum of w", max(scen, tri) <= 1e-10,
                f"max |1^T w|_inf: scenarios {scen:.2e}, trials {tri:.2e} (need <= 1e-10)")
    assert ok


def test_projector_identities():
    rng = np.random.default_rng(2024)
    worst, bbt = 0.0, 0.0
    for _ in range(100):
        g = random_connected_graph(int(rng.integers(2, 9)), rng, p_extra=float(rng.uniform(0, 0.8)))
        _, dev = verify_lemma2(g, tol=1e-9)
        worst = max(worst, dev)
        bbt = max(bbt, float(np.max(np.abs(g.incidence @ g.incidence.T - 2 * g.laplacian))))
    ok = report("C5 projector identities", worst <= 1e-9 and bbt <= 1e-12,
                f"max deviation {worst:.2e} (need <= 1e-9), |BB^T - 2L|_max {bbt:.1e} "
                "(need <= 1e-12) over 100 graphs")
    assert ok


def test_noiseless_least_squares(bundled_runs):
    devs = {}
    for name, (cfg, r) in bundled_runs.items():
        rep = validate_scenario(cfg)
        assert rep.min_sigma >= 0.05
        devs[name] = r.summary["max_truth_deviation"]
    ok = all(v is not None and v <= 1e-9 for v in devs.values())
    report("C6 p* equals truth", ok,
           "max |p* - p_true|: " + ", ".join(f"{k} {v:.1e}" for k, v in sorted(devs.items())))
    assert ok


def test_step_size_scaling(fig1):
    cfg, res, _ = fig1
    half = run(cfg.replace(h=cfg.h / 2))
    a = res.summary["steady_state_rmse_max"]
    b = half.summary["steady_state_rmse_max"]
    ratio = a / b
    ok = report("C7 halving h halves the RMSE floor", ratio >= 2 * 0.75,
                f"RMSE {a:.3e} at h = {cfg.h:g}, {b:.3e} at h = {cfg.h / 2:g}, "
                f"ratio {ratio:.2f} (need >= 1.5)")
    assert ok


def test_bearing_identity():
    rng = np.random.default_rng(7)
    worst = 0.0
    for theta in rng.uniform(-4 * np.pi, 4 * np.pi, 1000):
        m = bearing_from_angle(theta)
        I = np.outer(m.phi, m.phi) + np.outer(m.phi_perp, m.phi_perp)
        worst = max(worst, float(np.max(np.abs(I - np.eye(2)))))
    ok = report("C8 bearing decomposition of identity", worst <= 1e-14,
                f"max deviation {worst:.1e} over 1000 angles (need <= 1e-14)")
    assert ok
