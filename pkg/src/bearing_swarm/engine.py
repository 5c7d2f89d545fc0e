"""Closed-loop simulation: target -> bearings -> consensus -> local solves."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .consensus import _edge_arrays, chatter_floor
from .geometry import RANGE_EPSILON, SingularGeometryError, stacked_information_batch
from .scenario import BETA_CHECK, ScenarioConfig, consensus_params, validate_scenario
from .tracker import local_solutions_series, sym2_eigvals

ORACLE_FACTOR = 100.0
SWEEP_PARAMS = ("beta", "h", "lambda2_hat")


class ValidationFailed(RuntimeError):
    def __init__(self, report):
        self.report = report
        names = ", ".join(c.name for c in report.failures())
        super().__init__(f"scenario failed validation: {names}")


@dataclass(frozen=True)
class RunRecord:
    t: float
    p_hat: np.ndarray
    valid: np.ndarray
    p_star: np.ndarray
    p_true: np.ndarray
    rmse: np.ndarray
    msce: np.ndarray
    x_tilde_norm: float
    conservation: float


@dataclass
class RunResult:
    """Recorded (decimated) rows plus a summary computed over every step."""
    t: np.ndarray
    p_hat: np.ndarray        # (k, n, 2)
    valid: np.ndarray        # (k, n)
    p_star: np.ndarray       # (k, 2)
    p_true: np.ndarray       # (k, 2)
    rmse: np.ndarray         # (k, n)
    msce: np.ndarray         # (k, n)
    x_tilde_norm: np.ndarray
    conservation: np.ndarray
    kappa: np.ndarray        # condition number of the averaged P
    summary: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def records(self):
        for k in range(len(self.t)):
            yield RunRecord(float(self.t[k]), self.p_hat[k], self.valid[k], self.p_star[k],
                            self.p_true[k], self.rmse[k], self.msce[k],
                            float(self.x_tilde_norm[k]), float(self.conservation[k]))


def rmse(p_star, p_hat):
    """sqrt(0.5 * |p* - p_i|^2) per node."""
    d = np.asarray(p_star) - np.asarray(p_hat)
    return np.sqrt(0.5 * np.sum(d * d, axis=-1))


def msce(phi_bar, x):
    """sqrt(|phi_bar - x_i|^2 / 6) per node."""
    d = np.asarray(phi_bar) - np.asarray(x)
    return np.sqrt(np.sum(d * d, axis=-1) / 6.0)


def time_grid(t0: float, tf: float, h: float) -> np.ndarray:
    steps = int(math.ceil((tf - t0) / h - 1e-9))
    t = t0 + h * np.arange(steps + 1)
    t[-1] = tf
    return t


CHUNK = 20000


def run(cfg: ScenarioConfig, force: bool = False, decimate: int | None = None,
        report=None) -> RunResult:
    """Forward-Euler run of the distributed tracker with w(t0) = 0.

    Target motion does not depend on the protocol state, so measurements are
    built a chunk at a time; only the consensus update runs step by step.
    """
    report = validate_scenario(cfg) if report is None else report
    if not report.ok and not force:
        raise ValidationFailed(report)
    if report.gamma is None:
        raise ValidationFailed(report)
    g = cfg.graph()
    params = consensus_params(cfg, report)
    beta = params.beta
    traj = cfg.make_trajectory()
    n = cfg.n
    decimate = cfg.decimate if decimate is None else decimate
    edges = _edge_arrays(g)
    src, dst, D = edges
    Db = -beta * D

    times = time_grid(cfg.t0, cfg.tf, cfg.h)
    steps = len(times) - 1
    dts = np.diff(times)
    rec_idx = np.arange(0, steps + 1, decimate)
    if rec_idx[-1] != steps:
        rec_idx = np.append(rec_idx, steps)

    floor = chatter_floor(beta, cfg.h)
    acc = _Accumulator(cfg, report, beta, rec_idx)
    w = np.zeros((n, 6)) if cfg.w0 is None else np.array(cfg.w0, dtype=float)
    last = np.tile(cfg.fallback_point(), (n, 1))
    status, error = "completed", None

    for lo in range(0, steps + 1, CHUNK):
        hi = min(lo + CHUNK, steps + 1)
        t = times[lo:hi]
        P_true, _ = traj.sample(t)
        H, z, PHI, rho = stacked_information_batch(P_true, cfg.sensors)
        bad = np.flatnonzero(np.min(rho, axis=1) <= RANGE_EPSILON)
        if bad.size:
            k_bad = int(bad[0])
            i_bad = int(np.argmin(rho[k_bad]))
            exc = SingularGeometryError(i_bad, float(rho[k_bad, i_bad]), float(t[k_bad]))
            status, error = "aborted", str(exc)
            hi = lo + k_bad
            t, P_true, PHI = t[:k_bad], P_true[:k_bad], PHI[:k_bad]
        W = np.empty_like(PHI)
        for k in range(hi - lo):
            W[k] = w
            if lo + k < steps:
                x = w + PHI[k]
                w = w + dts[lo + k] * (Db @ np.sign(x[src] - x[dst]))
        acc.add(lo, t, P_true, PHI, W, last)
        if status != "completed":
            break

    out = acc.result()
    out.summary = acc.summarize(params, floor)
    out.summary.update(status=status, error=error, steps=steps, decimate=decimate,
                       forced=bool(force and not report.ok))
    return out


class _Accumulator:
    """Per-step metrics over chunks; keeps every step for the summary and
    the decimated rows for output."""

    def __init__(self, cfg, report, beta, rec_idx):
        self.cfg = cfg
        self.report = report
        self.rec_idx = rec_idx
        self.oracle_scale = ORACLE_FACTOR * beta * cfg.h
        self.parts = {k: [] for k in ("t", "rmse", "msce", "err", "ratio", "truth")}
        self.rows = {k: [] for k in ("t", "p_hat", "valid", "p_star", "p_true", "rmse",
                                     "msce", "x_tilde_norm", "conservation", "kappa")}
        self.max_cons = 0.0
        self.max_mean_dev = 0.0

    def add(self, lo, t, P_true, PHI, W, last):
        if not len(t):
            return
        n = self.cfg.n
        X = W + PHI
        phi_bar = PHI.mean(axis=1)
        a, b = phi_bar[:, 0], phi_bar[:, 3]
        c = 0.5 * (phi_bar[:, 1] + phi_bar[:, 2])
        det = a * b - c * c
        p_star = np.stack((b * phi_bar[:, 4] - c * phi_bar[:, 5],
                           a * phi_bar[:, 5] - c * phi_bar[:, 4]), axis=-1) / det[:, None]
        ev_lo, ev_hi = sym2_eigvals(a, b, c)
        with np.errstate(divide="ignore"):
            kappa = np.where(ev_lo > 0, ev_hi / ev_lo, np.inf)

        p_hat, valid = local_solutions_series(X, last)

        r = rmse(p_star[:, None, :], p_hat)
        mc = msce(phi_bar[:, None, :], X)
        xt = X - phi_bar[:, None, :]
        err = np.sqrt(np.sum(xt * xt, axis=(1, 2)))
        cons = np.max(np.abs(W.sum(axis=1)), axis=1)
        self.max_cons = max(self.max_cons, float(cons.max()))
        mean_dev = np.max(np.abs(X.mean(axis=1) - phi_bar), axis=1)
        self.max_mean_dev = max(self.max_mean_dev, float(mean_dev.max()))
        dev = np.max(np.hypot(*np.moveaxis(p_hat - p_star[:, None, :], -1, 0)), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = dev / (self.oracle_scale * kappa)
        # sigma_min(H)^2 = n * smallest eigenvalue of the averaged P
        observable = np.sqrt(np.maximum(n * ev_lo, 0.0)) >= self.cfg.sigma_min_floor
        truth = np.where(observable, np.max(np.abs(p_star - P_true), axis=1), np.nan)

        for key, val in (("t", t), ("rmse", r), ("msce", mc), ("err", err),
                         ("ratio", ratio), ("truth", truth)):
            self.parts[key].append(val)

        sel = self.rec_idx[(self.rec_idx >= lo) & (self.rec_idx < lo + len(t))] - lo
        for key, val in (("t", t), ("p_hat", p_hat), ("valid", valid), ("p_star", p_star),
                         ("p_true", P_true), ("rmse", r), ("msce", mc), ("x_tilde_norm", err),
                         ("conservation", cons), ("kappa", kappa)):
            self.rows[key].append(val[sel])

    def result(self) -> RunResult:
        n = self.cfg.n
        empty = {"t": (0,), "p_hat": (0, n, 2), "valid": (0, n), "p_star": (0, 2),
                 "p_true": (0, 2), "rmse": (0, n), "msce": (0, n), "x_tilde_norm": (0,),
                 "conservation": (0,), "kappa": (0,)}
        cols = {k: (np.concatenate(v) if v else np.zeros(empty[k])) for k, v in self.rows.items()}
        return RunResult(**cols)

    def summarize(self, params, floor):
        cat = {k: (np.concatenate(v) if v else np.zeros((0,) if k != "rmse" and k != "msce"
                                                         else (0, self.cfg.n)))
               for k, v in self.parts.items()}
        return _summarize(self.cfg, self.report, params, cat["t"], cat["rmse"], cat["msce"],
                          cat["err"], cat["ratio"], cat["truth"], self.max_cons,
                          self.max_mean_dev, floor)


def settle_time(t, values, level) -> float:
    """Earliest time after which ``values`` never exceed ``level``."""
    above = np.flatnonzero(~(values <= level))
    if not above.size:
        return float(t[0]) if len(t) else math.inf
    if above[-1] == len(t) - 1:
        return math.inf
    return float(t[above[-1] + 1])


def _first_below(t, values, level):
    hit = np.flatnonzero(values <= level)
    return float(t[hit[0]]) if hit.size else math.inf


def _summarize(cfg, report, params, t, all_rmse, all_msce, all_err, oracle_ratio,
               truth_dev, max_cons, max_mean_dev, floor):
    t_star = report.t_star if report.t_star is not None else math.inf
    n = cfg.n
    if not len(t):
        return {"beta": params.beta}
    # steady state: second half of the window, and never before t*
    ss_start = max(t_star, cfg.t0 + 0.5 * (cfg.tf - cfg.t0))
    ss = t >= ss_start
    after = t >= t_star
    ss_rmse = np.sqrt(np.mean(all_rmse[ss] ** 2, axis=0)) if ss.any() else np.full(n, np.nan)
    ss_msce = np.sqrt(np.mean(all_msce[ss] ** 2, axis=0)) if ss.any() else np.full(n, np.nan)
    rmse_floor = floor
    finite_truth = truth_dev[np.isfinite(truth_dev)]
    return {
        "beta": params.beta,
        "beta_bound": params.beta_bound,
        "beta_override": params.override,
        "gamma": report.gamma,
        "gamma_certified": report.gamma_certified,
        "lambda2": report.lambda2,
        "h": cfg.h,
        "chatter_floor": floor,
        "t_star": report.t_star,
        "t_star_proof": report.t_star_proof,
        "t_star_eq16": report.t_star_eq16,
        "x_tilde0_norm": report.x_tilde0_norm,
        "consensus_first_below_floor": _first_below(t, all_err, floor),
        "consensus_settle_time": settle_time(t, all_err, floor),
        "converged": bool(np.isfinite(settle_time(t, all_err, floor))),
        "rmse_reporting_floor": rmse_floor,
        "rmse_first_below_floor": [_first_below(t, all_rmse[:, i], rmse_floor) for i in range(n)],
        "steady_state_start": ss_start,
        "steady_state_rmse": ss_rmse.tolist(),
        "steady_state_rmse_max": float(np.max(ss_rmse)),
        "steady_state_msce": ss_msce.tolist(),
        "max_conservation_residual": max_cons,
        "max_mean_tracking_error": max_mean_dev,
        "oracle_ratio_after_t_star": float(np.max(oracle_ratio[after])) if after.any() else None,
        "max_truth_deviation": float(np.max(finite_truth)) if finite_truth.size else None,
        "final_x_tilde_norm": float(all_err[-1]),
    }


# -- sweeps ------------------------------------------------------------------

def _instantiate(cfg: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")
    return cfg.replace(**{param: float(value)})


def _sweep_row(args):
    cfg, param, value, force = args
    c = _instantiate(cfg, param, value)
    report = validate_scenario(c)
    bad = report.failures(ignore=(BETA_CHECK,) if param == "beta" else ())
    if bad and not force:
        return {"param": param, "value": value, "status": "invalid",
                "error": "; ".join(f"{x.name}: {x.detail}" for x in bad)}
    res = run(c, force=True, decimate=max(1, int(round((c.tf - c.t0) / c.h))), report=report)
    s = res.summary
    return {
        "param": param, "value": value, "status": s["status"], "error": s["error"],
        "beta": s["beta"], "h": c.h, "t_star": s["t_star"],
        "convergence_time": s["consensus_settle_time"], "converged": s["converged"],
        "steady_state_rmse": s["steady_state_rmse_max"],
        "steady_state_msce": max(s["steady_state_msce"]),
        "max_conservation_residual": s["max_conservation_residual"],
    }


def sweep(cfg: ScenarioConfig, param: str, values, force: bool = False,
          workers: int = 1) -> list[dict]:
    """One independent run per value; rows come back in the order of ``values``.

    For ``param == "beta"`` a below-bound gain does not block the run, since
    that is the point of sweeping it.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")
    jobs = [(cfg, param, float(v), force) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_row, jobs))
    return [_sweep_row(j) for j in jobs]
