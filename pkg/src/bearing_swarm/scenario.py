"""Scenario description, loading, and certification of the run's hypotheses.

Scenario files are JSON objects::

    {
      "name": "fig1-like",
      "graph": {"n": 5, "edges": [[0, 1], [1, 2]]},
      "sensors": [[x0, y0], [x1, y1]],
      "trajectory": {"kind": "waypoint-spline", ...},
      "sim": {"h": 1e-4, "t0": 0.0, "tf": 10.0, "w0": null},
      "bounds": {"n_hat": 5, "lambda2_hat": 0.4, "gamma": null, "beta": null},
      "output": {"decimate": 10, "plots": true}
    }

See README.md for every key and default.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .consensus import beta_from_bound, certified_bound, finite_time_bound, with_beta
from .geometry import information_rows
from .graph import GraphError, algebraic_connectivity, build_graph
from .tracker import sigma_min_batch

MIN_CLEARANCE = 1e-3
SIGMA_MIN_FLOOR = 0.05
GAMMA_INFLATION = 1.25
GAMMA_FLOOR = 1e-6
CERT_SUBDIVISION = 10
_CHUNK = 20000


class ScenarioFormatError(ValueError):
    """Malformed scenario file; the message names the offending field."""


class ClearanceError(ValueError):
    pass


class TimeRangeError(ValueError):
    pass


# -- trajectories --------------------------------------------------------------

class Trajectory:
    kind = ""
    smooth = True

    def __init__(self, t0: float, tf: float):
        self.t0 = float(t0)
        self.tf = float(tf)

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, abs(self.tf))
        if np.any(t < self.t0 - slack) or np.any(t > self.tf + slack):
            raise TimeRangeError(f"t outside [{self.t0}, {self.tf}]")
        return t

    def sample(self, t):
        """Position and velocity at ``t`` (scalar or array)."""
        t = self._check(t)
        return self._sample(t)

    def _sample(self, t):
        raise NotImplementedError


class WaypointSpline(Trajectory):
    """Cubic spline through timed waypoints (C2, hence C1 as required)."""
    kind = "waypoint-spline"

    def __init__(self, times, points, t0, tf, bc_type="natural"):
        super().__init__(t0, tf)
        self.times = np.asarray(times, dtype=float)
        self.points = np.asarray(points, dtype=float)
        if self.times[0] > self.t0 or self.times[-1] < self.tf:
            raise ScenarioFormatError("trajectory.times must cover the [t0, tf] window")
        self._spline = CubicSpline(self.times, self.points, axis=0, bc_type=bc_type)
        self._deriv = self._spline.derivative()

    def _sample(self, t):
        return self._spline(t), self._deriv(t)


class Sinusoid(Trajectory):
    """p(t) = offset + velocity * t + amplitude * sin(omega * t + phase), per axis."""
    kind = "sinusoid"

    def __init__(self, t0, tf, offset=(0, 0), velocity=(0, 0), amplitude=(0, 0),
                 omega=(0, 0), phase=(0, 0)):
        super().__init__(t0, tf)
        self.offset = np.asarray(offset, dtype=float)
        self.velocity = np.asarray(velocity, dtype=float)
        self.amplitude = np.asarray(amplitude, dtype=float)
        self.omega = np.asarray(omega, dtype=float)
        self.phase = np.asarray(phase, dtype=float)

    def _sample(self, t):
        tt = np.expand_dims(t, -1)
        arg = self.omega * tt + self.phase
        p = self.offset + self.velocity * tt + self.amplitude * np.sin(arg)
        v = self.velocity + self.amplitude * self.omega * np.cos(arg) + 0.0 * tt
        return p, v


class PiecewiseConstantVelocity(Trajectory):
    """Straight-line legs; velocity jumps between legs break rate smoothness."""
    kind = "piecewise-constant-velocity"

    def __init__(self, start, segments, t0, tf):
        super().__init__(t0, tf)
        self.start = np.asarray(start, dtype=float)
        self.durations = np.array([float(s["duration"]) for s in segments])
        self.velocities = np.array([s["velocity"] for s in segments], dtype=float).reshape(-1, 2)
        if np.any(self.durations <= 0):
            raise ScenarioFormatError("trajectory.segments: durations must be positive")
        self.breaks = self.t0 + np.concatenate(([0.0], np.cumsum(self.durations)))
        legs = self.durations[:, None] * self.velocities
        self.anchors = self.start + np.vstack((np.zeros(2), np.cumsum(legs, axis=0)))
        self.smooth = bool(np.all(self.velocities == self.velocities[0]))

    def _sample(self, t):
        # past the last break the final leg continues
        k = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, len(self.durations) - 1)
        dt = np.expand_dims(t - self.breaks[k], -1)
        v = self.velocities[k]
        return self.anchors[k] + dt * v, v


def make_trajectory(spec: dict, t0: float, tf: float) -> Trajectory:
    kind = _req(spec, "kind", "trajectory", str)
    try:
        if kind == WaypointSpline.kind:
            return WaypointSpline(_req(spec, "times", "trajectory", list),
                                  _req(spec, "points", "trajectory", list), t0, tf,
                                  bc_type=spec.get("bc_type", "natural"))
        if kind == Sinusoid.kind:
            keys = ("offset", "velocity", "amplitude", "omega", "phase")
            return Sinusoid(t0, tf, **{k: spec[k] for k in keys if k in spec})
        if kind == PiecewiseConstantVelocity.kind:
            return PiecewiseConstantVelocity(_req(spec, "start", "trajectory", list),
                                             _req(spec, "segments", "trajectory", list), t0, tf)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioFormatError):
            raise
        raise ScenarioFormatError(f"trajectory: {exc}") from exc
    raise ScenarioFormatError(f"trajectory.kind: unknown kind {kind!r}")


# -- config --------------------------------------------------------------------

@dataclass
class ScenarioConfig:
    n: int
    edges: list
    sensors: np.ndarray
    trajectory: dict
    h: float = 1e-4
    t0: float = 0.0
    tf: float = 10.0
    n_hat: float = 5
    lambda2_hat: float = 0.4
    gamma: float | None = None
    beta: float | None = None
    w0: list | None = None
    decimate: int = 10
    plots: bool = True
    name: str = "scenario"
    description: str = ""
    min_clearance: float = MIN_CLEARANCE
    sigma_min_floor: float = SIGMA_MIN_FLOOR
    fallback: list | None = None

    def __post_init__(self):
        self.sensors = np.asarray(self.sensors, dtype=float)

    def graph(self, require_connected: bool = True):
        return build_graph(self.n, self.edges, require_connected=require_connected)

    def make_trajectory(self) -> Trajectory:
        return make_trajectory(self.trajectory, self.t0, self.tf)

    def fallback_point(self) -> np.ndarray:
        if self.fallback is not None:
            return np.asarray(self.fallback, dtype=float)
        return self.sensors.mean(axis=0)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        """Fully resolved config in the file layout (every default filled in)."""
        return {
            "name": self.name,
            "description": self.description,
            "graph": {"n": self.n, "edges": [list(map(int, e)) for e in self.edges]},
            "sensors": self.sensors.tolist(),
            "trajectory": self.trajectory,
            "sim": {"h": self.h, "t0": self.t0, "tf": self.tf, "w0": self.w0,
                    "min_clearance": self.min_clearance,
                    "sigma_min_floor": self.sigma_min_floor,
                    "fallback": self.fallback_point().tolist()},
            "bounds": {"n_hat": self.n_hat, "lambda2_hat": self.lambda2_hat,
                       "gamma": self.gamma, "beta": self.beta},
            "output": {"decimate": self.decimate, "plots": self.plots},
        }


def _req(d, key, where, typ=None):
    if not isinstance(d, dict):
        raise ScenarioFormatError(f"{where}: expected an object")
    if key not in d:
        raise ScenarioFormatError(f"{where}.{key}: missing required field")
    val = d[key]
    if typ is not None and not isinstance(val, typ):
        raise ScenarioFormatError(f"{where}.{key}: expected {typ.__name__}, got {type(val).__name__}")
    return val


def _num(d, key, where, default=None, positive=False, allow_none=False):
    if not isinstance(d, dict):
        raise ScenarioFormatError(f"{where}: expected an object")
    val = d.get(key, default)
    if val is None:
        if allow_none:
            return None
        raise ScenarioFormatError(f"{where}.{key}: missing required field")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioFormatError(f"{where}.{key}: expected a number, got {val!r}")
    if positive and not val > 0:
        raise ScenarioFormatError(f"{where}.{key}: must be positive, got {val!r}")
    return val


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioFormatError("top level: expected a JSON object")
    graph = _req(data, "graph", "top level", dict)
    n = _req(graph, "n", "graph", int)
    edges = _req(graph, "edges", "graph", list)
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)):
            raise ScenarioFormatError(f"graph.edges[{k}]: expected a pair of integers, got {e!r}")
    sensors = _req(data, "sensors", "top level", list)
    if len(sensors) != n:
        raise ScenarioFormatError(f"sensors: expected {n} positions, got {len(sensors)}")
    for k, s in enumerate(sensors):
        if not (isinstance(s, list) and len(s) == 2
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in s)):
            raise ScenarioFormatError(f"sensors[{k}]: expected [x, y], got {s!r}")
    traj = _req(data, "trajectory", "top level", dict)
    sim = _req(data, "sim", "top level", dict)
    bounds = _req(data, "bounds", "top level", dict)
    output = data.get("output", {})
    t0 = _num(sim, "t0", "sim", 0.0)
    tf = _num(sim, "tf", "sim")
    if not tf > t0:
        raise ScenarioFormatError(f"sim.tf: must exceed t0 ({tf!r} <= {t0!r})")
    w0 = sim.get("w0")
    if w0 is not None and np.shape(w0) != (n, 6):
        raise ScenarioFormatError(f"sim.w0: expected an {n}x6 array or null")
    decimate = output.get("decimate", 10)
    if isinstance(decimate, bool) or not isinstance(decimate, int) or decimate < 1:
        raise ScenarioFormatError(f"output.decimate: expected a positive integer, got {decimate!r}")
    cfg = ScenarioConfig(
        name=str(data.get("name", "scenario")),
        description=str(data.get("description", "")),
        n=n,
        edges=[list(e) for e in edges],
        sensors=sensors,
        trajectory=traj,
        h=_num(sim, "h", "sim", 1e-4, positive=True),
        t0=float(t0),
        tf=float(tf),
        w0=w0,
        n_hat=_num(bounds, "n_hat", "bounds", positive=True),
        lambda2_hat=_num(bounds, "lambda2_hat", "bounds", positive=True),
        gamma=_num(bounds, "gamma", "bounds", allow_none=True),
        beta=_num(bounds, "beta", "bounds", allow_none=True),
        decimate=decimate,
        plots=bool(output.get("plots", True)),
        min_clearance=_num(sim, "min_clearance", "sim", MIN_CLEARANCE, positive=True),
        sigma_min_floor=_num(sim, "sigma_min_floor", "sim", SIGMA_MIN_FLOOR),
        fallback=sim.get("fallback"),
    )
    cfg.make_trajectory()  # surface trajectory format errors at load time
    return cfg


def load_scenario(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(data)


def bundled_scenarios() -> list[str]:
    root = resources.files("bearing_swarm") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("bearing_swarm") / "scenarios" / f"{name}.json"))


def load_bundled(name: str) -> ScenarioConfig:
    return load_scenario(bundled_path(name))


# -- certification -------------------------------------------------------------

def certification_grid(cfg: ScenarioConfig, resolution: float | None = None) -> np.ndarray:
    dt = cfg.h / CERT_SUBDIVISION if resolution is None else resolution
    k = int(np.ceil((cfg.tf - cfg.t0) / dt - 1e-9))
    grid = cfg.t0 + dt * np.arange(k + 1)
    grid[-1] = min(grid[-1], cfg.tf)
    return grid


def _sweep(cfg: ScenarioConfig, grid: np.ndarray):
    """Min clearance, min sigma_min(H) and max |dphi/dt|_inf over ``grid``.

    Rates are central differences with spacing equal to the grid step,
    evaluated by sampling the trajectory one grid step either side.
    """
    traj = cfg.make_trajectory()
    sensors = cfg.sensors
    dt = grid[1] - grid[0] if len(grid) > 1 else cfg.h / CERT_SUBDIVISION
    clearance = np.inf
    smin = np.inf
    rate = 0.0
    for start in range(0, len(grid), _CHUNK):
        t = grid[start:start + _CHUNK]
        p, _ = traj.sample(t)
        d = p[:, None, :] - sensors[None, :, :]
        rho = np.hypot(d[..., 0], d[..., 1])
        clearance = min(clearance, float(rho.min()))
        if rho.min() <= cfg.min_clearance:
            continue
        u = d / rho[..., None]
        H = np.stack((-u[..., 1], u[..., 0]), axis=-1)
        smin = min(smin, float(sigma_min_batch(H).min()))
        lo = np.maximum(t - dt, cfg.t0)
        hi = np.minimum(t + dt, cfg.tf)
        phi_lo = _phi_rows(traj.sample(lo)[0], sensors)
        phi_hi = _phi_rows(traj.sample(hi)[0], sensors)
        if phi_lo is None or phi_hi is None:
            continue
        r = np.abs(phi_hi - phi_lo) / (hi - lo)[:, None, None]
        rate = max(rate, float(r.max()))
    return clearance, smin, rate


def _phi_rows(p, sensors):
    d = p[:, None, :] - sensors[None, :, :]
    rho = np.hypot(d[..., 0], d[..., 1])
    if rho.min() <= 0:
        return None
    u = d / rho[..., None]
    H = np.stack((-u[..., 1], u[..., 0]), axis=-1)
    z = np.einsum("kij,ij->ki", H, sensors)
    return information_rows(H, z)


def raw_signal_rate(cfg: ScenarioConfig, resolution: float | None = None) -> float:
    """Uninflated max over time and nodes of |dphi_i/dt|_inf."""
    clearance, _, rate = _sweep(cfg, certification_grid(cfg, resolution))
    if clearance <= cfg.min_clearance:
        raise ClearanceError(f"trajectory passes within {clearance:.3g} of a sensor")
    return rate


def certify_gamma(cfg: ScenarioConfig, resolution: float | None = None) -> float:
    """Certified rate bound: 1.25 x the finite-difference sup on a dense grid."""
    return GAMMA_INFLATION * max(raw_signal_rate(cfg, resolution), GAMMA_FLOOR)


@dataclass
class Check:
    name: str
    ok: bool
    detail: str


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    n: int = 0
    n_hat: float = 0
    connected: bool = False
    lambda2: float = float("nan")
    lambda2_hat: float = float("nan")
    min_sigma: float = float("nan")
    min_clearance: float = float("nan")
    gamma_certified: float | None = None
    gamma: float | None = None
    beta: float | None = None
    beta_bound: float | None = None
    x_tilde0_norm: float | None = None
    t_star_proof: float | None = None
    t_star_eq16: float | None = None
    t_star: float | None = None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self, ignore=()) -> list:
        return [c for c in self.checks if not c.ok and c.name not in ignore]

    def add(self, name, ok, detail):
        self.checks.append(Check(name, bool(ok), detail))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ok"] = self.ok
        return d

    def format(self) -> str:
        lines = [f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.detail}" for c in self.checks]
        fmt = lambda v: "n/a" if v is None else f"{v:.6g}"
        lines.append(f"gamma (certified) = {fmt(self.gamma_certified)}")
        lines.append(f"gamma (used)      = {fmt(self.gamma)}")
        lines.append(f"beta              = {fmt(self.beta)}  (bound {fmt(self.beta_bound)})")
        lines.append(f"t* = {fmt(self.t_star)}  (proof form {fmt(self.t_star_proof)}, "
                     f"closed form {fmt(self.t_star_eq16)})")
        lines.append("scenario valid" if self.ok else "scenario INVALID")
        return "\n".join(lines)


BETA_CHECK = "beta >= bound"


def validate_scenario(cfg: ScenarioConfig, resolution: float | None = None) -> ValidationReport:
    rep = ValidationReport(n=cfg.n, n_hat=cfg.n_hat, lambda2_hat=cfg.lambda2_hat)
    try:
        g = cfg.graph(require_connected=False)
    except GraphError as exc:
        rep.add("graph", False, str(exc))
        return rep
    rep.connected = g.connected
    rep.lambda2 = algebraic_connectivity(g)
    rep.add("Assumption 3", g.connected,
            "graph connected" if g.connected else "graph not connected")
    rep.add("n_hat >= n", cfg.n_hat >= cfg.n,
            f"n_hat = {cfg.n_hat}, n = {cfg.n}" + ("" if cfg.n_hat >= cfg.n else " (n_hat < n)"))
    lam_ok = 0 < cfg.lambda2_hat <= rep.lambda2 * (1 + 1e-12)
    rep.add("lambda2_hat <= lambda2", lam_ok,
            f"lambda2_hat = {cfg.lambda2_hat:.6g}, lambda2 = {rep.lambda2:.6g}")

    traj = cfg.make_trajectory()
    rep.add("Assumption 2 (smooth trajectory)", traj.smooth,
            "C1 trajectory" if traj.smooth else "velocity jumps: signal rates are discontinuous")

    grid = certification_grid(cfg, resolution)
    clearance, smin, rate = _sweep(cfg, grid)
    rep.min_clearance = clearance
    rep.min_sigma = smin
    clear_ok = clearance > cfg.min_clearance
    rep.add("clearance", clear_ok,
            f"closest approach {clearance:.6g} (need > {cfg.min_clearance:g})")
    obs_ok = clear_ok and smin >= cfg.sigma_min_floor
    rep.add("Assumption 1", obs_ok,
            f"min sigma_min(H) = {smin:.6g} (need >= {cfg.sigma_min_floor:g})")
    if not clear_ok:
        return rep

    rep.gamma_certified = GAMMA_INFLATION * max(rate, GAMMA_FLOOR)
    rep.gamma = rep.gamma_certified if cfg.gamma is None else float(cfg.gamma)
    if cfg.gamma is not None:
        rep.add("gamma override >= certified", cfg.gamma >= rep.gamma_certified,
                f"override {cfg.gamma:.6g} vs certified {rep.gamma_certified:.6g}")
    params = beta_from_bound(rep.gamma, cfg.n_hat, cfg.lambda2_hat)
    rep.beta_bound = params.beta
    rep.beta = params.beta if cfg.beta is None else float(cfg.beta)
    if cfg.beta is not None:
        rep.add(BETA_CHECK, rep.beta >= params.beta,
                f"beta override {rep.beta:.6g} vs bound {params.beta:.6g}")

    if g.connected and rep.lambda2 > 0:
        p0, _ = traj.sample(cfg.t0)
        phi0 = _phi_rows(p0[None, :], cfg.sensors)[0]
        w0 = np.zeros_like(phi0) if cfg.w0 is None else np.asarray(cfg.w0, dtype=float)
        x_tilde0 = w0 + phi0 - phi0.mean(axis=0)
        rep.x_tilde0_norm = float(np.linalg.norm(x_tilde0))
        rep.t_star_proof, rep.t_star_eq16 = finite_time_bound(x_tilde0, rep.lambda2, cfg.t0)
        rep.t_star = certified_bound(x_tilde0, rep.lambda2, cfg.t0)
    return rep


def consensus_params(cfg: ScenarioConfig, report: ValidationReport):
    params = beta_from_bound(report.gamma, cfg.n_hat, cfg.lambda2_hat)
    if cfg.beta is not None:
        params = with_beta(params, cfg.beta)
    return params
