"""Signum-driven dynamic average consensus on stacked 6-dimensional signals."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, algebraic_connectivity

DIM = 6
CHATTER_FACTOR = 10.0


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ConsensusParams:
    beta: float
    gamma_hat: float
    n_hat: float
    lambda2_hat: float
    # set when beta was supplied by hand rather than derived from the bound
    override: bool = False

    @property
    def beta_bound(self) -> float:
        return 1.0 + self.gamma_hat * np.sqrt(self.n_hat) / self.lambda2_hat

    @property
    def meets_bound(self) -> bool:
        return self.beta >= self.beta_bound * (1.0 - 1e-12)


def beta_from_bound(gamma_hat: float, n_hat: float, lambda2_hat: float) -> ConsensusParams:
    """Smallest gain allowed by the rate/size/connectivity bounds."""
    if lambda2_hat <= 0:
        raise ParameterError(f"lambda2_hat must be positive, got {lambda2_hat}")
    if gamma_hat < 0:
        raise ParameterError(f"gamma_hat must be non-negative, got {gamma_hat}")
    if n_hat < 1:
        raise ParameterError(f"n_hat must be >= 1, got {n_hat}")
    beta = 1.0 + gamma_hat * np.sqrt(n_hat) / lambda2_hat
    return ConsensusParams(beta=float(beta), gamma_hat=float(gamma_hat),
                           n_hat=n_hat, lambda2_hat=float(lambda2_hat))


def with_beta(params: ConsensusParams, beta: float) -> ConsensusParams:
    if beta < 0:
        raise ParameterError(f"beta must be non-negative, got {beta}")
    return ConsensusParams(beta=float(beta), gamma_hat=params.gamma_hat, n_hat=params.n_hat,
                           lambda2_hat=params.lambda2_hat, override=True)


@dataclass
class ConsensusState:
    w: np.ndarray
    x: np.ndarray
    t: float = 0.0

    @classmethod
    def initial(cls, phi, t0: float = 0.0, w0=None) -> "ConsensusState":
        phi = np.asarray(phi, dtype=float)
        w = np.zeros_like(phi) if w0 is None else np.array(w0, dtype=float)
        if w.shape != phi.shape:
            raise ValueError(f"w0 shape {w.shape} does not match signals {phi.shape}")
        return cls(w=w, x=w + phi, t=t0)


def refresh_estimates(state: ConsensusState, phi) -> ConsensusState:
    state.x = state.w + np.asarray(phi, dtype=float)
    return state


def consensus_rhs(state: ConsensusState, g: Graph, params: ConsensusParams) -> np.ndarray:
    """Per-node rate: -beta * sum over neighbours of sgn(x_i - x_j), sgn(0) = 0."""
    return edge_rhs(state.x, _edge_arrays(g), params.beta)


def consensus_rhs_compact(x, g: Graph, beta: float) -> np.ndarray:
    """Same rate through the incidence matrix of the doubled directed edge set.

    With every undirected edge present in both directions, B sgn(B^T x) counts
    each neighbour twice, hence the factor one half.
    """
    B = g.incidence
    return -0.5 * beta * (B @ np.sign(B.T @ np.asarray(x, dtype=float)))


def _edge_arrays(g: Graph):
    e = np.asarray(g.edges, dtype=int).reshape(-1, 2)
    return e[:, 0], e[:, 1], _oriented_incidence(g)


def _oriented_incidence(g: Graph) -> np.ndarray:
    # one column per undirected edge (i, j): +1 at i, -1 at j
    D = np.zeros((g.n, len(g.edges)))
    for k, (i, j) in enumerate(g.edges):
        D[i, k] = 1.0
        D[j, k] = -1.0
    return D


def edge_rhs(x, edges, beta: float) -> np.ndarray:
    src, dst, D = edges
    s = np.sign(x[src] - x[dst])
    return -beta * (D @ s)


def consensus_error(x, phi) -> np.ndarray:
    """Deviation of every estimate from the instantaneous signal average."""
    phi = np.asarray(phi, dtype=float)
    return np.asarray(x, dtype=float) - phi.mean(axis=0)


def conservation_residual(w) -> float:
    return float(np.max(np.abs(np.sum(w, axis=0))))


def lyapunov(x_tilde) -> float:
    return 0.5 * float(np.sum(np.square(x_tilde)))


def finite_time_bound(x_tilde_0, lambda2: float, t0: float = 0.0) -> tuple[float, float]:
    """Settling-time bounds ``(t0 + |e0|/sqrt(lambda2), t0 + |e0|/lambda2)``.

    The two forms disagree unless lambda2 == 1; callers
    certify against the larger one.
    """
    if lambda2 <= 0:
        raise ParameterError(f"lambda2 must be positive, got {lambda2}")
    e0 = float(np.linalg.norm(np.asarray(x_tilde_0, dtype=float)))
    return float(t0 + e0 / np.sqrt(lambda2)), float(t0 + e0 / lambda2)


def certified_bound(x_tilde_0, lambda2: float, t0: float = 0.0) -> float:
    return max(finite_time_bound(x_tilde_0, lambda2, t0))


def chatter_floor(beta: float, h: float) -> float:
    return CHATTER_FACTOR * beta * h


def certify_signal_rate(signal, times, inflation: float = 1.25) -> float:
    """Inflated sup-norm of the signal rate, from central differences on ``times``.

    ``signal`` maps a time array (k,) to values (k, n, 6); ``times`` is a
    uniform grid.
    """
    times = np.asarray(times, dtype=float)
    dt = times[1] - times[0]
    vals = np.asarray(signal(times), dtype=float)
    rates = (vals[2:] - vals[:-2]) / (2.0 * dt)
    return inflation * float(np.max(np.abs(rates))) if rates.size else 0.0


@dataclass
class ConsensusRun:
    """Trace of a consensus-only simulation (signals supplied directly)."""
    t: np.ndarray
    error_norm: np.ndarray
    conservation: np.ndarray
    mean_tracking: np.ndarray
    lyapunov: np.ndarray
    params: ConsensusParams
    lambda2: float
    t_star_proof: float
    t_star_eq16: float
    h: float
    x_final: np.ndarray = field(repr=False)

    @property
    def t_star(self) -> float:
        return max(self.t_star_proof, self.t_star_eq16)

    @property
    def floor(self) -> float:
        return chatter_floor(self.params.beta, self.h)

    def first_below(self, level: float | None = None) -> float:
        level = self.floor if level is None else level
        hit = np.flatnonzero(self.error_norm <= level)
        return float(self.t[hit[0]]) if hit.size else np.inf

    def settled_after(self, level: float | None = None) -> float:
        """Earliest time after which the error never exceeds ``level`` again."""
        level = self.floor if level is None else level
        above = np.flatnonzero(self.error_norm > level)
        if not above.size:
            return float(self.t[0])
        if above[-1] == len(self.t) - 1:
            return np.inf
        return float(self.t[above[-1] + 1])


def simulate_consensus(g: Graph, signal, params: ConsensusParams, h: float,
                       t0: float, tf: float, w0=None) -> ConsensusRun:
    """Forward-Euler run of the protocol driven by ``signal``.

    ``signal`` maps a time array (k,) to (k, n, 6). Signals are sampled up
    front since they do not depend on the protocol state.
    """
    steps = int(np.ceil((tf - t0) / h - 1e-9))
    ts = t0 + h * np.arange(steps + 1)
    ts[-1] = tf
    src, dst, D = _edge_arrays(g)
    Db = -params.beta * D
    PHI = np.asarray(signal(ts), dtype=float)
    state = ConsensusState.initial(PHI[0], t0, w0)
    lam2 = algebraic_connectivity(g)
    tp, te = finite_time_bound(consensus_error(state.x, PHI[0]), lam2, t0)

    W = np.empty_like(PHI)
    w = state.w
    dts = np.diff(ts)
    for k in range(steps + 1):
        W[k] = w
        if k < steps:
            x = w + PHI[k]
            w = w + dts[k] * (Db @ np.sign(x[src] - x[dst]))
    X = W + PHI
    phi_bar = PHI.mean(axis=1)
    XT = X - phi_bar[:, None, :]
    err = np.sqrt(np.sum(XT * XT, axis=(1, 2)))
    return ConsensusRun(
        t=ts, error_norm=err,
        conservation=np.max(np.abs(W.sum(axis=1)), axis=1),
        mean_tracking=np.max(np.abs(X.mean(axis=1) - phi_bar), axis=1),
        lyapunov=0.5 * err ** 2, params=params, lambda2=lam2,
        t_star_proof=tp, t_star_eq16=te, h=h, x_final=X[-1])
