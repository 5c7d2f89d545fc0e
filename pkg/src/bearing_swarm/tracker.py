"""Per-node position recovery and the centralized least-squares oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import stacked_information, unpack_phi

DET_TOL = 1e-12
SIGMA_MIN_TOL = 1e-8
ORACLE_AGREEMENT_TOL = 1e-10


class ObservabilityError(ValueError):
    """H(t) has rank < 2: bearings do not pin down the target."""


@dataclass(frozen=True)
class TrackEstimate:
    node: int
    p_hat: np.ndarray
    condition: float
    valid: bool


@dataclass(frozen=True)
class StackedObservation:
    H: np.ndarray
    z: np.ndarray

    @classmethod
    def from_geometry(cls, sensors, p) -> "StackedObservation":
        H, z, _ = stacked_information(p, sensors)
        return cls(H=H, z=z)


def sym2_eigvals(a, b, c):
    """Eigenvalues (lo, hi) of [[a, c], [c, b]]; works elementwise on arrays."""
    mean = 0.5 * (a + b)
    rad = np.hypot(0.5 * (a - b), c)
    return mean - rad, mean + rad


def condition_number(P) -> float:
    lo, hi = sym2_eigvals(P[0, 0], P[1, 1], 0.5 * (P[0, 1] + P[1, 0]))
    big, small = max(abs(lo), abs(hi)), min(abs(lo), abs(hi))
    return float(big / small) if small > 0 else np.inf


def solve_averaged(P_bar, q_bar) -> np.ndarray:
    a, b, c = P_bar[0, 0], P_bar[1, 1], P_bar[0, 1]
    det = a * b - c * c
    return np.array([b * q_bar[0] - c * q_bar[1], a * q_bar[1] - c * q_bar[0]]) / det


def sigma_min(H) -> float:
    H = np.asarray(H, dtype=float)
    return float(np.linalg.svd(H, compute_uv=False)[-1])


def centralized_solution(obs: StackedObservation, sigma_min_tol: float = SIGMA_MIN_TOL,
                         check_tol: float = ORACLE_AGREEMENT_TOL) -> np.ndarray:
    """Least-squares minimizer of 0.5 * |z - H p|^2.

    Solved from the averaged normal equations and cross-checked against a
    least-squares solve on H itself.
    """
    H, z = np.asarray(obs.H, dtype=float), np.asarray(obs.z, dtype=float)
    s = sigma_min(H)
    if s < sigma_min_tol:
        raise ObservabilityError(f"rank(H) < 2 (sigma_min = {s:.3g})")
    n = H.shape[0]
    P_bar = H.T @ H / n
    q_bar = H.T @ z / n
    p = solve_averaged(P_bar, q_bar)
    p_ls = np.linalg.lstsq(H, z, rcond=None)[0]
    scale = max(1.0, float(np.max(np.abs(p)))) * condition_number(P_bar)
    if np.max(np.abs(p - p_ls)) > check_tol * scale:
        raise ArithmeticError(f"oracle routes disagree: {p} vs {p_ls}")
    return p


def local_solution(x_i, node: int = 0, last_valid=None, fallback=None,
                   det_tol: float = DET_TOL) -> TrackEstimate:
    """Solve P_x p = q_x from a node's consensus estimate.

    A numerically singular P_x gives ``valid=False`` and carries the last
    valid estimate (or ``fallback``, or NaN) instead of raising.
    """
    P, q = unpack_phi(x_i)
    a, b, c = P[0, 0], P[1, 1], P[0, 1]
    det = a * b - c * c
    scale = max(abs(a), abs(b), abs(c)) ** 2
    valid = bool(scale > 0 and abs(det) > det_tol * scale)
    if valid:
        p_hat = np.array([b * q[0] - c * q[1], a * q[1] - c * q[0]]) / det
    elif last_valid is not None:
        p_hat = np.array(last_valid, dtype=float)
    elif fallback is not None:
        p_hat = np.array(fallback, dtype=float)
    else:
        p_hat = np.full(2, np.nan)
    return TrackEstimate(node=node, p_hat=p_hat, condition=condition_number(P), valid=valid)


def local_solutions(X, last, det_tol: float = DET_TOL):
    """Vectorized :func:`local_solution` over all rows of ``X`` (n, 6).

    ``last`` (n, 2) holds the hold-over estimates and is updated in place
    for rows that solve validly. Returns ``(p_hat, valid)``.
    """
    a = X[:, 0]
    b = X[:, 3]
    c = 0.5 * (X[:, 1] + X[:, 2])
    q0, q1 = X[:, 4], X[:, 5]
    det = a * b - c * c
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(c)) ** 2
    valid = (scale > 0) & (np.abs(det) > det_tol * scale)
    if valid.any():
        d = det[valid]
        last[valid, 0] = (b[valid] * q0[valid] - c[valid] * q1[valid]) / d
        last[valid, 1] = (a[valid] * q1[valid] - c[valid] * q0[valid]) / d
    return last.copy(), valid


def observability_check(sensors, p) -> float:
    """Smallest singular value of H built from the true geometry."""
    sensors = np.asarray(sensors, dtype=float)
    if sensors.shape[0] < 2:
        raise ValueError("need at least two sensors")
    H, _, _ = stacked_information(p, sensors)
    return sigma_min(H)


def sigma_min_batch(H) -> np.ndarray:
    """sigma_min of many (n, 2) matrices stacked along axis 0, via H^T H."""
    a = np.einsum("kij,kij->k", H[..., :1], H[..., :1])
    b = np.einsum("kij,kij->k", H[..., 1:], H[..., 1:])
    c = np.einsum("ki,ki->k", H[..., 0], H[..., 1])
    lo, _ = sym2_eigvals(a, b, c)
    return np.sqrt(np.maximum(lo, 0.0))


def local_solutions_series(X, last, det_tol: float = DET_TOL):
    """:func:`local_solutions` over a time series ``X`` (k, n, 6).

    Equivalent to calling it step by step with the same ``last`` buffer,
    which is updated in place to the final hold-over estimates.
    """
    k, n = X.shape[:2]
    a = X[..., 0]
    b = X[..., 3]
    c = 0.5 * (X[..., 1] + X[..., 2])
    q0, q1 = X[..., 4], X[..., 5]
    det = a * b - c * c
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(c)) ** 2
    valid = (scale > 0) & (np.abs(det) > det_tol * scale)
    sol = np.empty((k + 1, n, 2))
    sol[0] = last
    with np.errstate(divide="ignore", invalid="ignore"):
        sol[1:, :, 0] = (b * q0 - c * q1) / det
        sol[1:, :, 1] = (a * q1 - c * q0) / det
    # forward-fill: each step takes the most recent valid row (row 0 = carried-in)
    idx = np.where(np.vstack((np.ones((1, n), dtype=bool), valid)),
                   np.arange(k + 1)[:, None], 0)
    idx = np.maximum.accumulate(idx, axis=0)
    p_hat = sol[idx, np.arange(n)[None, :]][1:]
    last[:] = p_hat[-1]
    return p_hat, valid
