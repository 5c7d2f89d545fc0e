"""Bearing measurements and the per-node information they induce.

The packed 6-vector is ``[P00, P10, P01, P11, q0, q1]`` (column-major vec of
P followed by q). Pack and unpack are always used as a pair.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANGE_EPSILON = 1e-9
TWO_PI = 2.0 * np.pi


def wrap_angle(theta: float) -> float:
    """Map to [0, 2*pi); tiny negatives would otherwise round up to 2*pi."""
    t = float(theta) % TWO_PI
    return 0.0 if t >= TWO_PI else t


class SingularGeometryError(ValueError):
    """Target coincides with a sensor, so the bearing is undefined."""

    def __init__(self, sensor_index, distance, t=None):
        self.sensor_index = sensor_index
        self.distance = distance
        self.t = t
        where = f" at t={t!r}" if t is not None else ""
        super().__init__(
            f"target within {distance:.3g} of sensor {sensor_index}{where}; bearing undefined"
        )


@dataclass(frozen=True)
class BearingMeasurement:
    theta: float
    phi: np.ndarray
    phi_perp: np.ndarray
    range: float


@dataclass(frozen=True)
class LocalInformation:
    h: np.ndarray
    z: float
    P: np.ndarray
    q: np.ndarray
    phi6: np.ndarray


def bearing(p, s, range_epsilon: float = RANGE_EPSILON, sensor_index=None) -> BearingMeasurement:
    p = np.asarray(p, dtype=float)
    s = np.asarray(s, dtype=float)
    d = p - s
    rho = float(np.hypot(d[0], d[1]))
    if rho <= range_epsilon:
        raise SingularGeometryError(sensor_index, rho)
    phi = d / rho
    # [-sin, cos]: counterclockwise quarter turn of phi
    phi_perp = np.array([-phi[1], phi[0]])
    theta = wrap_angle(np.arctan2(phi[1], phi[0]))
    return BearingMeasurement(theta=theta, phi=phi, phi_perp=phi_perp, range=rho)


def bearing_from_angle(theta: float) -> BearingMeasurement:
    """Measurement with unit range for a given angle; used by identity checks."""
    c, s = np.cos(theta), np.sin(theta)
    return BearingMeasurement(
        theta=wrap_angle(theta),
        phi=np.array([c, s]),
        phi_perp=np.array([-s, c]),
        range=1.0,
    )


def pack_phi(P, q) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.array([P[0, 0], P[1, 0], P[0, 1], P[1, 1], q[0], q[1]])


def unpack_phi(v) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`pack_phi`; P comes back symmetrized."""
    v = np.asarray(v, dtype=float)
    P = np.array([[v[0], v[2]], [v[1], v[3]]])
    P = 0.5 * (P + P.T)
    return P, v[4:6].copy()


def local_information(m: BearingMeasurement, s) -> LocalInformation:
    s = np.asarray(s, dtype=float)
    h = m.phi_perp
    z = float(h @ s)
    P = np.outer(h, h)
    q = z * h
    return LocalInformation(h=h, z=z, P=P, q=q, phi6=pack_phi(P, q))


def stacked_information(p, sensors, range_epsilon: float = RANGE_EPSILON, t=None):
    """Vectorized measurement model for all sensors at one instant.

    Returns ``(H, z, phi)`` with shapes (n, 2), (n,), (n, 6); row i of ``phi``
    equals ``local_information(bearing(p, s_i), s_i).phi6``.
    """
    sensors = np.asarray(sensors, dtype=float)
    d = np.asarray(p, dtype=float) - sensors
    rho = np.hypot(d[:, 0], d[:, 1])
    bad = np.flatnonzero(rho <= range_epsilon)
    if bad.size:
        i = int(bad[0])
        raise SingularGeometryError(i, float(rho[i]), t)
    u = d / rho[:, None]
    H = np.column_stack((-u[:, 1], u[:, 0]))
    z = H[:, 0] * sensors[:, 0] + H[:, 1] * sensors[:, 1]
    return H, z, information_rows(H, z)


def information_rows(H, z) -> np.ndarray:
    H = np.asarray(H)
    z = np.asarray(z)
    h0, h1 = H[..., 0], H[..., 1]
    off = h0 * h1
    return np.stack((h0 * h0, off, off, h1 * h1, z * h0, z * h1), axis=-1)


def stacked_information_batch(P, sensors):
    """:func:`stacked_information` for many target positions ``P`` (k, 2).

    Returns ``(H, z, phi, rho)`` with leading axis k; ``rho`` is (k, n) so the
    caller can locate singular instants itself.
    """
    sensors = np.asarray(sensors, dtype=float)
    d = np.asarray(P, dtype=float)[:, None, :] - sensors[None, :, :]
    rho = np.hypot(d[..., 0], d[..., 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        u = d / rho[..., None]
    H = np.stack((-u[..., 1], u[..., 0]), axis=-1)
    z = H[..., 0] * sensors[:, 0] + H[..., 1] * sensors[:, 1]
    return H, z, information_rows(H, z), rho
