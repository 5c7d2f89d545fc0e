"""Randomized consensus-only trials on smooth synthetic signals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consensus import (ConsensusRun, beta_from_bound, certify_signal_rate, certified_bound,
                        simulate_consensus)
from .graph import Graph, algebraic_connectivity, random_connected_graph


@dataclass(frozen=True)
class SineBank:
    """phi_i,k(t) = offset + amp * sin(omega * t + phase), independently per entry."""
    offset: np.ndarray
    amp: np.ndarray
    omega: np.ndarray
    phase: np.ndarray

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, dim: int = 6) -> "SineBank":
        shape = (n, dim)
        return cls(rng.normal(size=shape), rng.normal(size=shape),
                   rng.uniform(0.5, 2.0, size=shape), rng.uniform(0.0, 2 * np.pi, size=shape))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        arg = self.omega * t[..., None, None] + self.phase
        return self.offset + self.amp * np.sin(arg)


@dataclass
class TrialResult:
    seed: int
    graph: Graph
    gamma: float
    run: ConsensusRun

    @property
    def first_below(self) -> float:
        return self.run.first_below()

    @property
    def passed(self) -> bool:
        return self.first_below <= self.run.t_star


def finite_time_trial(seed: int, h: float = 1e-3, n_range=(3, 8), p_extra: float = 0.3,
                   margin: float = 0.5) -> TrialResult:
    """Random connected graph + random sine bank, gain from the bound with
    n_hat = n and lambda2_hat = lambda2, run until ``margin`` past t*."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    g = random_connected_graph(n, rng, p_extra)
    signal = SineBank.random(n, rng)
    lam2 = algebraic_connectivity(g)
    phi0 = signal(0.0)
    t_star = certified_bound(phi0 - phi0.mean(axis=0), lam2)
    tf = t_star + margin
    gamma = certify_signal_rate(signal, np.arange(0.0, tf + h, h / 10))
    params = beta_from_bound(gamma, n, lam2)
    res = simulate_consensus(g, signal, params, h, 0.0, tf)
    return TrialResult(seed=seed, graph=g, gamma=gamma, run=res)
