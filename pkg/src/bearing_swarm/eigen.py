"""Symmetric eigensolver (cyclic Jacobi) and eigen-based pseudo-inverse."""
from __future__ import annotations

import numpy as np

JACOBI_TOL = 1e-12
RANK_CUT = 1e-9


def _round_robin(m: int) -> list[list[tuple[int, int]]]:
    """Pairings for a parallel cyclic sweep; each round holds disjoint pairs.

    Every unordered pair of ``range(m)`` appears exactly once per sweep.
    """
    players = list(range(m)) + ([-1] if m % 2 else [])
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = []
        for a in range(k // 2):
            p, q = players[a], players[k - 1 - a]
            if p >= 0 and q >= 0:
                pairs.append((min(p, q), max(p, q)))
        rounds.append(sorted(pairs))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a, tol: float = JACOBI_TOL, max_sweeps: int = 100):
    """Eigen-decompose a real symmetric matrix with cyclic Jacobi rotations.

    Rotations inside one round act on disjoint index pairs, so a round is
    applied as a single orthogonal similarity; the sweep order is fixed,
    which makes the result deterministic.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as columns.
    """
    A = np.array(a, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    m = A.shape[0]
    A = 0.5 * (A + A.T)
    V = np.eye(m)
    if m == 1:
        return A.diagonal().copy(), V

    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    rounds = _round_robin(m)
    off_mask = ~np.eye(m, dtype=bool)

    for _ in range(max_sweeps):
        if np.sqrt(np.sum(A[off_mask] ** 2)) <= tol * scale:
            break
        for pairs in rounds:
            J = np.eye(m)
            rotated = False
            for p, q in pairs:
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                rotated = True
            if rotated:
                A = J.T @ A @ J
                A = 0.5 * (A + A.T)
                V = V @ J
    else:
        raise RuntimeError("Jacobi eigensolver did not converge")

    w = A.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def pinv_sym(a, rank_cut: float = RANK_CUT) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric matrix via its eigendecomposition.

    Eigenvalues with magnitude below ``rank_cut * max|eigenvalue|`` count as zero.
    """
    w, V = jacobi_eigh(a)
    top = np.max(np.abs(w)) if w.size else 0.0
    if top == 0.0:
        return np.zeros_like(V)
    keep = np.abs(w) > rank_cut * top
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return (V * inv) @ V.T
