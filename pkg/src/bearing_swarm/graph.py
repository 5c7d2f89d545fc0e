"""Undirected sensor-network graphs and the matrices derived from them."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .eigen import jacobi_eigh, pinv_sym

SPECTRAL_CONNECTED_TOL = 1e-9


class GraphError(ValueError):
    pass


class DuplicateEdgeError(GraphError):
    def __init__(self, pair):
        self.pair = tuple(pair)
        super().__init__(f"duplicate edge {self.pair}")


class SelfLoopError(GraphError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"self-loop at node {node}")


class NotConnectedError(GraphError):
    """The graph is not connected, so no convergence guarantee applies."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    incidence: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    connected: bool

    @property
    def lambda2(self) -> float:
        return algebraic_connectivity(self)

    @property
    def n_directed(self) -> int:
        return self.incidence.shape[1]

    def neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adjacency[i])]

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def _is_connected(n: int, edges) -> bool:
    nbrs = [[] for _ in range(n)]
    for i, j in edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == n


def incidence_matrix(n: int, edges) -> np.ndarray:
    """Incidence matrix with each undirected edge split into two directed ones.

    A directed edge u->v has -1 in row u and +1 in row v. Columns are ordered
    by destination node, then by source node.
    """
    directed = sorted(
        [(i, j) for i, j in edges] + [(j, i) for i, j in edges],
        key=lambda e: (e[1], e[0]),
    )
    B = np.zeros((n, len(directed)))
    for col, (u, v) in enumerate(directed):
        B[u, col] = -1.0
        B[v, col] = 1.0
    return B


def build_graph(n: int, edges, require_connected: bool = True) -> Graph:
    """Build a :class:`Graph` from a node count and undirected edge list.

    Raises :class:`NotConnectedError` for a disconnected graph unless
    ``require_connected`` is false (used when a validator wants to report
    the failure instead of raising).
    """
    if int(n) != n or n < 2:
        raise GraphError(f"need an integer node count >= 2, got {n!r}")
    n = int(n)
    seen = set()
    clean = []
    for pair in edges:
        if len(pair) != 2:
            raise GraphError(f"edge must be a pair, got {pair!r}")
        i, j = int(pair[0]), int(pair[1])
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge {(i, j)} references a node outside 0..{n - 1}")
        if i == j:
            raise SelfLoopError(i)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdgeError((i, j))
        seen.add(key)
        clean.append((i, j))

    connected = _is_connected(n, clean)
    if require_connected and not connected:
        raise NotConnectedError(f"graph on {n} nodes with edges {clean} is not connected")

    A = np.zeros((n, n))
    for i, j in clean:
        A[i, j] = A[j, i] = 1.0
    D = np.diag(A.sum(axis=1))
    L = D - A
    B = incidence_matrix(n, clean)
    w, V = jacobi_eigh(L)
    return Graph(
        n=n,
        edges=tuple(clean),
        adjacency=_frozen(A),
        degree=_frozen(D),
        laplacian=_frozen(L),
        incidence=_frozen(B),
        eigenvalues=_frozen(w),
        eigenvectors=_frozen(V),
        connected=connected,
    )


def algebraic_connectivity(g: Graph) -> float:
    """Second-smallest Laplacian eigenvalue (0 for a disconnected graph)."""
    return max(float(g.eigenvalues[1]), 0.0)


def spectrally_connected(g: Graph) -> bool:
    # diagnostic only; build_graph's traversal decides connectivity
    return algebraic_connectivity(g) > SPECTRAL_CONNECTED_TOL


def projector_M(g: Graph) -> np.ndarray:
    """Projector onto zero-mean vectors, I - 11^T/n."""
    n = g.n
    return np.eye(n) - np.full((n, n), 1.0 / n)


def projector_forms(g: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three pseudo-inverse expressions that should all equal the projector."""
    L = g.laplacian
    B = g.incidence
    BBt = B @ B.T
    return (
        L @ pinv_sym(L),
        BBt @ pinv_sym(BBt),
        B @ pinv_sym(B.T @ B) @ B.T,
    )


def verify_lemma2(g: Graph, tol: float = 1e-10) -> tuple[bool, float]:
    """Check the pseudo-inverse identities against ``projector_M``.

    Returns ``(all_within_tol, worst_entrywise_deviation)``.
    """
    M = projector_M(g)
    dev = max(float(np.max(np.abs(F - M))) for F in projector_forms(g))
    return dev <= tol, dev


def incidence_pinv_inf_norm(g: Graph) -> float:
    """Infinity norm of (B B^T)^+, which the convergence argument bounds by sqrt(n)/(2 lambda2)."""
    P = pinv_sym(g.incidence @ g.incidence.T)
    return float(np.max(np.sum(np.abs(P), axis=1)))


# -- generators ---------------------------------------------------------------

def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(n: int) -> Graph:
    return build_graph(n, [(0, j) for j in range(1, n)])


def random_connected_graph(n: int, rng: np.random.Generator, p_extra: float = 0.3) -> Graph:
    """Random spanning tree plus each remaining pair with probability ``p_extra``."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        parent = order[rng.integers(0, k)]
        a, b = int(order[k]), int(parent)
        edges.add((min(a, b), max(a, b)))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < p_extra:
                edges.add((i, j))
    return build_graph(n, sorted(edges))
