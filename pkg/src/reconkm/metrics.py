"""Distance matrix builders: Euclidean, hop-count, spectral embedding,
weighted Jaccard over mention counts, latent SVD space, and mean rescaling."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass

import numpy as np

from .instance import InstanceError
from .linalg import eigh, truncated_svd


class UnreachableError(InstanceError):
    def __init__(self, source: int, target: int):
        super().__init__(f"node {target} is unreachable from node {source}")
        self.pair = (source, target)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 0..n_nodes-1.

    Self-loops are dropped and parallel edges merged on construction.
    """

    n_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __init__(self, n_nodes: int, edges):
        clean = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise InstanceError(f"edge ({u}, {v}) out of range for {n_nodes} nodes")
            if u != v:
                clean.add((min(u, v), max(u, v)))
        object.__setattr__(self, "n_nodes", int(n_nodes))
        object.__setattr__(self, "edges", tuple(sorted(clean)))

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_nodes, self.n_nodes))
        for u, v in self.edges:
            A[u, v] = A[v, u] = 1.0
        return A


@dataclass(frozen=True)
class MentionCounts:
    """Sparse (facility, client) -> count map over fixed index ranges."""

    n_facilities: int
    n_clients: int
    counts: dict

    def __post_init__(self):
        for (f, c), n in self.counts.items():
            if not (0 <= f < self.n_facilities and 0 <= c < self.n_clients):
                raise InstanceError(f"mention ({f}, {c}) out of range")
            if n < 0:
                raise InstanceError(f"negative mention count at ({f}, {c})")

    def dense(self) -> np.ndarray:
        """Facilities x clients count matrix."""
        A = np.zeros((self.n_facilities, self.n_clients))
        for (f, c), n in self.counts.items():
            A[f, c] = n
        return A


def load_mentions(path) -> tuple[MentionCounts, list[str], list[str]]:
    """Read ``client_id,facility_id,count`` CSV; returns counts and the
    facility and client ids in first-seen order."""
    facilities: dict[str, int] = {}
    clients: dict[str, int] = {}
    counts: dict[tuple[int, int], int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["client_id", "facility_id", "count"]:
            raise InstanceError(f"{path}: header must be client_id,facility_id,count")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 3:
                raise InstanceError(f"{path}:{lineno}: expected 3 fields")
            try:
                n = int(row[2])
            except ValueError:
                raise InstanceError(f"{path}:{lineno}: count must be an integer") from None
            f = facilities.setdefault(row[1].strip(), len(facilities))
            c = clients.setdefault(row[0].strip(), len(clients))
            counts[(f, c)] = counts.get((f, c), 0) + n
    mc = MentionCounts(len(facilities), len(clients), counts)
    return mc, list(facilities), list(clients)


def euclidean_distances(points_a, points_b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(points_a, dtype=float))
    b = np.atleast_2d(np.asarray(points_b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise InstanceError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    # explicit differences keep identical points at exactly zero
    D = np.empty((a.shape[0], b.shape[0]))
    for i in range(a.shape[0]):
        D[i] = np.sqrt(np.sum((b - a[i]) ** 2, axis=1))
    return D


def bfs_hops(adj: list[list[int]], source: int) -> np.ndarray:
    dist = np.full(len(adj), -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def shortest_path_distances(g: Graph, sources, targets, unreachable: str = "error") -> np.ndarray:
    """Hop counts from each source to each target.

    With ``unreachable="substitute"`` disconnected pairs get twice the largest
    finite distance in the result.
    """
    if unreachable not in ("error", "substitute"):
        raise ValueError(f"unknown unreachable policy {unreachable!r}")
    sources, targets = list(sources), list(targets)
    for node in sources + targets:
        if not 0 <= node < g.n_nodes:
            raise InstanceError(f"node {node} out of range")
    adj = g.neighbors()
    cache: dict[int, np.ndarray] = {}
    D = np.empty((len(sources), len(targets)))
    tidx = np.array(targets, dtype=int)
    for i, s in enumerate(sources):
        if s not in cache:
            cache[s] = bfs_hops(adj, s)
        D[i] = cache[s][tidx]
    missing = D < 0
    if missing.any():
        if unreachable == "error":
            i, j = np.argwhere(missing)[0]
            raise UnreachableError(sources[i], targets[j])
        finite = D[~missing]
        D[missing] = 2.0 * (finite.max() if finite.size else 0.0)
    return D


def spectral_embedding(g: Graph, gamma: int) -> np.ndarray:
    """Laplacian-eigenmap coordinates, one row per node.

    Columns are eigenvectors of I - D^-1/2 A D^-1/2 for the ``gamma``
    smallest nonzero eigenvalues; each column's largest-magnitude entry
    (first one on ties) is made positive.
    """
    n = g.n_nodes
    if not 1 <= gamma < n:
        raise ValueError(f"gamma={gamma} must be in [1, {n - 1}]")
    A = g.adjacency()
    deg = A.sum(axis=1)
    if np.any(deg == 0):
        raise InstanceError(f"isolated node {int(np.argmin(deg))}")
    if np.any(bfs_hops(g.neighbors(), 0) < 0):
        raise InstanceError("graph is disconnected")
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = np.eye(n) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    dec = eigh(L)
    order = np.argsort(dec.eigenvalues, kind="stable")
    vecs = dec.eigenvectors[:, order[1 : gamma + 1]].copy()
    for j in range(gamma):
        col = np.abs(vecs[:, j])
        lead = int(np.flatnonzero(col >= col.max() - 1e-12)[0])
        if vecs[lead, j] < 0:
            vecs[:, j] *= -1
    return vecs


def rescale_to_mean(D, target_mean: float) -> np.ndarray:
    """Scale ``D`` so the mean of all its entries (diagonal included) is ``target_mean``."""
    D = np.asarray(D, dtype=float)
    if target_mean <= 0:
        raise ValueError("target mean must be positive")
    mean = float(D.mean())
    if mean == 0.0:
        raise ValueError("cannot rescale an all-zero matrix")
    return D * (target_mean / mean)


def _log0(A: np.ndarray) -> np.ndarray:
    out = np.zeros_like(A, dtype=float)
    pos = A > 0
    out[pos] = np.log(A[pos])
    return out


def weighted_jaccard_distances(mc: MentionCounts) -> np.ndarray:
    """Log-weighted Jaccard distance between facilities.

    d(f, g) = 1 - sum_{c in S_f & S_g} log n_cf / W, with
    W = sum_{c in S_f | S_g} (log n_cf if c in S_f else log n_cg), log 0 = 0.
    The result is not symmetric; pairs with W = 0 get distance 1.
    """
    N = mc.dense()
    L = _log0(N)
    present = (N > 0).astype(float)
    shared = L @ present.T  # [f, g] = sum over c in S_g of log n_cf
    W = L.sum(axis=1)[:, None] + (1.0 - present) @ L.T
    with np.errstate(invalid="ignore", divide="ignore"):
        D = np.where(W > 0, 1.0 - shared / np.where(W > 0, W, 1.0), 1.0)
    D = np.clip(D, 0.0, 1.0)
    np.fill_diagonal(D, 0.0)
    return D


def mention_client_distances(mc: MentionCounts) -> np.ndarray:
    """Clients x facilities matrix of 1 / (n_cf + 1)."""
    return 1.0 / (mc.dense().T + 1.0)


def latent_distances(mc: MentionCounts, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean distances between rank-``r`` SVD representations.

    Facility i is row i of U, client j is row j of V (no Sigma scaling).
    Returns (facility x facility, client x facility).
    """
    svd = truncated_svd(mc.dense(), r)
    dff = euclidean_distances(svd.U, svd.U)
    np.fill_diagonal(dff, 0.0)
    return dff, euclidean_distances(svd.V, svd.U)
