"""Graph snapshots and the network-level statistics fed to the monitors.

Every statistic is computed on the binarized simple graph: an edge exists
between ``i`` and ``j`` whenever ``A[i, j] > 0``.  Shortest paths, path
counts and betweenness are obtained from a breadth-first search run from
all sources at once, expressed as dense matrix products, which is far
faster than a per-node queue for the small graphs (n <= a few hundred)
used in the simulations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

UNREACHABLE = -1

EIGEN_TOL = 1e-10
EIGEN_MAX_ITER = 10_000


class StatKind(str, Enum):
    """The twelve global summaries, in monitor-id order (1..12)."""

    AVG_DEGREE = "avg_degree"
    AVG_EIGENVECTOR = "avg_eigenvector"
    AVG_BETWEENNESS = "avg_betweenness"
    MAX_BETWEENNESS = "max_betweenness"
    AVG_CLOSENESS = "avg_closeness"
    MAX_CLOSENESS = "max_closeness"
    GLOBAL_CLUSTERING = "global_clustering"
    AVG_LOCAL_CLUSTERING = "avg_local_clustering"
    DIAMETER = "diameter"
    AVG_SHORTEST_PATH = "avg_shortest_path"
    AVG_ECCENTRICITY = "avg_eccentricity"
    ASSORTATIVITY = "assortativity"


STAT_KINDS: tuple[StatKind, ...] = tuple(StatKind)


class Graph:
    """An undirected multigraph snapshot stored as a symmetric count matrix.

    The adjacency matrix is copied and frozen on construction, so derived
    quantities (binarized matrix, distances, statistics) are cached safely.
    """

    def __init__(self, adj, *, validate: bool = True) -> None:
        a = np.array(adj, dtype=np.int64, copy=True)
        if validate:
            if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
                raise ValueError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
            if (a < 0).any():
                raise ValueError("edge counts must be non-negative")
            if not np.array_equal(a, a.T):
                raise ValueError("adjacency must be symmetric")
            if np.diagonal(a).any():
                raise ValueError("self-loops are not allowed")
        a.flags.writeable = False
        self.adj = a
        self.n = a.shape[0]

    @classmethod
    def from_upper(cls, n: int, upper: np.ndarray) -> Graph:
        """Build from the strict upper triangle in ``np.triu_indices(n, 1)`` order."""
        a = np.zeros((n, n), dtype=np.int64)
        iu = np.triu_indices(n, 1)
        a[iu] = upper
        a.T[iu] = upper
        return cls(a, validate=False)

    @classmethod
    def empty(cls, n: int) -> Graph:
        return cls(np.zeros((n, n), dtype=np.int64), validate=False)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and np.array_equal(self.adj, other.adj)

    def __hash__(self) -> int:
        return hash((self.n, self.adj.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={int(np.count_nonzero(np.triu(self.adj)))})"

    @cached_property
    def binary(self) -> np.ndarray:
        b = (self.adj > 0).astype(np.float64)
        b.flags.writeable = False
        return b

    @cached_property
    def degrees(self) -> np.ndarray:
        """Degrees on the binarized graph."""
        return self.binary.sum(axis=1)

    @cached_property
    def _triangles(self) -> np.ndarray:
        """Twice the number of triangles through each node."""
        b = self.binary
        return ((b @ b) * b).sum(axis=1)

    @cached_property
    def _bfs(self) -> _BfsResult:
        return _all_sources_bfs(self.binary)

    @cached_property
    def distances(self) -> np.ndarray:
        return self._bfs.dist

    @cached_property
    def summary(self) -> SummaryVector:
        return summary_vector(self)

    @cached_property
    def scan_counts(self) -> np.ndarray:
        """Array of shape (3, n) holding the k = 0, 1, 2 neighborhood edge counts."""
        return _scan_counts_all(self.binary, self.distances, self._triangles)


def binarize(g: Graph) -> Graph:
    return Graph((g.adj > 0).astype(np.int64), validate=False)


# ---------------------------------------------------------------------------
# breadth-first search from every source
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _BfsResult:
    dist: np.ndarray  # int, UNREACHABLE where no path
    sigma: np.ndarray  # number of shortest s->v paths (float)
    levels: list[np.ndarray]  # levels[l][s, v] is True iff d(s, v) == l


def _all_sources_bfs(b: np.ndarray) -> _BfsResult:
    n = b.shape[0]
    dist = np.full((n, n), UNREACHABLE, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    sigma = np.eye(n)
    frontier = np.eye(n, dtype=bool)
    visited = frontier.copy()
    levels = [frontier]
    level = 0
    while True:
        counts = np.where(frontier, sigma, 0.0) @ b
        new = (counts > 0) & ~visited
        if not new.any():
            break
        level += 1
        dist[new] = level
        sigma[new] = counts[new]
        visited |= new
        frontier = new
        levels.append(new)
    dist.flags.writeable = False
    return _BfsResult(dist, sigma, levels)


def geodesic_distances(g: Graph) -> np.ndarray:
    """Unweighted shortest-path lengths; ``UNREACHABLE`` for disconnected pairs."""
    return g.distances


def _betweenness(g: Graph) -> np.ndarray:
    # Brandes dependency accumulation, vectorized over sources.
    bfs = g._bfs
    b = g.binary
    sigma = bfs.sigma
    inv_sigma = np.divide(1.0, sigma, out=np.zeros_like(sigma), where=sigma > 0)
    delta = np.zeros_like(sigma)
    for lvl in range(len(bfs.levels) - 1, 0, -1):
        coeff = bfs.levels[lvl] * ((1.0 + delta) * inv_sigma)
        delta += bfs.levels[lvl - 1] * (sigma * (coeff @ b))
    bc = delta.sum(axis=0) - np.diagonal(delta)
    # each unordered pair was counted from both endpoints
    return bc / 2.0


def betweenness(g: Graph) -> np.ndarray:
    """Unnormalized node betweenness over unordered pairs."""
    return _betweenness(g)


def closeness(g: Graph) -> np.ndarray:
    """Reachable-node count divided by total distance to them; 0 when isolated."""
    dist = g.distances
    reach = (dist > 0).sum(axis=1)
    total = np.where(dist > 0, dist, 0).sum(axis=1)
    out = np.zeros(g.n)
    np.divide(reach, total, out=out, where=total > 0)
    return out


def eccentricity(g: Graph) -> np.ndarray:
    """Largest finite geodesic distance from each node (0 when isolated)."""
    return g.distances.max(axis=1).astype(np.float64)


def eigenvector_centrality(g: Graph) -> np.ndarray:
    """Unit-norm principal eigenvector of the binarized adjacency matrix.

    Power iteration on ``A + I``: same eigenvectors as ``A`` but the leading
    eigenvalue is strictly dominant in magnitude, so bipartite graphs do
    not oscillate.
    """
    b = g.binary
    n = g.n
    if not b.any():
        return np.zeros(n)
    x = np.full(n, 1.0 / np.sqrt(n))
    tol2 = EIGEN_TOL * EIGEN_TOL
    for _ in range(EIGEN_MAX_ITER):
        y = b @ x
        y += x
        y /= np.sqrt(y @ y)
        diff = y - x
        x = y
        if diff @ diff < tol2:
            break
    if x.sum() < 0:
        x = -x
    return x


def local_clustering(g: Graph) -> np.ndarray:
    """Per-node clustering coefficient; nodes of degree < 2 get 0."""
    closed = g._triangles
    d = g.degrees
    wedges = d * (d - 1)
    out = np.zeros(g.n)
    np.divide(closed, wedges, out=out, where=wedges > 0)
    return out


def global_clustering(g: Graph) -> float:
    d = g.degrees
    wedges = float((d * (d - 1)).sum())
    if wedges == 0:
        return 0.0
    closed = float(g._triangles.sum())
    return closed / wedges


def assortativity(g: Graph) -> float:
    """Pearson correlation of endpoint degrees over edges; 0 when undefined."""
    i, j = np.nonzero(np.triu(g.binary))
    if i.size == 0:
        return 0.0
    d = g.degrees
    x = np.concatenate([d[i], d[j]])
    y = np.concatenate([d[j], d[i]])
    x = x - x.mean()
    y = y - y.mean()
    denom = np.sqrt((x * x).sum() * (y * y).sum())
    if denom <= 1e-12:
        return 0.0
    return float(np.clip((x * y).sum() / denom, -1.0, 1.0))


def _reachable_mean(dist: np.ndarray) -> float:
    finite = dist[dist > 0]
    return float(finite.mean()) if finite.size else 0.0


_SINGLE = {
    StatKind.AVG_DEGREE: lambda g: float(g.degrees.mean()),
    StatKind.AVG_EIGENVECTOR: lambda g: float(eigenvector_centrality(g).mean()),
    StatKind.AVG_BETWEENNESS: lambda g: float(_betweenness(g).mean()),
    StatKind.MAX_BETWEENNESS: lambda g: float(_betweenness(g).max()),
    StatKind.AVG_CLOSENESS: lambda g: float(closeness(g).mean()),
    StatKind.MAX_CLOSENESS: lambda g: float(closeness(g).max()),
    StatKind.GLOBAL_CLUSTERING: global_clustering,
    StatKind.AVG_LOCAL_CLUSTERING: lambda g: float(local_clustering(g).mean()),
    StatKind.DIAMETER: lambda g: float(g.distances.max()),
    StatKind.AVG_SHORTEST_PATH: lambda g: _reachable_mean(g.distances),
    StatKind.AVG_ECCENTRICITY: lambda g: float(eccentricity(g).mean()),
    StatKind.ASSORTATIVITY: assortativity,
}


def summary_statistic(g: Graph, kind: StatKind | str) -> float:
    return _SINGLE[StatKind(kind)](g)


@dataclass(frozen=True)
class SummaryVector:
    avg_degree: float
    avg_eigenvector: float
    avg_betweenness: float
    max_betweenness: float
    avg_closeness: float
    max_closeness: float
    global_clustering: float
    avg_local_clustering: float
    diameter: float
    avg_shortest_path: float
    avg_eccentricity: float
    assortativity: float

    def __getitem__(self, kind: StatKind | str) -> float:
        return getattr(self, StatKind(kind).value)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k.value) for k in STAT_KINDS])


def summary_vector(g: Graph) -> SummaryVector:
    """All twelve statistics, sharing one all-sources search."""
    bc = _betweenness(g)
    clo = closeness(g)
    dist = g.distances
    return SummaryVector(
        avg_degree=float(g.degrees.mean()),
        avg_eigenvector=float(eigenvector_centrality(g).mean()),
        avg_betweenness=float(bc.mean()),
        max_betweenness=float(bc.max()),
        avg_closeness=float(clo.mean()),
        max_closeness=float(clo.max()),
        global_clustering=global_clustering(g),
        avg_local_clustering=float(local_clustering(g).mean()),
        diameter=float(dist.max()),
        avg_shortest_path=_reachable_mean(dist),
        avg_eccentricity=float(dist.max(axis=1).mean()),
        assortativity=assortativity(g),
    )


# ---------------------------------------------------------------------------
# scan neighborhoods
# ---------------------------------------------------------------------------

def _scan_counts_all(b: np.ndarray, dist: np.ndarray, triangles2: np.ndarray) -> np.ndarray:
    out = np.empty((3, b.shape[0]))
    out[0] = b.sum(axis=1)
    # closed neighborhood: the edges at v plus the edges among its neighbors
    out[1] = out[0] + 0.5 * triangles2
    ball = ((dist >= 0) & (dist <= 2)).astype(np.float64)
    # edges inside the ball: half the sum of b over ball x ball
    out[2] = 0.5 * ((ball @ b) * ball).sum(axis=1)
    return out


def scan_neighborhood_count(g: Graph, v: int, k: int, dist: np.ndarray | None = None) -> int:
    """Edge count of the subgraph induced by nodes within distance ``k`` of ``v``."""
    if k not in (0, 1, 2):
        raise ValueError(f"k must be 0, 1 or 2, got {k}")
    b = g.binary
    if k == 0:
        return int(b[v].sum())
    if dist is None:
        dist = g.distances
    ball = np.flatnonzero((dist[v] >= 0) & (dist[v] <= k))
    return int(b[np.ix_(ball, ball)].sum() // 2)
