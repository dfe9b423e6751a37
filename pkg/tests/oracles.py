"""Slow, obviously-correct reference computations used only by the tests.

Nothing here imports the package's graph code: distances come from a
plain queue BFS, betweenness from enumerating every shortest path.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import mpmath
import numpy as np


def neighbors(adj) -> list[list[int]]:
    n = len(adj)
    return [[j for j in range(n) if j != i and adj[i][j] > 0] for i in range(n)]


def bfs_distances(adj) -> list[list[int | None]]:
    nb = neighbors(adj)
    n = len(adj)
    out = []
    for s in range(n):
        dist: list[int | None] = [None] * n
        dist[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for w in nb[u]:
                if dist[w] is None:
                    dist[w] = dist[u] + 1
                    q.append(w)
        out.append(dist)
    return out


def shortest_paths(adj, s: int, t: int) -> list[list[int]]:
    """Every shortest s-t path, by depth-first extension along distance layers."""
    dist = bfs_distances(adj)
    if dist[s][t] is None:
        return []
    nb = neighbors(adj)
    paths = []

    def extend(path):
        u = path[-1]
        if u == t:
            paths.append(list(path))
            return
        for w in nb[u]:
            if dist[s][w] == dist[s][u] + 1 and dist[w][t] == dist[u][t] - 1:
                path.append(w)
                extend(path)
                path.pop()

    extend([s])
    return paths


def betweenness(adj) -> list[float]:
    n = len(adj)
    bc = [0.0] * n
    for s, t in itertools.combinations(range(n), 2):
        paths = shortest_paths(adj, s, t)
        for p in paths:
            for v in p[1:-1]:
                bc[v] += 1.0 / len(paths)
    return bc


def closeness(adj) -> list[float]:
    out = []
    for row in bfs_distances(adj):
        reach = [d for d in row if d not in (None, 0)]
        out.append(len(reach) / sum(reach) if reach else 0.0)
    return out


def triangles_at(adj, v: int) -> int:
    nb = neighbors(adj)
    return sum(1 for a, b in itertools.combinations(nb[v], 2) if adj[a][b] > 0)


def degrees(adj) -> list[int]:
    return [len(x) for x in neighbors(adj)]


def local_clustering(adj) -> list[float]:
    d = degrees(adj)
    return [2 * triangles_at(adj, v) / (d[v] * (d[v] - 1)) if d[v] >= 2 else 0.0 for v in range(len(adj))]


def global_clustering(adj) -> float:
    d = degrees(adj)
    triples = sum(x * (x - 1) / 2 for x in d)
    closed = sum(triangles_at(adj, v) for v in range(len(adj)))  # 3 x triangles
    return closed / triples if triples else 0.0


def pearson(xs, ys) -> float:
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx <= 1e-12 or syy <= 1e-12:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


def assortativity(adj) -> float:
    d = degrees(adj)
    xs, ys = [], []
    for i, j in itertools.combinations(range(len(adj)), 2):
        if adj[i][j] > 0:
            xs += [d[i], d[j]]
            ys += [d[j], d[i]]
    return pearson(xs, ys) if xs else 0.0


def principal_eigenvector(adj) -> tuple[np.ndarray, float]:
    """Dense symmetric eigensolver; also returns the gap to the next eigenvalue."""
    b = (np.asarray(adj) > 0).astype(float)
    vals, vecs = np.linalg.eigh(b)
    v = vecs[:, -1]
    if v.sum() < 0:
        v = -v
    gap = vals[-1] - vals[-2] if len(vals) > 1 else math.inf
    return v, gap


def induced_edges(adj, nodes) -> int:
    return sum(1 for a, b in itertools.combinations(sorted(nodes), 2) if adj[a][b] > 0)


def all_statistics(adj) -> dict[str, float]:
    n = len(adj)
    dist = bfs_distances(adj)
    finite = [dist[i][j] for i in range(n) for j in range(i + 1, n) if dist[i][j] is not None]
    ecc = [max((d for d in row if d is not None), default=0) for row in dist]
    bc = betweenness(adj)
    clo = closeness(adj)
    return {
        "avg_degree": sum(degrees(adj)) / n,
        "avg_betweenness": sum(bc) / n,
        "max_betweenness": max(bc),
        "avg_closeness": sum(clo) / n,
        "max_closeness": max(clo),
        "global_clustering": global_clustering(adj),
        "avg_local_clustering": sum(local_clustering(adj)) / n,
        "diameter": float(max(finite, default=0)),
        "avg_shortest_path": sum(finite) / len(finite) if finite else 0.0,
        "avg_eccentricity": sum(ecc) / n,
        "assortativity": assortativity(adj),
    }


def random_adjacency(rng: np.random.Generator, n: int, p: float, max_count: int = 1) -> np.ndarray:
    a = np.triu(rng.integers(1, max_count + 1, size=(n, n)) * (rng.random((n, n)) < p), 1)
    return a + a.T


def f_quantile(p, d1, d2, digits=30):
    """Independent F quantile: bisection on the regularized incomplete beta CDF."""
    mpmath.mp.dps = digits
    a, b = mpmath.mpf(d1) / 2, mpmath.mpf(d2) / 2

    def cdf(x):
        return mpmath.betainc(a, b, 0, d1 * x / (d1 * x + d2), regularized=True)

    lo, hi = mpmath.mpf(0), mpmath.mpf(1)
    while cdf(hi) < p:
        hi *= 2
    for _ in range(120):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if cdf(mid) < p else (lo, mid)
    return float((lo + hi) / 2)
