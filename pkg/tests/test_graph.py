from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from netsurv.graph import (
    STAT_KINDS,
    UNREACHABLE,
    Graph,
    StatKind,
    betweenness,
    binarize,
    eigenvector_centrality,
    geodesic_distances,
    scan_neighborhood_count,
    summary_statistic,
    summary_vector,
)

K3 = Graph([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
PATH3 = Graph([[0, 1, 0], [1, 0, 1], [0, 1, 0]])


def star(leaves: int) -> Graph:
    a = np.zeros((leaves + 1, leaves + 1), dtype=int)
    a[0, 1:] = a[1:, 0] = 1
    return Graph(a)


@st.composite
def graphs(draw, max_n: int = 8, max_count: int = 3):
    n = draw(st.integers(1, max_n))
    cells = draw(st.lists(st.integers(0, max_count), min_size=n * n, max_size=n * n))
    a = np.triu(np.array(cells).reshape(n, n), 1)
    return Graph(a + a.T)


class TestGraphType:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            Graph([[0, 1], [0, 0]])

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loops"):
            Graph([[1, 0], [0, 0]])

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="non-negative"):
            Graph([[0, -1], [-1, 0]])

    def test_adjacency_is_frozen(self):
        with pytest.raises(ValueError):
            K3.adj[0, 1] = 5


class TestBinarize:
    def test_thresholds_counts(self):
        g = Graph([[0, 3, 0], [3, 0, 1], [0, 1, 0]])
        assert binarize(g).adj[0, 1] == 1
        assert binarize(g).adj[1, 2] == 1

    def test_zero_matrix(self):
        assert binarize(Graph.empty(4)) == Graph.empty(4)

    @given(graphs())
    def test_idempotent(self, g):
        once = binarize(g)
        assert binarize(once) == once
        assert np.array_equal(once.adj, once.adj.T)
        assert not np.diagonal(once.adj).any()


class TestDistances:
    def test_triangle(self):
        d = geodesic_distances(K3)
        assert (d[~np.eye(3, dtype=bool)] == 1).all()

    def test_path(self):
        assert geodesic_distances(PATH3)[0, 2] == 2

    def test_disconnected(self):
        assert geodesic_distances(Graph.empty(2))[0, 1] == UNREACHABLE

    @given(graphs())
    def test_matches_queue_bfs(self, g):
        ref = oracles.bfs_distances(g.adj.tolist())
        expected = np.array([[UNREACHABLE if x is None else x for x in row] for row in ref])
        d = geodesic_distances(g)
        assert np.array_equal(d, expected)
        assert np.array_equal(d, d.T)
        assert (np.diagonal(d) == 0).all()


class TestSummaryStatistics:
    def test_k3_degree(self):
        assert summary_statistic(K3, "avg_degree") == 2.0

    def test_path_betweenness(self):
        # only the middle node sits on a geodesic (the a-c pair)
        assert summary_statistic(PATH3, StatKind.AVG_BETWEENNESS) == pytest.approx(1 / 3)
        assert betweenness(PATH3).tolist() == [0.0, 1.0, 0.0]

    def test_path_clustering(self):
        assert summary_statistic(PATH3, "global_clustering") == 0.0

    def test_star_assortativity(self):
        # each edge joins degree 4 to degree 1, so endpoint degrees are perfectly anti-correlated
        assert oracles.assortativity(star(4).adj.tolist()) == pytest.approx(-1.0)
        assert summary_statistic(star(4), "assortativity") == pytest.approx(-1.0)

    def test_k3_diameter(self):
        assert summary_statistic(K3, "diameter") == 1

    def test_k3_vector(self):
        v = summary_vector(K3)
        assert v.avg_degree == 2
        assert v.global_clustering == 1
        assert v.diameter == 1
        assert v.avg_shortest_path == 1
        assert v.avg_closeness == 1
        assert v.assortativity == 0

    def test_empty_graph_distance_stats_are_zero(self):
        v = summary_vector(Graph.empty(5))
        for kind in STAT_KINDS:
            assert v[kind] == 0.0

    def test_counts_are_ignored(self):
        heavy = Graph([[0, 5, 2], [5, 0, 7], [2, 7, 0]])
        assert summary_vector(heavy) == summary_vector(K3)

    def test_eigenvector_on_bipartite_graph_converges(self):
        x = eigenvector_centrality(star(4))
        ref, _ = oracles.principal_eigenvector(star(4).adj)
        np.testing.assert_allclose(x, ref, atol=1e-8)

    def test_brute_force_oracle_on_200_random_graphs(self):
        rng = np.random.default_rng(20240611)
        for trial in range(200):
            n = int(rng.integers(1, 9))
            adj = oracles.random_adjacency(rng, n, float(rng.uniform(0.1, 0.9)), max_count=3)
            g = Graph(adj)
            ref = oracles.all_statistics(adj.tolist())
            v = summary_vector(g)
            for name, expected in ref.items():
                assert v[name] == pytest.approx(expected, abs=1e-9), (trial, name, adj)
                assert summary_statistic(g, name) == pytest.approx(expected, abs=1e-9)

            vec, gap = oracles.principal_eigenvector(adj)
            if gap > 1e-3 and adj.any():
                assert v.avg_eigenvector == pytest.approx(vec.mean(), abs=1e-8), (trial, adj)

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_vector_agrees_with_single_kind(self, g):
        v = summary_vector(g)
        for kind in STAT_KINDS:
            assert v[kind] == pytest.approx(summary_statistic(g, kind), abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(graphs(), st.randoms(use_true_random=False))
    def test_invariant_under_relabeling(self, g, rnd):
        perm = list(range(g.n))
        rnd.shuffle(perm)
        h = Graph(g.adj[np.ix_(perm, perm)])
        a, b = summary_vector(g), summary_vector(h)
        for kind in STAT_KINDS:
            if kind is StatKind.AVG_EIGENVECTOR:
                continue  # not unique when the leading eigenvalue is degenerate
            assert a[kind] == pytest.approx(b[kind], abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_betweenness_total_counts_interior_vertices(self, g):
        # summed over nodes, betweenness equals the (path-averaged) number of
        # interior vertices, i.e. d(s, t) - 1, over reachable unordered pairs
        d = g.distances
        iu = np.triu_indices(g.n, 1)
        pair = d[iu]
        expected = float((pair[pair > 0] - 1).sum())
        assert betweenness(g).sum() == pytest.approx(expected, abs=1e-9)

    @given(graphs())
    def test_ranges(self, g):
        v = summary_vector(g)
        assert 0 <= v.global_clustering <= 1
        assert 0 <= v.avg_local_clustering <= 1
        assert -1 <= v.assortativity <= 1
        if g.binary.any():
            assert v.diameter >= 1


class TestScanNeighborhood:
    def test_degree_is_order_zero(self):
        assert scan_neighborhood_count(K3, 0, 0, K3.distances) == 2

    def test_triangle_order_one(self):
        assert all(scan_neighborhood_count(K3, v, 1, K3.distances) == 3 for v in range(3))

    def test_star_center(self):
        g = star(5)
        assert scan_neighborhood_count(g, 0, 1, g.distances) == 5

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            scan_neighborhood_count(K3, 0, 3)

    @given(graphs())
    def test_vectorized_counts_match_enumeration(self, g):
        adj = g.adj.tolist()
        dist = oracles.bfs_distances(adj)
        for v in range(g.n):
            for k in (1, 2):
                ball = [u for u in range(g.n) if dist[v][u] is not None and dist[v][u] <= k]
                expected = oracles.induced_edges(adj, ball)
                assert scan_neighborhood_count(g, v, k) == expected
                assert g.scan_counts[k, v] == expected
            assert g.scan_counts[0, v] == oracles.degrees(adj)[v]

    @given(graphs())
    def test_monotone_in_order(self, g):
        c = g.scan_counts
        assert (c[0] <= c[1]).all() and (c[1] <= c[2]).all()
