"""Community labels from Phase I data by regularized spectral clustering."""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from .graph import Graph

KMEANS_RESTARTS = 20
KMEANS_MAX_ITER = 100


def average_graph(phase1: Sequence[Graph]) -> np.ndarray:
    """Entrywise mean of the Phase I adjacency matrices."""
    if len(phase1) == 0:
        raise ValueError("need at least one graph to average")
    n = phase1[0].n
    if any(g.n != n for g in phase1):
        raise ValueError("all graphs must have the same number of nodes")
    return np.mean([g.adj for g in phase1], axis=0)


def spectral_embedding(avg: np.ndarray, k: int) -> np.ndarray:
    """Row-normalized leading eigenvectors of the regularized graph Laplacian.

    ``L = D_tau^{-1/2} A D_tau^{-1/2}`` with ``D_tau = D + tau I`` and tau the
    mean degree; the k eigenvectors of largest |eigenvalue| are kept.
    """
    avg = np.asarray(avg, dtype=np.float64)
    deg = avg.sum(axis=1)
    d_tau = deg + deg.mean()
    d_tau[d_tau <= 0] = 1.0
    s = 1.0 / np.sqrt(d_tau)
    lap = s[:, None] * avg * s[None, :]
    vals, vecs = linalg.eigh(lap)
    order = np.argsort(-np.abs(vals), kind="stable")[:k]
    x = vecs[:, order]
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def canonical_labels(labels) -> np.ndarray:
    """Relabel so communities are numbered by their smallest member index."""
    labels = np.asarray(labels)
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    mapping = {old: new for new, old in enumerate(order)}
    return np.array([mapping[x] for x in labels], dtype=np.int64)


def regularized_spectral(avg: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Labels 0..k-1 for the nodes of an averaged graph."""
    n = avg.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise ValueError(f"cannot find {k} communities among {n} nodes")
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    x = spectral_embedding(avg, k)
    km = KMeans(
        n_clusters=k,
        n_init=KMEANS_RESTARTS,
        max_iter=KMEANS_MAX_ITER,
        random_state=int(rng.integers(2**31 - 1)),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        labels = km.fit_predict(x)
    return canonical_labels(labels)


def label_accuracy(est, truth) -> float:
    """Best fraction of agreeing nodes over relabelings of ``est``."""
    est = np.asarray(est, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if est.shape != truth.shape:
        raise ValueError("label vectors must have equal length")
    k = int(max(est.max(), truth.max())) + 1
    confusion = np.zeros((k, k))
    np.add.at(confusion, (est, truth), 1)
    rows, cols = linear_sum_assignment(-confusion)
    return float(confusion[rows, cols].sum() / est.size)
