"""Control charts and the fifteen network monitors built on them.

Monitor ids follow the usual numbering of the comparison study:

    1-12  EWMA chart on one global summary statistic (see ``graph.StatKind``)
    13    moving-window scan statistics (Priebe)
    14    Shewhart charts on the estimated block propensities (Wilson)
    15    compositional T^2 chart on estimated degree parameters (Yu)

Every monitor has the same lifecycle: ``fit`` on the Phase I graphs, then
``update`` once per Phase II graph, returning True when the chart signals.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, special

from .graph import STAT_KINDS, Graph, StatKind

EWMA_LAMBDA = 0.5
SIGMA_FLOOR = 1e-12
THETA_FLOOR = 1e-6
SCAN_WINDOW = 20
SCAN_THRESHOLD = 5.0
T2_QUANTILE = 0.9

MONITOR_NAMES = {
    1: "avg.degree",
    2: "avg.eigenvector",
    3: "avg.betweenness",
    4: "max.betweenness",
    5: "avg.closeness",
    6: "max.closeness",
    7: "global.cluster.coeff",
    8: "avg.local.cluster.coeff",
    9: "diameter",
    10: "avg.shortest.path",
    11: "max.shortest.path",
    12: "assortativity",
    13: "Priebe",
    14: "Wilson",
    15: "Yu",
}

MONITOR_DESCRIPTIONS = {
    **{i + 1: f"EWMA chart on {kind.value}" for i, kind in enumerate(STAT_KINDS)},
    13: "moving-window scan statistics",
    14: "Shewhart charts on block propensities P",
    15: "compositional T^2 chart on degree parameters theta",
}

ALL_MONITORS = tuple(range(1, 16))


class MonitorFitError(ValueError):
    """Phase I data cannot support the chart (too short, singular, ...)."""


# ---------------------------------------------------------------------------
# EWMA
# ---------------------------------------------------------------------------

@dataclass
class EwmaState:
    lam: float
    mu_hat: float
    sigma_hat: float
    e_prev: float
    lower: float
    upper: float


def ewma_fit(phase1_stats: Sequence[float], lam: float = EWMA_LAMBDA, width: float = 3.0) -> EwmaState:
    """Steady-state EWMA limits ``mu +/- width * sigma * sqrt(lam / (2 - lam))``."""
    x = np.asarray(phase1_stats, dtype=np.float64)
    if x.size < 2:
        raise MonitorFitError(f"EWMA needs at least 2 Phase I values, got {x.size}")
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must be in (0, 1], got {lam}")
    mu = float(x.mean())
    sigma = float(x.std(ddof=1))
    half = width * max(sigma, SIGMA_FLOOR) * math.sqrt(lam / (2 - lam))
    return EwmaState(lam=lam, mu_hat=mu, sigma_hat=sigma, e_prev=mu, lower=mu - half, upper=mu + half)


def ewma_update(state: EwmaState, s_t: float) -> tuple[float, bool]:
    e = state.lam * s_t + (1 - state.lam) * state.e_prev
    state.e_prev = e
    return e, bool(e < state.lower or e > state.upper)


# ---------------------------------------------------------------------------
# scan statistics
# ---------------------------------------------------------------------------

def _standardize(x: np.ndarray, window: np.ndarray) -> np.ndarray:
    sd = np.maximum(window.std(axis=0, ddof=1), 1.0)
    return (x - window.mean(axis=0)) / sd


@dataclass
class ScanState:
    """Moving windows of raw neighborhood counts and of their standardized maxima."""

    window: int = SCAN_WINDOW
    threshold: float = SCAN_THRESHOLD
    raw: deque = field(default_factory=deque)
    maxima: deque = field(default_factory=deque)
    last_scores: np.ndarray | None = None  # T^{k*} for k = 0, 1, 2 at the last step

    def __post_init__(self) -> None:
        self.raw = deque(self.raw, maxlen=self.window)
        self.maxima = deque(self.maxima, maxlen=self.window)


def scan_update(state: ScanState, g: Graph) -> bool:
    counts = g.scan_counts
    return _scan_step(state, counts)


def _scan_step(state: ScanState, counts: np.ndarray) -> bool:
    signal = False
    state.last_scores = None
    if len(state.raw) == state.window:
        first = _standardize(counts, np.stack(state.raw))
        t_max = first.max(axis=1)
        if len(state.maxima) == state.window:
            second = _standardize(t_max, np.stack(state.maxima))
            state.last_scores = second
            signal = bool((second > state.threshold).any())
        state.maxima.append(t_max)
    state.raw.append(counts)
    return signal


# ---------------------------------------------------------------------------
# Shewhart charts on the block propensity matrix
# ---------------------------------------------------------------------------

def _one_hot(labels: np.ndarray, k: int | None = None) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if k is None else k
    z = np.zeros((labels.size, k))
    z[np.arange(labels.size), labels] = 1.0
    return z


def estimate_p_hat(g: Graph, labels) -> np.ndarray:
    """``m_rs / (n_r n_s)`` with ``m_rs`` the total edge weight between r and s."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (g.n,):
        raise ValueError(f"need {g.n} labels, got {labels.shape}")
    z = _one_hot(labels)
    sizes = z.sum(axis=0)
    if (sizes == 0).any():
        raise ValueError("every community must contain at least one node")
    m = z.T @ g.adj @ z
    m[np.diag_indices_from(m)] /= 2
    return m / np.outer(sizes, sizes)


@dataclass
class ShewhartPState:
    labels: np.ndarray
    mu_hat: np.ndarray  # over the unique (r, s), r <= s
    sigma_hat: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n_charts(self) -> int:
        return self.mu_hat.size


def moving_range_sigma(x) -> float:
    """Individuals-chart sigma: sqrt(pi) / (2 (m - 1)) * sum |x_j - x_{j-1}|."""
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[0]
    if m < 2:
        raise MonitorFitError(f"moving range needs at least 2 values, got {m}")
    return math.sqrt(math.pi) / (2 * (m - 1)) * np.abs(np.diff(x, axis=0)).sum(axis=0)


def shewhart_p_fit(phase1_graphs: Sequence[Graph], labels, width: float = 3.0) -> ShewhartPState:
    labels = np.asarray(labels, dtype=np.int64)
    if len(phase1_graphs) < 2:
        raise MonitorFitError("Shewhart chart needs at least 2 Phase I graphs")
    iu = np.triu_indices(int(labels.max()) + 1)
    series = np.array([estimate_p_hat(g, labels)[iu] for g in phase1_graphs])
    mu = series.mean(axis=0)
    sigma = moving_range_sigma(series)
    half = width * np.maximum(sigma, SIGMA_FLOOR)
    return ShewhartPState(labels=labels, mu_hat=mu, sigma_hat=sigma, lower=mu - half, upper=mu + half)


def shewhart_p_update(state: ShewhartPState, g: Graph) -> bool:
    k = state.labels.max() + 1
    p = estimate_p_hat(g, state.labels)[np.triu_indices(k)]
    return bool(((p < state.lower) | (p > state.upper)).any())


# ---------------------------------------------------------------------------
# compositional T^2 chart on degree parameters
# ---------------------------------------------------------------------------

def estimate_theta_hat(g: Graph, labels) -> np.ndarray:
    """``n_r d_i / sum_{j in r} d_j`` using weighted degrees ``d``."""
    labels = np.asarray(labels, dtype=np.int64)
    d = g.adj.sum(axis=1).astype(np.float64)
    k = int(labels.max()) + 1
    sizes = np.bincount(labels, minlength=k)
    totals = np.bincount(labels, weights=d, minlength=k)
    if (totals <= 0).any():
        bad = np.flatnonzero(totals <= 0).tolist()
        raise ValueError(f"communities {bad} have zero total degree")
    return d * (sizes / totals)[labels]


def _floor_theta(theta: np.ndarray) -> np.ndarray:
    if theta.min() >= THETA_FLOOR:
        return theta
    theta = np.maximum(theta, THETA_FLOOR)
    return theta * (theta.size / theta.sum())


def ilr_transform(theta) -> np.ndarray:
    """Isometric log-ratio coordinates of a positive composition.

    ``z_i = sqrt(i / (i + 1)) * log(theta_{i+1} / gmean(theta_1..theta_i))``
    for i = 1..D-1.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if (theta <= 0).any():
        raise ValueError("ilr coordinates need strictly positive parts")
    logs = np.log(theta)
    i = np.arange(1, theta.size)
    head_mean = np.cumsum(logs)[:-1] / i
    return np.sqrt(i / (i + 1)) * (logs[1:] - head_mean)


def f_quantile(p: float, d1: float, d2: float) -> float:
    """p-quantile of the F(d1, d2) distribution via the inverse incomplete beta."""
    if not 0 < p < 1:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if d1 <= 0 or d2 <= 0:
        raise ValueError(f"degrees of freedom must be positive, got ({d1}, {d2})")
    y = special.betaincinv(d1 / 2, d2 / 2, p)
    return float(d2 * y / (d1 * (1 - y)))


def t2_ucl(m: int, n_r: int, q: float = T2_QUANTILE) -> float:
    p = n_r - 1
    return p * (m + 1) * (m - 1) / (m * m - m * p) * f_quantile(q, p, m - p)


def successive_difference_cov(z: np.ndarray) -> np.ndarray:
    d = np.diff(z, axis=0)
    return d.T @ d / (2 * (z.shape[0] - 1))


def _spd_inverse(sigma: np.ndarray, what: str) -> np.ndarray:
    try:
        c = linalg.cho_factor(sigma)
    except linalg.LinAlgError:
        dim = sigma.shape[0]
        ridge = 1e-10 * np.trace(sigma) / dim
        try:
            c = linalg.cho_factor(sigma + ridge * np.eye(dim))
        except linalg.LinAlgError as exc:
            raise MonitorFitError(f"covariance of {what} is singular") from exc
    return linalg.cho_solve(c, np.eye(sigma.shape[0]))


@dataclass
class T2Chart:
    members: np.ndarray  # node indices of the community
    mu_z: np.ndarray
    sigma_inv: np.ndarray
    ucl: float
    sigma_z: np.ndarray | None = None

    def statistic(self, z: np.ndarray) -> float:
        dz = z - self.mu_z
        return float(dz @ self.sigma_inv @ dz)


@dataclass
class T2State:
    labels: np.ndarray
    charts: list[T2Chart]
    last_t2: list[float] = field(default_factory=list)


def _community_z(g: Graph, labels: np.ndarray, members: list[np.ndarray]) -> list[np.ndarray]:
    theta = estimate_theta_hat(g, labels)
    return [ilr_transform(_floor_theta(theta[idx])) for idx in members]


def t2_fit(phase1_graphs: Sequence[Graph], labels, q: float = T2_QUANTILE) -> T2State:
    labels = np.asarray(labels, dtype=np.int64)
    m = len(phase1_graphs)
    k = int(labels.max()) + 1
    members = [np.flatnonzero(labels == r) for r in range(k)]
    for r, idx in enumerate(members):
        if idx.size < 2:
            raise MonitorFitError(f"community {r} has fewer than 2 nodes")
        if m <= idx.size:
            raise MonitorFitError(f"community {r}: need more Phase I graphs ({m}) than nodes ({idx.size})")
    try:
        zs = [_community_z(g, labels, members) for g in phase1_graphs]
    except ValueError as exc:
        raise MonitorFitError(str(exc)) from exc
    charts = []
    for r, idx in enumerate(members):
        z = np.array([row[r] for row in zs])
        sigma = successive_difference_cov(z)
        inv = _spd_inverse(sigma, f"community {r}")
        charts.append(T2Chart(idx, z.mean(axis=0), inv, t2_ucl(m, idx.size, q), sigma))
    return T2State(labels=labels, charts=charts)


def t2_update(state: T2State, g: Graph) -> bool:
    try:
        zs = _community_z(g, state.labels, [c.members for c in state.charts])
    except ValueError:
        # a community with no edges at all is far outside any Phase I regime
        state.last_t2 = [math.inf] * len(state.charts)
        return True
    state.last_t2 = [c.statistic(z) for c, z in zip(state.charts, zs)]
    return any(t2 > c.ucl for t2, c in zip(state.last_t2, state.charts))


# ---------------------------------------------------------------------------
# uniform monitor lifecycle
# ---------------------------------------------------------------------------

class Monitor:
    monitor_id: int

    @property
    def name(self) -> str:
        return MONITOR_NAMES[self.monitor_id]

    def fit(self, phase1: Sequence[Graph]) -> None:
        raise NotImplementedError

    def update(self, g: Graph) -> bool:
        raise NotImplementedError


class EwmaMonitor(Monitor):
    def __init__(self, monitor_id: int, lam: float = EWMA_LAMBDA, width: float = 3.0) -> None:
        self.monitor_id = monitor_id
        self.kind: StatKind = STAT_KINDS[monitor_id - 1]
        self.lam = lam
        self.width = width
        self.state: EwmaState | None = None

    def fit(self, phase1: Sequence[Graph]) -> None:
        self.state = ewma_fit([g.summary[self.kind] for g in phase1], self.lam, self.width)

    def update(self, g: Graph) -> bool:
        return ewma_update(self.state, g.summary[self.kind])[1]


class ScanMonitor(Monitor):
    monitor_id = 13

    def __init__(self, window: int = SCAN_WINDOW, threshold: float = SCAN_THRESHOLD) -> None:
        self.state = ScanState(window=window, threshold=threshold)

    def fit(self, phase1: Sequence[Graph]) -> None:
        # Phase I only fills the moving windows; any signals here are discarded.
        for g in phase1:
            scan_update(self.state, g)

    def update(self, g: Graph) -> bool:
        return scan_update(self.state, g)


class ShewhartPMonitor(Monitor):
    monitor_id = 14

    def __init__(self, labels) -> None:
        self.labels = np.asarray(labels, dtype=np.int64)
        self.state: ShewhartPState | None = None

    def fit(self, phase1: Sequence[Graph]) -> None:
        self.state = shewhart_p_fit(phase1, self.labels)

    def update(self, g: Graph) -> bool:
        return shewhart_p_update(self.state, g)


class T2Monitor(Monitor):
    monitor_id = 15

    def __init__(self, labels) -> None:
        self.labels = np.asarray(labels, dtype=np.int64)
        self.state: T2State | None = None

    def fit(self, phase1: Sequence[Graph]) -> None:
        self.state = t2_fit(phase1, self.labels)

    def update(self, g: Graph) -> bool:
        return t2_update(self.state, g)


def make_monitor(monitor_id: int, labels=None) -> Monitor:
    if monitor_id in range(1, 13):
        return EwmaMonitor(monitor_id)
    if monitor_id == 13:
        return ScanMonitor()
    if monitor_id in (14, 15):
        if labels is None:
            raise ValueError(f"monitor {monitor_id} needs community labels")
        return ShewhartPMonitor(labels) if monitor_id == 14 else T2Monitor(labels)
    raise ValueError(f"unknown monitor id {monitor_id}; valid ids are 1..15")
