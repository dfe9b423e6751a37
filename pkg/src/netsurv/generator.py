"""Degree-corrected block model sampling and dependent network sequences.

A sequence is produced by a keep-or-refresh process: at every step each
unordered node pair keeps its previous edge count with probability
``1 - alpha`` and is otherwise redrawn from the current model.  A change
is introduced by switching the model at ``t_star``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import Graph

MODEL_TYPE = "DCSBM"

# Reference network size at which the scenario table is written.
REFERENCE_N = 40

ONE_COMMUNITY_SCENARIOS = ("no_change", "global", "local", "propensity")
TWO_COMMUNITY_SCENARIOS = ("intensified", "split", "merge", "form", "fragment")
SCENARIOS = ONE_COMMUNITY_SCENARIOS + TWO_COMMUNITY_SCENARIOS

# (baseline P, changed P) at n = 40
_TWO_COMMUNITY_P = {
    "no_change": ([[0.3, 0.1], [0.1, 0.3]], [[0.3, 0.1], [0.1, 0.3]]),
    "intensified": ([[0.3, 0.1], [0.1, 0.3]], [[0.4, 0.1], [0.1, 0.3]]),
    "split": ([[0.2, 0.2], [0.2, 0.2]], [[0.3, 0.1], [0.1, 0.3]]),
    "merge": ([[0.3, 0.1], [0.1, 0.3]], [[0.2, 0.2], [0.2, 0.2]]),
    "form": ([[0.4, 0.2], [0.2, 0.1]], [[0.3, 0.1], [0.1, 0.3]]),
    "fragment": ([[0.3, 0.1], [0.1, 0.3]], [[0.4, 0.2], [0.2, 0.1]]),
}

BASE_P = 0.2
GLOBAL_P = 0.25
LOCAL_P = 0.4
LOCAL_FRACTION = 0.2
THETA_RANGE = (0.5, 1.5)
PROPENSITY_THETA_RANGE = (0.5, 3.0)

SCENARIO_DESCRIPTIONS = {
    "no_change": "p = 0.2 (or P = [[0.3,0.1],[0.1,0.3]] with a node configuration); no change",
    "global": "p: 0.2 -> 0.25",
    "local": "p: 0.2 -> 0.4 for n/5",
    "propensity": "theta: U(0.5, 1.5) -> U(0.5, 3)",
    "intensified": "P: [[0.3,0.1],[0.1,0.3]] -> [[0.4,0.1],[0.1,0.3]]",
    "split": "P: [[0.2,0.2],[0.2,0.2]] -> [[0.3,0.1],[0.1,0.3]]",
    "merge": "P: [[0.3,0.1],[0.1,0.3]] -> [[0.2,0.2],[0.2,0.2]]",
    "form": "P: [[0.4,0.2],[0.2,0.1]] -> [[0.3,0.1],[0.1,0.3]]",
    "fragment": "P: [[0.3,0.1],[0.1,0.3]] -> [[0.4,0.2],[0.2,0.1]]",
}


@dataclass(frozen=True)
class NodeConfiguration:
    """Fractions of nodes in the first and second community."""

    first: float
    second: float

    ALLOWED = (0.1, 0.25, 0.5, 0.75, 0.9)

    def __post_init__(self) -> None:
        if abs(self.first + self.second - 1.0) > 1e-12:
            raise ValueError(f"node fractions must sum to 1, got {self.first} + {self.second}")
        for f in (self.first, self.second):
            if f not in self.ALLOWED:
                raise ValueError(f"node fraction {f} not in {self.ALLOWED}")

    @classmethod
    def parse(cls, text: str) -> NodeConfiguration:
        """Parse ``"50-50"``, ``"25-75"`` or ``"10-90"`` style percentages."""
        try:
            a, b = (int(x) for x in text.split("-"))
        except ValueError as exc:
            raise ValueError(f"bad node configuration {text!r}; expected e.g. '25-75'") from exc
        return cls(a / 100, b / 100)

    def __str__(self) -> str:
        return f"{round(self.first * 100)}-{round(self.second * 100)}"

    def sizes(self, n: int) -> tuple[int, int]:
        n1 = int(round(self.first * n))
        return n1, n - n1


BALANCED = NodeConfiguration(0.5, 0.5)


@dataclass(frozen=True, eq=False)
class DcsbmParams:
    n: int
    k: int
    labels: np.ndarray  # community of each node, 0..k-1
    P: np.ndarray
    theta: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        P = np.asarray(self.P, dtype=np.float64)
        theta = np.asarray(self.theta, dtype=np.float64)
        if labels.shape != (self.n,) or theta.shape != (self.n,):
            raise ValueError("labels and theta must have length n")
        if P.shape != (self.k, self.k) or not np.allclose(P, P.T, atol=0):
            raise ValueError("P must be a symmetric k x k matrix")
        if (P < 0).any():
            raise ValueError("propensities must be non-negative")
        if labels.min() < 0 or labels.max() >= self.k:
            raise ValueError("labels must lie in 0..k-1")
        if (theta <= 0).any():
            raise ValueError("degree parameters must be positive")
        sizes = np.bincount(labels, minlength=self.k)
        sums = np.bincount(labels, weights=theta, minlength=self.k)
        if (sizes == 0).any():
            raise ValueError("every community must have at least one node")
        if not np.allclose(sums, sizes, rtol=0, atol=1e-9):
            raise ValueError(f"theta sums {sums} do not match community sizes {sizes}")
        for name, arr in (("labels", labels), ("P", P), ("theta", theta)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DcsbmParams):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.P, other.P)
            and np.array_equal(self.theta, other.theta)
        )

    @property
    def community_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def pair_means(self) -> np.ndarray:
        """Poisson means for the strict upper triangle, in ``triu_indices`` order."""
        i, j = np.triu_indices(self.n, 1)
        return self.theta[i] * self.theta[j] * self.P[self.labels[i], self.labels[j]]

    def expected_degrees(self) -> np.ndarray:
        mean = np.outer(self.theta, self.theta) * self.P[np.ix_(self.labels, self.labels)]
        np.fill_diagonal(mean, 0.0)
        return mean.sum(axis=1)


@dataclass(frozen=True)
class GenerativeModel:
    params: DcsbmParams
    alpha: float
    model_type: str = field(default=MODEL_TYPE)

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.model_type != MODEL_TYPE:
            raise ValueError(f"unsupported model type {self.model_type!r}")


@dataclass(frozen=True)
class ChangeScenario:
    name: str
    baseline: GenerativeModel
    changed: GenerativeModel
    t_star: int

    def __post_init__(self) -> None:
        if self.baseline.alpha != self.changed.alpha:
            raise ValueError("baseline and changed models must share alpha")
        if self.baseline.params.n != self.changed.params.n:
            raise ValueError("baseline and changed models must have the same n")
        if self.name == "no_change" and self.baseline != self.changed:
            raise ValueError("no_change scenario must not change the model")


# ---------------------------------------------------------------------------
# degree parameters
# ---------------------------------------------------------------------------

def scale_theta(raw, labels) -> np.ndarray:
    """Rescale so each community's degree parameters sum to its size."""
    raw = np.asarray(raw, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if (raw <= 0).any():
        raise ValueError("degree parameters must be positive")
    k = int(labels.max()) + 1
    sizes = np.bincount(labels, minlength=k)
    sums = np.bincount(labels, weights=raw, minlength=k)
    theta = raw * (sizes / sums)[labels]
    # absorb rounding so the community sums are exact to machine precision
    theta *= (sizes / np.bincount(labels, weights=theta, minlength=k))[labels]
    return theta


def sample_theta(n: int, labels, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got ({lo}, {hi})")
    return scale_theta(rng.uniform(lo, hi, size=n), labels)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_graph(params: DcsbmParams, rng: np.random.Generator) -> Graph:
    return Graph.from_upper(params.n, rng.poisson(params.pair_means()))


def _evolve_upper(prev_upper, means, alpha, rng):
    refresh = rng.random(means.shape[0]) < alpha
    fresh = rng.poisson(means)
    return np.where(refresh, fresh, prev_upper), refresh


def evolve(prev: Graph, model: GenerativeModel, rng: np.random.Generator) -> Graph:
    """One keep-or-refresh step applied independently to every node pair."""
    n = model.params.n
    if prev.n != n:
        raise ValueError(f"previous graph has {prev.n} nodes, model has {n}")
    prev_upper = prev.adj[np.triu_indices(n, 1)]
    upper, _ = _evolve_upper(prev_upper, model.params.pair_means(), model.alpha, rng)
    return Graph.from_upper(n, upper)


def generate_sequence(scenario: ChangeScenario, T: int, rng: np.random.Generator) -> list[Graph]:
    """Graphs G_1..G_T; the changed model governs every t >= t_star."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if not 1 <= scenario.t_star <= T + 1:
        raise ValueError(f"t_star must be in [1, {T + 1}], got {scenario.t_star}")
    n = scenario.baseline.params.n
    alpha = scenario.baseline.alpha
    base_means = scenario.baseline.params.pair_means()
    changed_means = scenario.changed.params.pair_means()

    first = scenario.changed if scenario.t_star == 1 else scenario.baseline
    upper = rng.poisson(first.params.pair_means())
    graphs = [Graph.from_upper(n, upper)]
    for t in range(2, T + 1):
        means = changed_means if t >= scenario.t_star else base_means
        upper, _ = _evolve_upper(upper, means, alpha, rng)
        graphs.append(Graph.from_upper(n, upper))
    return graphs


# ---------------------------------------------------------------------------
# scenario catalog
# ---------------------------------------------------------------------------

def rescale_propensities(P, ref_sizes: Sequence[int], sizes: Sequence[int]) -> np.ndarray:
    """Keep every node's expected degree (at theta = 1) equal to the reference.

    A node in community r receives ``(n_r - 1) P_rr + sum_s n_s P_rs``; each
    term is preserved separately.
    """
    P = np.array(P, dtype=np.float64)
    ref = np.asarray(ref_sizes, dtype=np.float64)
    cur = np.asarray(sizes, dtype=np.float64)
    out = P * (ref[None, :] / cur[None, :])
    diag = np.diag_indices_from(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        within = np.where(cur > 1, (ref - 1) / (cur - 1), 1.0)
    out[diag] = P[diag] * within
    # between-community factors agree when community fractions are fixed
    return (out + out.T) / 2


def _labels_from_sizes(sizes: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(sizes)), sizes)


def _reference_sizes(fractions: Sequence[float]) -> list[int]:
    ref = [int(round(f * REFERENCE_N)) for f in fractions]
    ref[-1] = REFERENCE_N - sum(ref[:-1])
    return ref


def _sizes(fractions: Sequence[float], n: int) -> list[int]:
    sizes = [int(round(f * n)) for f in fractions]
    sizes[-1] = n - sum(sizes[:-1])
    return sizes


def _local_changed(theta: np.ndarray, n: int, p_block: float, p_rest: float) -> DcsbmParams:
    # Re-express the one-community model on a (block, rest) partition. The
    # theta scale of each part is moved into P so the pair means are exactly
    # theta_i theta_j P and the per-community sum constraint still holds.
    fractions = (LOCAL_FRACTION, 1 - LOCAL_FRACTION)
    sizes = _sizes(fractions, n)
    labels = _labels_from_sizes(sizes)
    P = rescale_propensities(
        [[p_block, p_rest], [p_rest, p_rest]], _reference_sizes(fractions), sizes
    )
    scale = np.bincount(labels, weights=theta) / np.asarray(sizes)
    P = P * np.outer(scale, scale)
    return DcsbmParams(n=n, k=2, labels=labels, P=P, theta=theta / scale[labels])


def scenario_catalog(
    name: str,
    n: int,
    alpha: float,
    node_config: NodeConfiguration | str | None = None,
    rng: np.random.Generator | None = None,
    t_star: int = 201,
) -> ChangeScenario:
    """Build the baseline/changed model pair for a named change scenario.

    Degree parameters are drawn from ``rng``; propensities are given at
    n = 40 and rescaled for other sizes so expected node degrees are kept.
    ``no_change`` with a node configuration is the two-community in-control
    model.
    """
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    if rng is None:
        rng = np.random.default_rng()
    if isinstance(node_config, str):
        node_config = NodeConfiguration.parse(node_config)

    two_community = name in TWO_COMMUNITY_SCENARIOS or (name == "no_change" and node_config is not None)
    if two_community:
        cfg = node_config or BALANCED
        fractions = (cfg.first, cfg.second)
        sizes = _sizes(fractions, n)
        ref = _reference_sizes(fractions)
        labels = _labels_from_sizes(sizes)
        theta = sample_theta(n, labels, *THETA_RANGE, rng)
        p0, p1 = _TWO_COMMUNITY_P[name]
        base = DcsbmParams(n, 2, labels, rescale_propensities(p0, ref, sizes), theta)
        changed = DcsbmParams(n, 2, labels, rescale_propensities(p1, ref, sizes), theta)
    else:
        labels = np.zeros(n, dtype=np.int64)
        theta = sample_theta(n, labels, *THETA_RANGE, rng)
        p = rescale_propensities([[BASE_P]], [REFERENCE_N], [n])
        base = DcsbmParams(n, 1, labels, p, theta)
        if name == "no_change":
            changed = base
        elif name == "global":
            changed = DcsbmParams(n, 1, labels, rescale_propensities([[GLOBAL_P]], [REFERENCE_N], [n]), theta)
        elif name == "local":
            changed = _local_changed(theta, n, LOCAL_P, BASE_P)
        else:  # propensity
            changed = DcsbmParams(n, 1, labels, p, sample_theta(n, labels, *PROPENSITY_THETA_RANGE, rng))

    return ChangeScenario(
        name=name,
        baseline=GenerativeModel(base, alpha),
        changed=GenerativeModel(changed, alpha),
        t_star=t_star,
    )
