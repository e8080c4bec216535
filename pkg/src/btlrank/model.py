"""Ground-truth scores, Bernoulli comparison sampling, and model weights."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import ComparisonGraph, GraphError
from .laplacian import LaplacianOperator

GAUGE_TOL = 1e-9


class ModelError(ValueError):
    pass


def sigmoid(x):
    """Numerically stable sigmoid, valid for arbitrarily large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def sigmoid_derivative(x):
    s = sigmoid(np.asarray(x, dtype=np.float64))
    out = s * (1.0 - s)
    if np.ndim(x) == 0:
        return float(out)
    return out


def logit(y):
    """Inverse sigmoid; y must lie strictly inside (0, 1)."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise ModelError("logit requires values strictly inside (0, 1); "
                         "a 0/1 win fraction signals too few samples on an edge")
    out = np.log(y) - np.log1p(-y)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ScoreVector:
    """Length-n score vector; the zero-sum gauge pins the BTL shift ambiguity."""

    values: np.ndarray
    gauge: str = "zero-sum"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if self.gauge not in ("zero-sum", "raw"):
            raise ModelError(f"unknown gauge {self.gauge!r}")
        if self.gauge == "zero-sum" and abs(values.sum()) > GAUGE_TOL * max(len(values), 1):
            raise ModelError("zero-sum gauge violated")

    @classmethod
    def zero_sum(cls, values) -> "ScoreVector":
        values = np.asarray(values, dtype=np.float64)
        return cls(values - values.mean(), gauge="zero-sum")

    @property
    def n(self) -> int:
        return len(self.values)

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.values.tolist(), f)

    @classmethod
    def from_json(cls, path) -> "ScoreVector":
        with open(path) as f:
            return cls.zero_sum(np.array(json.load(f)))


def make_scores(kind: str, n: int, r: int, custom=None) -> ScoreVector:
    """Build ground-truth scores and shift them to the zero-sum gauge.

    kinds: "sine" (theta_i = sin(i/r)), "linear" (theta_i = i/r),
    "linear2d" (theta_(i1,i2) = (i1+i2)/r on a row-major sqrt(n) grid),
    or "custom" with an explicit vector.
    """
    if n < 2 or r < 1:
        raise ModelError("need n >= 2 and r >= 1")
    idx = np.arange(n, dtype=np.float64)
    if kind == "sine":
        raw = np.sin(idx / r)
    elif kind == "linear":
        raw = idx / r
    elif kind == "linear2d":
        side = math.isqrt(n)
        if side * side != n:
            raise ModelError("linear2d requires a perfect-square n")
        i1, i2 = np.divmod(np.arange(n), side)
        raw = (i1 + i2) / r
    elif kind == "custom":
        if custom is None:
            raise ModelError("custom scores require an explicit vector")
        raw = np.asarray(custom, dtype=np.float64)
        if len(raw) != n:
            raise ModelError("custom score length mismatch")
    else:
        raise ModelError(f"unknown score kind {kind!r}")
    return ScoreVector.zero_sum(raw)


def dynamic_range(graph: ComparisonGraph, scores: ScoreVector) -> tuple[float, float]:
    """(kappa, kappa_E): exp of the max score gap over all pairs / over edges."""
    theta = scores.values
    kappa = float(np.exp(theta.max() - theta.min()))
    if graph.num_edges:
        kappa_e = float(np.exp(np.abs(theta[graph.edge_i] - theta[graph.edge_j]).max()))
    else:
        kappa_e = 1.0
    return kappa, kappa_e


@dataclass(frozen=True)
class ComparisonData:
    """Per-edge win counts for the edges of a ComparisonGraph.

    ``wins[e]`` counts how often edge_i[e] beat edge_j[e] among counts[e]
    comparisons. Wins are stored as counts, not fractions, so the MLE
    existence check stays exact. ``from_probabilities`` builds the
    infinite-sample limit with fractional wins.
    """

    graph: ComparisonGraph
    wins: np.ndarray

    def __post_init__(self):
        wins = np.asarray(self.wins, dtype=np.float64)
        if len(wins) != self.graph.num_edges:
            raise ModelError("wins length must match edge count")
        if np.any(wins < 0) or np.any(wins > self.graph.counts):
            raise ModelError("wins must lie in [0, L] per edge")
        object.__setattr__(self, "wins", wins)

    @property
    def y(self) -> np.ndarray:
        """Win fraction of i over j per edge; y_ji = 1 - y_ij by convention."""
        return self.wins / self.graph.counts

    @classmethod
    def from_probabilities(cls, graph: ComparisonGraph, probs) -> "ComparisonData":
        probs = np.asarray(probs, dtype=np.float64)
        return cls(graph=graph, wins=probs * graph.counts)

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("i,j,wins,L\n")
            for i, j, w, c in zip(self.graph.edge_i, self.graph.edge_j, self.wins, self.graph.counts):
                w_repr = int(w) if float(w).is_integer() else repr(float(w))
                f.write(f"{i},{j},{w_repr},{c}\n")

    @classmethod
    def from_csv(cls, path, graph: ComparisonGraph) -> "ComparisonData":
        index = graph.edge_index_map()
        wins = np.zeros(graph.num_edges)
        seen = 0
        with open(path) as f:
            header = f.readline().strip().replace(" ", "")
            if header != "i,j,wins,L":
                raise ModelError(f"unexpected data CSV header: {header!r}")
            for line in f:
                line = line.strip()
                if not line:
                    continue
                i, j, w, c = line.split(",")
                e = index[(int(i), int(j))]
                if int(c) != graph.counts[e]:
                    raise ModelError(f"sample count mismatch on edge ({i},{j})")
                wins[e] = float(w)
                seen += 1
        if seen != graph.num_edges:
            raise ModelError("data CSV does not cover every edge")
        return cls(graph=graph, wins=wins)


def sample_comparisons(graph: ComparisonGraph, scores: ScoreVector,
                       rng: np.random.Generator) -> ComparisonData:
    """wins_ij ~ Binomial(L_ij, sigmoid(theta_i - theta_j)), independent across edges."""
    theta = scores.values
    if len(theta) != graph.n:
        raise ModelError("score length must match node count")
    p = sigmoid(theta[graph.edge_i] - theta[graph.edge_j])
    wins = rng.binomial(graph.counts, p)
    return ComparisonData(graph=graph, wins=wins.astype(np.float64))


def exact_comparisons(graph: ComparisonGraph, scores: ScoreVector) -> ComparisonData:
    """Infinite-sample data: y_ij set analytically to sigmoid(theta_i - theta_j)."""
    theta = scores.values
    p = sigmoid(theta[graph.edge_i] - theta[graph.edge_j])
    return ComparisonData.from_probabilities(graph, p)


def model_weights(graph: ComparisonGraph, scores: ScoreVector) -> np.ndarray:
    """z_ij = sigmoid'(theta_i - theta_j) per edge; values in (0, 0.25]."""
    theta = scores.values
    return sigmoid_derivative(theta[graph.edge_i] - theta[graph.edge_j])


def oracle_laplacian(graph: ComparisonGraph, scores: ScoreVector) -> LaplacianOperator:
    """Hessian of the MLE loss at the ground truth: weights L_ij * z_ij."""
    if not graph.connected:
        raise GraphError("oracle laplacian requires a connected graph")
    z = model_weights(graph, scores)
    return LaplacianOperator(graph.n, graph.edge_i, graph.edge_j, graph.counts * z)


def surrogate_laplacian(graph: ComparisonGraph, quarter: bool = False) -> LaplacianOperator:
    """Implementable preconditioner: weights L_ij, optionally scaled by 1/4."""
    if not graph.connected:
        raise GraphError("surrogate laplacian requires a connected graph")
    scale = 0.25 if quarter else 1.0
    return LaplacianOperator(graph.n, graph.edge_i, graph.edge_j, scale * graph.counts.astype(np.float64))
