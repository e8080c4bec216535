"""Error metrics, per-pair concentration-bound quantities, and closed-form
locality rates for grid graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import ComparisonGraph
from .model import ModelError, ScoreVector, dynamic_range, oracle_laplacian


@dataclass(frozen=True)
class PairwiseErrorReport:
    """Gauge-invariant distances between two score vectors.

    ``linf`` is the max single-entry error after mean-centering both vectors,
    ``max_pairwise`` the largest error of any score difference, ``l2`` the
    Euclidean norm of the centered error. Always
    linf <= max_pairwise <= 2 linf.
    """

    linf: float
    max_pairwise: float
    l2: float
    pair_errors: np.ndarray | None = None  # |delta_k - delta_l| per requested pair


def error_report(estimate: ScoreVector, truth: ScoreVector,
                 pairs=None) -> PairwiseErrorReport:
    a = estimate.values
    b = truth.values
    if len(a) != len(b):
        raise ModelError("score vectors must have equal length")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        return PairwiseErrorReport(float("inf"), float("inf"), float("inf"))
    delta = (a - a.mean()) - (b - b.mean())
    linf = float(np.abs(delta).max())
    max_pairwise = float(delta.max() - delta.min())
    # (1/n) sum_{k<l} (delta_k - delta_l)^2 == ||delta||^2 when delta is centered
    l2 = float(np.linalg.norm(delta))
    per_pair = None
    if pairs is not None:
        per_pair = np.array([abs(delta[k] - delta[l]) for k, l in pairs])
    return PairwiseErrorReport(linf=linf, max_pairwise=max_pairwise, l2=l2,
                               pair_errors=per_pair)


@dataclass(frozen=True)
class BoundQuantities:
    """Per-pair concentration quantities at the ground truth.

    For each requested pair (k, l): the effective resistance ``omega`` in
    the oracle Laplacian, the basic bound ``B``, the resistance-weighted
    edge aggregate ``Q``, and the unweighted aggregate ``V``. ``edge_ok``
    flags whether Q <= 4 B held on every edge of the graph.
    """

    pairs: list[tuple[int, int]]
    omega: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    V: np.ndarray
    edge_ok: bool
    kappa_E: float

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("k,l,omega,B,Q,V\n")
            for (k, l), o, b, q, v in zip(self.pairs, self.omega, self.B, self.Q, self.V):
                f.write(f"{k},{l},{o!r},{b!r},{q!r},{v!r}\n")


def bound_quantities(graph: ComparisonGraph, truth: ScoreVector, delta: float,
                     C0: float = 1.0, pairs=None, tol: float = 1e-10) -> BoundQuantities:
    """Evaluate B, Q, V at the ground truth for the requested node pairs.

    B_kl = C0 sqrt(Omega_kl kappa_E log(n / delta)) with Omega taken in the
    oracle Laplacian; Q and V aggregate |(e_k - e_l)^T Lz^+ (e_i - e_j)| over
    edges, Q weighted by L_ij B_ij^2 and V by L_ij. ``delta`` is the failure
    probability and must lie in (0, 0.5).
    """
    if not (0.0 < delta < 0.5):
        raise ModelError("failure probability must lie in (0, 0.5)")
    if C0 <= 0:
        raise ModelError("C0 must be positive")
    op = oracle_laplacian(graph, truth)
    n = graph.n
    _, kappa_e = dynamic_range(graph, truth)
    log_term = math.log(n / delta)

    edge_pairs = list(zip(graph.edge_i.tolist(), graph.edge_j.tolist()))
    if pairs is None:
        want = [(k, l) for k in range(n) for l in range(k + 1, n)]
    else:
        want = [(min(k, l), max(k, l)) for k, l in pairs]
    all_pairs = sorted(set(want) | set(edge_pairs))
    omega_map = op.resistance_matrix(pairs=all_pairs, tol=tol)

    def bound(o: float) -> float:
        return C0 * math.sqrt(o * kappa_e * log_term)

    B_edge = np.array([bound(omega_map[p]) for p in edge_pairs])
    counts = graph.counts.astype(np.float64)

    # one pseudo-inverse solve per requested pair
    omega = np.zeros(len(want))
    B = np.zeros(len(want))
    Q = np.zeros(len(want))
    V = np.zeros(len(want))
    cache: dict[int, np.ndarray] = {}

    def column(node: int) -> np.ndarray:
        if node not in cache:
            b = np.zeros(n)
            b[node] = 1.0
            v, report = op.solve_orthogonal(b, tol=tol)
            if not report.converged:
                raise ModelError("oracle resistance solve did not converge")
            cache[node] = v
        return cache[node]

    for idx, (k, l) in enumerate(want):
        v = column(k) - column(l)
        omega[idx] = omega_map[(k, l)]
        B[idx] = bound(omega[idx])
        inner = np.abs(v[graph.edge_i] - v[graph.edge_j])
        Q[idx] = float((counts * B_edge ** 2 * inner).sum())
        V[idx] = float((counts * inner).sum())

    # theorem conformance is checked on the edges themselves
    q_edge = np.zeros(len(edge_pairs))
    for idx, (k, l) in enumerate(edge_pairs):
        v = column(k) - column(l)
        inner = np.abs(v[graph.edge_i] - v[graph.edge_j])
        q_edge[idx] = float((counts * B_edge ** 2 * inner).sum())
    edge_ok = bool(np.all(q_edge <= 4.0 * B_edge + 1e-12))

    return BoundQuantities(pairs=want, omega=omega, B=B, Q=Q, V=V,
                           edge_ok=edge_ok, kappa_E=kappa_e)


def locality_bound(kind: str, n: int, r: int, p: float, L: int,
                   const: float | None = None) -> float:
    """Closed-form max-error rate for locality grids.

    grid1d: const sqrt(n / r^2 + 1) sqrt(1 / (r p L)), default const 5.
    grid2d: const sqrt(log(n) / r^2 + 1) sqrt(1 / (r^2 p L)), default const 6.
    """
    if n < 2 or r < 1 or L < 1 or not (0.0 < p <= 1.0):
        raise ModelError("need n >= 2, r >= 1, L >= 1, p in (0, 1]")
    if kind == "grid1d":
        c = 5.0 if const is None else const
        return c * math.sqrt(n / r ** 2 + 1.0) * math.sqrt(1.0 / (r * p * L))
    if kind == "grid2d":
        c = 6.0 if const is None else const
        return c * math.sqrt(math.log(n) / r ** 2 + 1.0) * math.sqrt(1.0 / (r ** 2 * p * L))
    raise ModelError(f"unknown grid kind {kind!r}")
