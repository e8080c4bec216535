"""Divide-and-conquer estimators: overlap alignment, projected gradient
descent over subgraphs, and disjoint-community stitching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix

from .estimators import (ConvergenceTrace, MleProblem, NonexistenceError,
                         SolverConfig, gradient, loss, solve_mle)
from .graphs import (ComparisonGraph, GraphError, Partition, SuperGraph,
                     cross_edge_supergraph, overlap_supergraph)
from .laplacian import LaplacianOperator
from .model import ComparisonData, ScoreVector, sigmoid


@dataclass(frozen=True)
class LocalEstimates:
    """Per-subset score estimates, each in its own zero-sum gauge."""

    partition: Partition
    thetas: list[np.ndarray]  # thetas[a][k] scores partition.subsets[a][k]


@dataclass(frozen=True)
class AlignmentShifts:
    """Per-subset shift constants solved from the super-graph Laplacian."""

    shifts: np.ndarray
    operator: LaplacianOperator | None  # None when the partition has one subset


def _restrict(graph: ComparisonGraph, data: ComparisonData,
              nodes: np.ndarray) -> tuple[ComparisonGraph, ComparisonData]:
    """Subgraph on ``nodes`` with relabeled endpoints and restricted wins."""
    edges = graph.subgraph_edges(nodes)
    relabel = np.full(graph.n, -1, dtype=np.int64)
    relabel[nodes] = np.arange(len(nodes))
    sub = ComparisonGraph(n=len(nodes),
                          edge_i=relabel[graph.edge_i[edges]],
                          edge_j=relabel[graph.edge_j[edges]],
                          counts=graph.counts[edges])
    return sub, ComparisonData(graph=sub, wins=data.wins[edges])


def local_estimates(graph: ComparisonGraph, data: ComparisonData, partition: Partition,
                    config: SolverConfig | None = None,
                    local_method: str = "mle") -> LocalEstimates:
    """Estimate scores independently on every subset's induced subgraph."""
    if local_method not in ("mle", "spectral"):
        raise GraphError(f"unknown local method {local_method!r}")
    thetas = []
    for a, nodes in enumerate(partition.subsets):
        sub, subdata = _restrict(graph, data, nodes)
        if local_method == "spectral":
            from .estimators import spectral_estimate

            # local blocks are small; scale the budget to the block instead
            # of the global default, which models the long-chain failure
            result = spectral_estimate(sub, subdata,
                                       max_iter=max(1000, 60 * sub.n))
            if result.failed:
                raise NonexistenceError(
                    f"local spectral estimate failed on subset {a}")
            thetas.append(result.theta.values)
            continue
        try:
            local_config = config or SolverConfig(method="precond_gd")
            scores, _ = solve_mle(MleProblem(sub, subdata), local_config)
        except NonexistenceError as exc:
            raise NonexistenceError(
                f"local MLE does not exist on subset {a}: {exc}",
                nodes=getattr(exc, "nodes", None)) from exc
        thetas.append(scores.values)
    return LocalEstimates(partition=partition, thetas=thetas)


def _local_lookup(partition: Partition, thetas: list[np.ndarray]) -> list[dict[int, float]]:
    return [{int(node): float(th[k]) for k, node in enumerate(subset)}
            for subset, th in zip(partition.subsets, thetas)]


def overlap_alignment(local: LocalEstimates,
                      supergraph: SuperGraph | None = None) -> AlignmentShifts:
    """Shifts c = Ltilde^+ x from pairwise disagreements on shared nodes.

    Super-edge (a, b) carries weight |V_a intersect V_b|; x accumulates
    (theta_b[i] - theta_a[i]) over shared nodes into the (a, b) direction.
    """
    part = local.partition
    if supergraph is None:
        supergraph = overlap_supergraph(part)
    if part.m == 1:
        return AlignmentShifts(np.zeros(1), None)
    if not supergraph.connected:
        raise GraphError("overlap super-graph is disconnected; alignment is ambiguous")
    lookup = _local_lookup(part, local.thetas)
    weights = np.array([len(p) for p in supergraph.payloads], dtype=np.float64)
    x = np.zeros(part.m)
    for a, b, shared in zip(supergraph.super_i, supergraph.super_j, supergraph.payloads):
        gap = sum(lookup[b][int(i)] - lookup[a][int(i)] for i in shared)
        x[a] += gap
        x[b] -= gap
    op = LaplacianOperator(part.m, supergraph.super_i, supergraph.super_j, weights)
    c, report = op.solve_orthogonal(x)
    if not report.converged:
        raise GraphError("alignment solve did not converge")
    return AlignmentShifts(c, op)


def merge_overlap(local: LocalEstimates, shifts: AlignmentShifts) -> ScoreVector:
    """theta_i = average over covering subsets of (local theta + subset shift)."""
    part = local.partition
    acc = np.zeros(part.n)
    for a, (subset, th) in enumerate(zip(part.subsets, local.thetas)):
        acc[subset] += th + shifts.shifts[a]
    return ScoreVector.zero_sum(acc / part.membership_counts())


def dc_overlap(graph: ComparisonGraph, data: ComparisonData, partition: Partition,
               config: SolverConfig | None = None, local_method: str = "mle"
               ) -> tuple[ScoreVector, LocalEstimates, AlignmentShifts]:
    """Divide-and-conquer estimate over an overlapping partition."""
    if partition.mode != "overlapping":
        raise GraphError("dc_overlap needs an overlapping partition")
    local = local_estimates(graph, data, partition, config, local_method)
    shifts = overlap_alignment(local)
    return merge_overlap(local, shifts), local, shifts


def alignment_identity_residual(local: LocalEstimates, shifts: AlignmentShifts,
                                true_scores: ScoreVector) -> float:
    """Max-norm residual of the exact alignment-error decomposition.

    With local errors delta_a[i] = theta_a[i] - (theta*_i - mean_a theta*),
    the solved shifts satisfy
    c - c* = -(mean c*) 1 + Ltilde^+ sum_(a,b) sum_i (delta_b[i] - delta_a[i]) (e_a - e_b)
    up to solver precision; returns the deviation from that identity.
    """
    part = local.partition
    theta_star = true_scores.values
    c_star = np.array([theta_star[s].mean() for s in part.subsets])
    if part.m == 1:
        return float(abs(shifts.shifts[0] + c_star.mean() - c_star[0]))
    deltas = [th - (theta_star[s] - c_star[a])
              for a, (s, th) in enumerate(zip(part.subsets, local.thetas))]
    lookup = _local_lookup(part, deltas)
    op = shifts.operator
    sg = overlap_supergraph(part)
    x = np.zeros(part.m)
    for a, b, shared in zip(sg.super_i, sg.super_j, sg.payloads):
        gap = sum(lookup[b][int(i)] - lookup[a][int(i)] for i in shared)
        x[a] += gap
        x[b] -= gap
    rhs, report = op.solve_orthogonal(x)
    if not report.converged:
        raise GraphError("identity solve did not converge")
    lhs = shifts.shifts - c_star
    rhs = rhs - c_star.mean()
    return float(np.abs(lhs - rhs).max())


def pgd_solve(graph: ComparisonGraph, data: ComparisonData, partition: Partition,
              eta: float, max_iter: int = 500, theta0: np.ndarray | None = None,
              grad_tol_factor: float = 1e-8,
              reference: np.ndarray | None = None
              ) -> tuple[ScoreVector, ConvergenceTrace]:
    """Projected gradient descent over subgraphs of an overlapping partition.

    Shared edges get weight 1/coverage so the summed subgraph losses equal
    the full loss. Each iteration takes one gradient step per subgraph,
    re-aligns the subgraphs with shifts weighted by 1/s_i on shared nodes,
    and averages back to a single global vector. With one subset this is
    exactly vanilla gradient descent.
    """
    if partition.mode != "overlapping":
        raise GraphError("pgd needs an overlapping partition")
    n, m = graph.n, partition.m
    s = partition.membership_counts().astype(np.float64)
    coverage = np.zeros(graph.num_edges)
    subset_edges = []
    for nodes in partition.subsets:
        edges = graph.subgraph_edges(nodes)
        subset_edges.append(edges)
        coverage[edges] += 1.0
    if np.any(coverage == 0):
        raise GraphError("partition subsets do not cover every edge")

    sg = overlap_supergraph(partition)
    if m > 1 and not sg.connected:
        raise GraphError("overlap super-graph is disconnected; alignment is ambiguous")
    if m > 1:
        tilde_w = np.array([float((1.0 / s[p]).sum()) for p in sg.payloads])
        tilde = LaplacianOperator(m, sg.super_i, sg.super_j, tilde_w)
        # membership matrix to broadcast per-subset shifts back to nodes
        rows = np.concatenate([nodes for nodes in partition.subsets])
        cols = np.concatenate([np.full(len(nodes), a) for a, nodes in enumerate(partition.subsets)])
        member = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, m)).tocsr()

    problem = MleProblem(graph, data)  # unweighted; summed subgraph losses match it
    y = data.y
    scale = graph.counts.astype(np.float64)
    theta = np.zeros(n) if theta0 is None else np.array(theta0, dtype=np.float64)
    tol = grad_tol_factor * problem.total_samples
    trace = ConvergenceTrace(method="pgd")

    for t in range(max_iter + 1):
        d = theta[graph.edge_i] - theta[graph.edge_j]
        coef = scale * (sigmoid(d) - y)
        g_full = np.zeros(n)
        np.add.at(g_full, graph.edge_i, coef)
        np.add.at(g_full, graph.edge_j, -coef)
        gn = float(np.linalg.norm(g_full))
        if reference is not None:
            delta = (theta - theta.mean()) - (reference - reference.mean())
            trace.record(t, loss(problem, theta), gn, float(np.abs(delta).max()))
        else:
            trace.record(t, loss(problem, theta), gn, None)
        if not np.isfinite(gn):
            break
        if gn <= tol:
            trace.converged = True
            break
        if t == max_iter:
            break
        if m == 1:
            theta = theta - eta * g_full
            continue
        # per-subset gradients of the 1/coverage-weighted local losses
        g_sub = np.zeros((m, n))
        for a, edges in enumerate(subset_edges):
            ce = (coef[edges] / coverage[edges])
            np.add.at(g_sub[a], graph.edge_i[edges], ce)
            np.add.at(g_sub[a], graph.edge_j[edges], -ce)
        # local steps share theta, so disagreements on node i are eta*(g_a - g_b)
        x = np.zeros(m)
        for a, b, shared in zip(sg.super_i, sg.super_j, sg.payloads):
            gap = float((-eta * (g_sub[b, shared] - g_sub[a, shared]) / s[shared]).sum())
            x[a] += gap
            x[b] -= gap
        c, report = tilde.solve_orthogonal(x)
        if not report.converged:
            raise GraphError("pgd alignment solve did not converge")
        # subgraph gradients sum to g_full because coverage weights sum to 1
        theta = theta - eta * g_full / s + (member @ c) / s

    return ScoreVector.zero_sum(theta), trace


def _cross_delta(graph: ComparisonGraph, data: ComparisonData, edges: np.ndarray,
                 side_a: np.ndarray, theta_lookup_a: dict[int, float],
                 theta_lookup_b: dict[int, float], tol: float = 1e-12) -> float:
    """Bisection root of the monotone cross-block score equation.

    Solves sum over cross edges of L * (sigmoid(theta_a[i] - theta_b[j] + delta) - y_ij) = 0
    where i is the endpoint in block a. Unanimous cross data pushes the root
    to +-infinity, which means the stitched MLE does not exist.
    """
    base, counts, wins = [], [], []
    for e in edges:
        u, v = int(graph.edge_i[e]), int(graph.edge_j[e])
        c = float(graph.counts[e])
        w = float(data.wins[e])
        if side_a[u]:
            base.append(theta_lookup_a[u] - theta_lookup_b[v])
            wins.append(w)
        else:
            base.append(theta_lookup_a[v] - theta_lookup_b[u])
            wins.append(c - w)
        counts.append(c)
    base = np.array(base)
    counts = np.array(counts)
    wins = np.array(wins)
    total_wins = wins.sum()
    if total_wins == 0.0 or total_wins == counts.sum():
        raise NonexistenceError("unanimous cross-block outcomes; block offset diverges")

    def f(delta: float) -> float:
        return float((counts * sigmoid(base + delta)).sum() - total_wins)

    lo, hi = -60.0, 60.0
    if f(lo) > 0 or f(hi) < 0:
        raise NonexistenceError("cross-block offset escapes the bracket [-60, 60]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def dc_community(graph: ComparisonGraph, data: ComparisonData, partition: Partition,
                 config: SolverConfig | None = None,
                 weight_mode: str = "cross-edge-count",
                 local_method: str = "mle"
                 ) -> tuple[ScoreVector, LocalEstimates, AlignmentShifts]:
    """Divide-and-conquer estimate over a disjoint partition.

    Local estimates per block, a scalar offset per block pair from the
    cross edges, then global shifts from the super-graph Laplacian whose
    edge weights count cross edges ("cross-edge-count") or are all one
    ("unit").
    """
    if partition.mode != "disjoint":
        raise GraphError("dc_community needs a disjoint partition")
    if weight_mode not in ("unit", "cross-edge-count"):
        raise GraphError(f"unknown weight mode {weight_mode!r}")
    local = local_estimates(graph, data, partition, config, local_method)
    part = partition
    sg = cross_edge_supergraph(part, graph)
    if part.m > 1 and not sg.connected:
        raise GraphError("cross-edge super-graph is disconnected; alignment is ambiguous")
    if part.m == 1:
        shifts = AlignmentShifts(np.zeros(1), None)
        return merge_overlap(local, shifts), local, shifts
    lookup = _local_lookup(part, local.thetas)
    side = [np.zeros(graph.n, dtype=bool) for _ in range(part.m)]
    for a, nodes in enumerate(part.subsets):
        side[a][nodes] = True
    weights = np.zeros(len(sg.payloads))
    x = np.zeros(part.m)
    for k, (a, b, edges) in enumerate(zip(sg.super_i, sg.super_j, sg.payloads)):
        delta = _cross_delta(graph, data, edges, side[a], lookup[a], lookup[b])
        weights[k] = float(len(edges)) if weight_mode == "cross-edge-count" else 1.0
        x[a] += weights[k] * delta
        x[b] -= weights[k] * delta
    op = LaplacianOperator(part.m, sg.super_i, sg.super_j, weights)
    c, report = op.solve_orthogonal(x)
    if not report.converged:
        raise GraphError("community alignment solve did not converge")
    shifts = AlignmentShifts(c, op)
    return merge_overlap(local, shifts), local, shifts
