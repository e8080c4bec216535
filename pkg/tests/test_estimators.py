"""MLE loss/solvers, existence detection, closed form, and the spectral method."""

import math

import numpy as np
import pytest

from btlrank import (ComparisonData, ComparisonGraph, GridSpec, MleProblem,
                     NonexistenceError, ScoreVector, SolverConfig,
                     closed_form_line, error_report, exact_comparisons,
                     generate_grid, generate_special, gradient, hessian, loss,
                     make_scores, mle_exists, oracle_laplacian,
                     partition_grid, sample_comparisons, sigmoid, solve_mle,
                     spectral_estimate, violating_partition)


def random_problem(rng, n=6, L=5):
    graph = generate_special("complete", n=n, L=L)
    scores = make_scores("sine", n, 2)
    data = sample_comparisons(graph, scores, rng)
    return MleProblem(graph, data), scores


def test_loss_single_edge_log2():
    graph = generate_special("line", n=2, L=1)
    data = ComparisonData(graph, wins=np.array([1]))
    problem = MleProblem(graph, data)
    assert loss(problem, np.zeros(2)) == pytest.approx(math.log(2.0), abs=1e-12)


def test_gradient_zero_at_interpolating_scores():
    graph = generate_special("line", n=4, L=10)
    theta = np.array([0.3, -0.1, 0.4, -0.6])
    data = exact_comparisons(graph, ScoreVector(theta, gauge="zero-sum"))
    problem = MleProblem(graph, data)
    assert np.linalg.norm(gradient(problem, theta)) <= 1e-12 * problem.total_samples


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(101)
    for _ in range(20):
        problem, _ = random_problem(rng, n=int(rng.integers(4, 11)))
        theta = rng.normal(size=problem.graph.n)
        g = gradient(problem, theta)
        h = 1e-6
        fd = np.zeros_like(theta)
        for k in range(len(theta)):
            e = np.zeros_like(theta)
            e[k] = h
            fd[k] = (loss(problem, theta + e) - loss(problem, theta - e)) / (2 * h)
        assert np.linalg.norm(fd - g) <= 1e-6 * max(np.linalg.norm(g), 1.0)


def test_gradient_orthogonal_to_ones():
    rng = np.random.default_rng(55)
    problem, _ = random_problem(rng, n=9)
    theta = rng.normal(size=9)
    g = gradient(problem, theta)
    assert abs(g.sum()) <= 1e-12 * max(np.abs(g).sum(), 1.0)


def test_hessian_at_truth_equals_oracle_laplacian():
    rng = np.random.default_rng(77)
    problem, scores = random_problem(rng, n=8, L=7)
    h = hessian(problem, scores.values).dense()
    oracle = oracle_laplacian(problem.graph, scores).dense()
    assert np.max(np.abs(h - oracle)) <= 1e-12


def test_loss_is_convex_along_segments():
    rng = np.random.default_rng(31)
    problem, _ = random_problem(rng, n=7)
    for _ in range(10):
        a = rng.normal(size=7)
        b = rng.normal(size=7)
        mid = 0.5 * (a + b)
        assert loss(problem, mid) <= \
            0.5 * loss(problem, a) + 0.5 * loss(problem, b) + 1e-12


def test_existence_star_center_loses_all():
    n = 6
    edge_i = np.zeros(n - 1, dtype=np.int64)
    edge_j = np.arange(1, n, dtype=np.int64)
    graph = ComparisonGraph(n, edge_i, edge_j, np.full(n - 1, 4))
    data = ComparisonData(graph, wins=np.zeros(n - 1, dtype=np.int64))
    problem = MleProblem(graph, data)
    assert not mle_exists(problem)
    bad = violating_partition(problem)
    # the center is exactly the set with no win over its complement
    assert bad.tolist() == [0]
    with pytest.raises(NonexistenceError):
        solve_mle(problem)


def test_existence_unanimous_cycle():
    # wins 0 -> 1 -> 2 -> 0 keep the win digraph strongly connected
    graph = generate_special("ring", n=3, L=5)
    wins = np.zeros(3, dtype=np.int64)
    for a, b, w in [(0, 1, 5), (1, 2, 5), (0, 2, 0)]:
        wins[graph.edge_index_map()[(a, b)]] = w
    problem = MleProblem(graph, ComparisonData(graph, wins))
    assert mle_exists(problem)
    scores, trace = solve_mle(problem)
    assert trace.converged
    with pytest.raises(ValueError):
        violating_partition(problem)


def test_closed_form_line_matches_solver():
    rng = np.random.default_rng(8)
    for n in (5, 12, 20):
        graph = generate_special("line", n=n, L=50)
        truth = make_scores("sine", n, 3)
        data = sample_comparisons(graph, truth, rng)
        if np.any(data.wins == 0) or np.any(data.wins == graph.counts):
            continue
        problem = MleProblem(graph, data)
        closed = closed_form_line(problem)
        solved, _ = solve_mle(problem, SolverConfig(grad_tol_factor=1e-13))
        assert error_report(solved, closed).linf <= 1e-8
        # the closed form interpolates the win fractions exactly
        assert np.linalg.norm(gradient(problem, closed.values)) <= \
            1e-10 * problem.total_samples


def test_closed_form_requires_interior_fractions():
    graph = generate_special("line", n=3, L=2)
    data = ComparisonData(graph, wins=np.array([2, 1]))
    with pytest.raises((NonexistenceError, ValueError)):
        closed_form_line(MleProblem(graph, data))


def test_solvers_agree_on_grid():
    spec = GridSpec(kind="grid1d", n=40, r=4, p=0.9)
    rng = np.random.default_rng(19)
    graph = generate_grid(spec, L=30, rng=rng)
    truth = make_scores("sine", 40, 4)
    data = sample_comparisons(graph, truth, rng)
    problem = MleProblem(graph, data)
    partition, _ = partition_grid(graph, spec, "overlapping")
    eta = 1.0 / (4 * 0.9 * 30)
    configs = {
        "gd": SolverConfig(method="gd", grad_tol_factor=1e-12),
        "cd": SolverConfig(method="cd", grad_tol_factor=1e-12),
        "precond_oracle": SolverConfig(method="precond_gd",
                                       preconditioner="oracle_Lz",
                                       oracle_scores=truth,
                                       grad_tol_factor=1e-12),
        "precond_lg": SolverConfig(method="precond_gd",
                                   preconditioner="quarter_LG",
                                   grad_tol_factor=1e-12),
        "pgd": SolverConfig(method="pgd", partition=partition, step_size=eta,
                            max_iter=20_000, grad_tol_factor=1e-12),
    }
    solutions = {}
    for name, config in configs.items():
        scores, trace = solve_mle(problem, config)
        assert trace.converged, name
        solutions[name] = scores
    names = list(solutions)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            gap = error_report(solutions[names[a]], solutions[names[b]]).max_pairwise
            assert gap <= 1e-5, (names[a], names[b], gap)


def test_trace_monotone_loss_and_csv(tmp_path):
    rng = np.random.default_rng(23)
    problem, truth = random_problem(rng, n=10, L=20)
    ref, _ = solve_mle(problem, SolverConfig(grad_tol_factor=1e-12))
    scores, trace = solve_mle(problem, SolverConfig(
        method="gd", reference=ref.values))
    losses = np.array(trace.losses)
    assert np.all(np.diff(losses) <= 1e-9 * max(abs(losses[0]), 1.0))
    assert trace.ref_linf[-1] <= trace.ref_linf[0] + 1e-12
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "iteration,loss,grad_norm,ref_linf"


def test_spectral_consistency_exact_data():
    # with analytic win fractions and a generous budget, theta -> theta*
    graph = generate_grid(GridSpec(kind="grid1d", n=50, r=5), L=1)
    truth = make_scores("sine", 50, 5)
    data = exact_comparisons(graph, truth)
    result = spectral_estimate(graph, data, max_iter=200_000, tol=1e-15)
    assert result.converged and not result.failed
    assert error_report(result.theta, truth).linf <= 1e-6


def test_spectral_budget_failure_is_flagged():
    graph = generate_grid(GridSpec(kind="grid1d", n=240, r=10), L=1)
    truth = make_scores("linear", 240, 10)
    data = exact_comparisons(graph, truth)
    result = spectral_estimate(graph, data)  # default budget
    assert result.failed and not result.converged
    assert np.all(np.isfinite(result.theta.values))


def test_spectral_matches_mle_scale_small():
    rng = np.random.default_rng(4)
    graph = generate_special("complete", n=12, L=200)
    truth = make_scores("sine", 12, 3)
    data = sample_comparisons(graph, truth, rng)
    spec_result = spectral_estimate(graph, data, max_iter=50_000)
    assert spec_result.converged
    mle_scores, _ = solve_mle(MleProblem(graph, data))
    e_spec = error_report(spec_result.theta, truth).linf
    e_mle = error_report(mle_scores, truth).linf
    assert e_spec <= 3.0 * e_mle + 0.05


def test_spectral_stationarity():
    rng = np.random.default_rng(9)
    graph = generate_special("complete", n=8, L=100)
    truth = make_scores("sine", 8, 2)
    data = sample_comparisons(graph, truth, rng)
    result = spectral_estimate(graph, data, max_iter=100_000, tol=1e-14)
    pi = result.pi
    assert pi.min() > 0
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    # verify pi P = pi against an explicitly assembled chain
    n = graph.n
    d = 1.0 + graph.degrees().max()
    # P_ij = y_ji / d: probability mass flows toward the winner
    P = np.zeros((n, n))
    for k, (i, j) in enumerate(zip(graph.edge_i, graph.edge_j)):
        P[i, j] = (1.0 - data.y[k]) / d
        P[j, i] = data.y[k] / d
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    assert np.linalg.norm(pi @ P - pi, 1) <= 1e-10


def test_solver_gauge_is_zero_sum():
    rng = np.random.default_rng(2)
    problem, _ = random_problem(rng, n=7, L=30)
    scores, _ = solve_mle(problem)
    assert abs(scores.values.sum()) <= 1e-9 * 7
