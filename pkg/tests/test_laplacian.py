"""Laplacian operator, pseudo-inverse solves, and effective resistances."""

import numpy as np
import pytest

from btlrank import LaplacianError, LaplacianOperator, assemble


def dense_resistance(op: LaplacianOperator, k: int, l: int) -> float:
    pinv = np.linalg.pinv(op.dense())
    e = np.zeros(op.n)
    e[k], e[l] = 1.0, -1.0
    return float(e @ pinv @ e)


def random_operator(rng, n=8):
    i, j = np.triu_indices(n, k=1)
    keep = rng.random(len(i)) < 0.5
    i, j = i[keep], j[keep]
    # splice in a spanning path so the graph stays connected
    pi = np.arange(n - 1)
    ei = np.concatenate([i, pi])
    ej = np.concatenate([j, pi + 1])
    w = rng.uniform(0.2, 3.0, size=len(ei))
    return assemble(n, zip(ei.tolist(), ej.tolist(), w.tolist()))


def test_series_law():
    # resistances 1, 2, 3 in series: conductances 1, 1/2, 1/3
    op = assemble(4, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.0 / 3.0)])
    assert op.effective_resistance(0, 3) == pytest.approx(6.0, abs=1e-10)


def test_parallel_law():
    op = assemble(2, [(0, 1, 1.0 + 3.0)])  # parallel conductances merge
    assert op.effective_resistance(0, 1) == pytest.approx(0.25, abs=1e-12)


def test_parallel_edges_merge_at_assembly():
    op = assemble(2, [(0, 1, 1.0), (0, 1, 3.0)])
    assert op.effective_resistance(0, 1) == pytest.approx(0.25, abs=1e-12)


def test_matches_dense_pinv_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        op = random_operator(rng)
        k, l = rng.choice(op.n, size=2, replace=False)
        got = op.effective_resistance(int(k), int(l), tol=1e-12)
        assert got == pytest.approx(dense_resistance(op, int(k), int(l)), rel=1e-8)


def test_triangle_inequality():
    rng = np.random.default_rng(13)
    for _ in range(30):
        op = random_operator(rng)
        a, b, c = rng.choice(op.n, size=3, replace=False)
        oab = op.effective_resistance(int(a), int(b))
        obc = op.effective_resistance(int(b), int(c))
        oac = op.effective_resistance(int(a), int(c))
        assert oac <= oab + obc + 1e-10


def test_rayleigh_monotonicity():
    rng = np.random.default_rng(29)
    for _ in range(10):
        n = 8
        i, j = np.triu_indices(n, k=1)
        w = rng.uniform(0.5, 2.0, size=len(i))
        op = assemble(n, zip(i.tolist(), j.tolist(), w.tolist()))
        drop = rng.integers(len(i))
        w2 = w.copy()
        w2[drop] *= 0.3  # decrease one edge weight
        op2 = assemble(n, zip(i.tolist(), j.tolist(), w2.tolist()))
        for k in range(n):
            for l in range(k + 1, n):
                assert op2.effective_resistance(k, l) >= \
                    op.effective_resistance(k, l) - 1e-9


def test_solve_orthogonal_output():
    rng = np.random.default_rng(3)
    op = random_operator(rng, n=12)
    b = rng.normal(size=12)
    b -= b.mean()
    x, report = op.solve_orthogonal(b, tol=1e-12)
    assert report.converged
    assert abs(x.sum()) <= 1e-12 * max(np.linalg.norm(x), 1.0) * 12
    assert np.linalg.norm(op.matvec(x) - b) <= 1e-8 * np.linalg.norm(b)


def test_iterative_path_matches_dense_path():
    # n above the dense threshold exercises the conjugate-gradient branch
    rng = np.random.default_rng(17)
    n = 250
    pi = np.arange(n - 1)
    extra_i = rng.integers(0, n, size=300)
    extra_j = rng.integers(0, n, size=300)
    ok = extra_i != extra_j
    ei = np.concatenate([pi, np.minimum(extra_i[ok], extra_j[ok])])
    ej = np.concatenate([pi + 1, np.maximum(extra_i[ok], extra_j[ok])])
    w = rng.uniform(0.5, 2.0, size=len(ei))
    op = assemble(n, zip(ei.tolist(), ej.tolist(), w.tolist()))
    pinv = np.linalg.pinv(op.dense())
    for k, l in [(0, n - 1), (3, 77), (120, 121)]:
        e = np.zeros(n)
        e[k], e[l] = 1.0, -1.0
        want = float(e @ pinv @ e)
        assert op.effective_resistance(k, l, tol=1e-12) == \
            pytest.approx(want, rel=1e-8)


def test_resistance_matrix_symmetric_pairs():
    op = assemble(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (0, 3, 0.5)])
    table = op.resistance_matrix()
    assert len(table) == 6
    assert table[(0, 1)] == pytest.approx(dense_resistance(op, 0, 1), rel=1e-9)
    sub = op.resistance_matrix(pairs=[(2, 0)])
    assert set(sub) == {(0, 2)}


def test_disconnected_solve_rejected():
    op = assemble(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert not op.connected
    with pytest.raises(LaplacianError):
        op.effective_resistance(0, 3)


def test_invalid_weights_rejected():
    with pytest.raises(LaplacianError):
        assemble(2, [(0, 1, -1.0)])
    with pytest.raises(LaplacianError):
        assemble(2, [(0, 0, 1.0)])
