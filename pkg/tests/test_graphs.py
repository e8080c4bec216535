"""Grid generators, special topologies, partitions, and super-graphs."""

import numpy as np
import pytest

from btlrank import (ComparisonGraph, GraphError, GridSpec, Partition,
                     cross_edge_supergraph, generate_grid, generate_special,
                     overlap_supergraph, partition_grid)


def test_grid1d_dense_edge_count():
    graph = generate_grid(GridSpec(kind="grid1d", n=100, r=5), L=1)
    # sum_{d=1..5} (100 - d) = 485
    assert graph.num_edges == 485
    assert graph.connected
    assert np.all(graph.counts == 1)


def test_grid2d_lattice_edge_count():
    graph = generate_grid(GridSpec(kind="grid2d", n=25, r=1), L=1)
    # the 5x5 lattice: 2 * 5 * 4 edges
    assert graph.num_edges == 40
    assert graph.connected


def test_grid2d_manhattan_radius():
    graph = generate_grid(GridSpec(kind="grid2d", n=25, r=2), L=1)
    side = 5
    pairs = set(zip(graph.edge_i.tolist(), graph.edge_j.tolist()))
    for (a, b) in pairs:
        d = abs(a // side - b // side) + abs(a % side - b % side)
        assert 1 <= d <= 2
    # node (2,2) has a full Manhattan ball of 12 neighbors
    center = 2 * side + 2
    assert len(graph.neighbors()[center]) == 12


def test_grid_probability_thins_edges():
    spec = GridSpec(kind="grid1d", n=200, r=4, p=0.5)
    graph = generate_grid(spec, L=3, rng=np.random.default_rng(0))
    dense = generate_grid(GridSpec(kind="grid1d", n=200, r=4), L=3)
    assert 0.35 * dense.num_edges <= graph.num_edges <= 0.65 * dense.num_edges
    assert np.all(graph.counts == 3)
    with pytest.raises(GraphError):
        generate_grid(spec)  # p < 1 without an rng


def test_grid_spec_validation():
    with pytest.raises(GraphError):
        GridSpec(kind="grid2d", n=10, r=1)
    with pytest.raises(GraphError):
        GridSpec(kind="grid1d", n=10, r=0)
    with pytest.raises(GraphError):
        GridSpec(kind="grid1d", n=10, r=1, p=0.0)
    with pytest.raises(GraphError):
        GridSpec(kind="hex", n=10, r=1)


def test_special_graph_shapes():
    assert generate_special("line", n=6).num_edges == 5
    assert generate_special("ring", n=6).num_edges == 6
    assert generate_special("complete", n=6).num_edges == 15
    tree = generate_special("tree", n=20, rng=np.random.default_rng(4))
    assert tree.num_edges == 19 and tree.connected
    barbell = generate_special("barbell", clique1=4, clique2=5, L=2, L_st=1)
    assert barbell.num_edges == 6 + 10 + 1
    assert barbell.connected
    bridge = barbell.edge_index_map()[(3, 4)]
    assert barbell.counts[bridge] == 1


def test_er_connectivity_flag():
    rng = np.random.default_rng(0)
    sparse = generate_special("er", rng=rng, n=40, p=0.02)
    assert not sparse.connected
    dense = generate_special("er", rng=rng, n=40, p=0.5)
    assert dense.connected


def test_graph_csv_roundtrip(tmp_path):
    graph = generate_grid(GridSpec(kind="grid1d", n=30, r=3, p=0.7), L=5,
                          rng=np.random.default_rng(1))
    path = tmp_path / "g.csv"
    graph.to_csv(path)
    back = ComparisonGraph.from_csv(path)
    assert back.n == graph.n
    assert np.array_equal(back.edge_i, graph.edge_i)
    assert np.array_equal(back.edge_j, graph.edge_j)
    assert np.array_equal(back.counts, graph.counts)


def test_partition_grid1d_overlapping():
    spec = GridSpec(kind="grid1d", n=64, r=8)
    graph = generate_grid(spec, L=1)
    part, sup = partition_grid(graph, spec, "overlapping")
    # windows of width 2r with stride r: starts 0, 8, 16, ..., 48
    assert part.m == 7
    assert np.array_equal(part.subsets[0], np.arange(16))
    assert np.array_equal(part.subsets[1], np.arange(8, 24))
    # every node is covered; adjacent windows overlap in r nodes
    assert np.all(part.membership_counts() >= 1)
    overlap = np.intersect1d(part.subsets[0], part.subsets[1])
    assert len(overlap) == 8
    # the super-graph of an overlapping 1D partition is a path
    assert sup.m == 7
    assert sup.connected
    deg = np.zeros(sup.m, dtype=int)
    for a, b in zip(sup.super_i, sup.super_j):
        deg[a] += 1
        deg[b] += 1
    assert sorted(deg.tolist()) == [1, 1, 2, 2, 2, 2, 2]


def test_partition_grid1d_tail_absorbed():
    spec = GridSpec(kind="grid1d", n=70, r=8)
    graph = generate_grid(spec, L=1)
    part, _ = partition_grid(graph, spec, "overlapping")
    covered = np.zeros(70, dtype=bool)
    for subset in part.subsets:
        covered[subset] = True
    assert covered.all()
    assert part.subsets[-1][-1] == 69


def test_partition_grid1d_disjoint():
    spec = GridSpec(kind="grid1d", n=64, r=8)
    graph = generate_grid(spec, L=1)
    part, sup = partition_grid(graph, spec, "disjoint")
    assert np.all(part.membership_counts() == 1)
    assert sup.connected


def test_partition_grid2d_overlapping_lattice():
    spec = GridSpec(kind="grid2d", n=144, r=3)
    graph = generate_grid(spec, L=1)
    part, sup = partition_grid(graph, spec, "overlapping")
    # 2r x 2r blocks with stride r over a 12 x 12 board: 3 x 3 windows
    assert part.m == 9
    assert np.all(part.membership_counts() >= 1)
    assert sup.connected


def test_partition_validation_and_roundtrip(tmp_path):
    subsets = [np.array([0, 1, 2]), np.array([2, 3, 4])]
    part = Partition(subsets=subsets, mode="overlapping", n=5)
    path = tmp_path / "p.json"
    part.to_json(path)
    back = Partition.from_json(path, n=5, mode="overlapping")
    assert back.m == 2
    assert np.array_equal(back.subsets[1], subsets[1])
    with pytest.raises(GraphError):
        Partition(subsets=subsets, mode="disjoint", n=5)  # node 2 repeats
    with pytest.raises(GraphError):
        Partition(subsets=subsets, mode="overlapping", n=6)  # node 5 uncovered


def test_overlap_supergraph_weights():
    part = Partition(subsets=[np.array([0, 1, 2]), np.array([2, 3, 4]),
                              np.array([3, 4, 5, 6])],
                     mode="overlapping", n=7)
    sup = overlap_supergraph(part)
    shared = {(a, b): set(p.tolist()) for a, b, p in
              zip(sup.super_i.tolist(), sup.super_j.tolist(), sup.payloads)}
    assert shared[(0, 1)] == {2}
    assert shared[(1, 2)] == {3, 4}
    assert (0, 2) not in shared


def test_cross_edge_supergraph_counts():
    graph = generate_special("line", n=6)
    part = Partition(subsets=[np.array([0, 1, 2]), np.array([3, 4, 5])],
                     mode="disjoint", n=6)
    sup = cross_edge_supergraph(part, graph)
    assert sup.m == 2
    assert len(sup.super_i) == 1
    # single cross edge (2, 3); the payload holds its edge index
    cross = sup.payloads[0]
    assert len(cross) == 1
    assert graph.edge_i[cross[0]] == 2 and graph.edge_j[cross[0]] == 3


def test_graph_requires_canonical_edges():
    with pytest.raises(GraphError):
        ComparisonGraph(3, np.array([1]), np.array([1]), np.array([1]))
    with pytest.raises(GraphError):
        ComparisonGraph(3, np.array([0, 0]), np.array([1, 1]), np.array([1, 1]))
