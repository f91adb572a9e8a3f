import numpy as np
import pytest

from lcc.errors import ParameterError
from lcc.knn import KnnGraph, build_knn_graph, median_heuristic_beta, rbf_weight


def edge_set(g: KnnGraph):
    return set(zip(g.edge_i.tolist(), g.edge_j.tolist()))


def test_hand_example_three_points_on_line():
    Z = np.array([[0.0], [1.0], [3.0]])
    g = build_knn_graph(Z, k=1)
    assert edge_set(g) == {(0, 1), (1, 2)}
    weights = {(i, j): w for i, j, w in zip(g.edge_i, g.edge_j, g.edge_w)}
    assert weights[(0, 1)] == pytest.approx(np.exp(-1.0))
    assert weights[(1, 2)] == pytest.approx(np.exp(-4.0))


def test_k_equals_n_minus_1_is_complete(rng):
    Z = rng.standard_normal((7, 3))
    g = build_knn_graph(Z, k=6)
    assert g.n_edges == 7 * 6 // 2


def test_identical_points_unit_weight():
    Z = np.array([[2.0, 2.0], [2.0, 2.0], [9.0, 9.0]])
    g = build_knn_graph(Z, k=1)
    weights = {(i, j): w for i, j, w in zip(g.edge_i, g.edge_j, g.edge_w)}
    assert weights[(0, 1)] == 1.0


def test_rbf_weight_values():
    assert rbf_weight([1.0, 2.0], [1.0, 2.0]) == 1.0
    assert rbf_weight([0.0], [1.0]) == pytest.approx(0.3678794, abs=1e-6)
    assert rbf_weight([0.0], [1000.0]) == 0.0  # underflow


def test_underflowed_edges_dropped():
    Z = np.array([[0.0], [1.0], [10000.0]])
    g = build_knn_graph(Z, k=2)
    # node 2 is everyone's 2-NN but its weights underflow to zero
    assert edge_set(g) == {(0, 1)}
    assert g.degree_weights[2] == 0.0


def test_parameter_errors(rng):
    Z = rng.standard_normal((5, 2))
    with pytest.raises(ParameterError):
        build_knn_graph(Z, k=5)
    with pytest.raises(ParameterError):
        build_knn_graph(Z, k=0)
    with pytest.raises(ParameterError):
        build_knn_graph(Z, k=2, beta=-1.0)


def test_degree_and_total_weight_consistent(rng):
    Z = rng.standard_normal((40, 4))
    g = build_knn_graph(Z, k=5)
    assert g.total_weight == pytest.approx(g.degree_weights.sum() / 2, rel=1e-9)


def test_tree_matches_brute_on_random_instances():
    rng = np.random.default_rng(777)
    for trial in range(200):
        n = int(rng.integers(5, 201))
        d = int(rng.integers(1, 17))
        k = int(rng.integers(1, min(n - 1, 12) + 1))
        Z = rng.standard_normal((n, d))
        gb = build_knn_graph(Z, k, method="brute")
        gt = build_knn_graph(Z, k, method="tree")
        assert edge_set(gb) == edge_set(gt), "trial %d" % trial
        assert np.array_equal(gb.edge_w, gt.edge_w)


def test_tree_matches_brute_with_duplicates():
    Z = np.array([[0.0, 0.0]] * 4 + [[1.0, 0.0]] * 3 + [[5.0, 5.0]])
    for k in (1, 2, 3):
        gb = build_knn_graph(Z, k, method="brute")
        gt = build_knn_graph(Z, k, method="tree")
        assert edge_set(gb) == edge_set(gt)


def test_median_beta_mode(rng):
    Z = rng.standard_normal((50, 3)) * 100  # large scale would underflow at beta=1
    g = build_knn_graph(Z, k=3, beta="median")
    assert g.n_edges > 0
    assert median_heuristic_beta(Z) < 1.0


def test_min_degree_when_no_underflow(rng):
    Z = rng.standard_normal((30, 2))
    g = build_knn_graph(Z, k=3)
    deg = np.zeros(30, dtype=int)
    np.add.at(deg, g.edge_i, 1)
    np.add.at(deg, g.edge_j, 1)
    assert np.all(deg >= 1)
