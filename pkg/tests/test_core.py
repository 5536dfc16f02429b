import numpy as np
import pytest

from zsync.core import (
    AnchorSet,
    GroundTruth,
    Partition,
    SignedGraph,
    SyncSolution,
    align_global_sign,
    conjugate,
    error_rate,
    objective_value,
    sign_pm,
)
from zsync.errors import DimensionError, ParameterError


def test_sign_of_zero_is_plus_one():
    assert sign_pm([-0.5, 0.0, 2.0]).tolist() == [-1, 1, 1]


def test_graph_sorts_edges_and_symmetrizes():
    g = SignedGraph.from_edges(4, [(2, 1, -1.0), (0, 3, 0.5), (0, 1, 1.0)])
    assert g.rows.tolist() == [0, 0, 1]
    assert g.cols.tolist() == [1, 3, 2]
    z = g.to_dense()
    assert np.array_equal(z, z.T)
    assert z[1, 2] == -1.0 and z[3, 0] == 0.5
    assert np.all(np.diag(z) == 0)
    assert g.degrees.tolist() == [1.5, 2.0, 1.0, 0.5]


@pytest.mark.parametrize("edges", [
    [(0, 0, 1.0)],          # self-loop
    [(0, 1, 1.5)],          # out of range weight
    [(0, 1, 0.0)],          # zero weight
    [(0, 5, 1.0)],          # node out of range
    [(0, 1, 1.0), (1, 0, -1.0)],  # duplicate pair
])
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(ParameterError):
        SignedGraph.from_edges(3, edges)


def test_graph_arrays_are_read_only():
    g = SignedGraph.from_edges(3, [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        g.weights[0] = -1.0


def test_from_matrix_ignores_diagonal_and_rejects_asymmetry():
    m = np.array([[5.0, 1.0, 0.0], [1.0, 5.0, -1.0], [0.0, -1.0, 5.0]])
    g = SignedGraph.from_matrix(m)
    assert g.m == 2
    m[0, 1] = -1.0
    with pytest.raises(ParameterError):
        SignedGraph.from_matrix(m)


def test_components_and_subgraph():
    g = SignedGraph.from_edges(5, [(0, 1, 1.0), (1, 2, -1.0), (3, 4, 1.0)])
    count, labels = g.components()
    assert count == 2
    sub = g.subgraph([2, 1, 0])
    assert sub.n == 3 and sub.m == 2
    assert sub.to_dense()[0, 1] == -1.0


def test_conjugation_preserves_objective_of_conjugated_assignment():
    g = SignedGraph.from_edges(4, [(0, 1, 1.0), (1, 2, -1.0), (2, 3, 0.5), (0, 3, -0.25)])
    s = np.array([1, -1, -1, 1])
    x = np.array([1, 1, -1, -1])
    assert objective_value(conjugate(g, s), x) == pytest.approx(objective_value(g, s * x))


def test_objective_counts_both_halves():
    g = SignedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, -1.0)])
    assert objective_value(g, [1, 1, -1]) == 4.0
    with pytest.raises(ParameterError):
        objective_value(g, [1, 0, 1])


def test_partition_relabels_and_checks_blocks():
    p = Partition.from_labels(["b", "a", "b", "c"])
    assert p.block_of.tolist() == [0, 1, 0, 2]
    assert p.k == 3
    assert p.sizes.tolist() == [2, 1, 1]
    assert [b.tolist() for b in p.blocks] == [[0, 2], [1], [3]]
    with pytest.raises(ParameterError):
        Partition([0, 2, 2])
    assert Partition.singletons(4).k == 4


def test_intra_mask():
    g = SignedGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    p = Partition([0, 0, 1, 1])
    assert p.intra_mask(g).tolist() == [True, False, True]


def test_anchor_set_validation():
    a = AnchorSet.from_mapping({3: -1, 1: 1})
    assert a.nodes.tolist() == [1, 3]
    assert a.values.tolist() == [1, -1]
    assert a.h == len(a) == 2
    assert a.mask(5).tolist() == [False, True, False, True, False]
    assert a.negated().values.tolist() == [-1, 1]
    with pytest.raises(ParameterError):
        AnchorSet([0, 0], [1, 1])
    with pytest.raises(ParameterError):
        AnchorSet([0], [2])
    with pytest.raises(ParameterError):
        a.check(3)


def test_ground_truth_must_be_pm_one():
    with pytest.raises(ParameterError):
        GroundTruth([1, 0, -1])
    assert GroundTruth([1, -1]).flipped().z.tolist() == [-1, 1]


def test_solution_estimates_follow_scores():
    sol = SyncSolution.from_scores([0.3, -0.1, 0.0], "test")
    assert sol.estimates.tolist() == [1, -1, 1]
    with pytest.raises(ParameterError):
        SyncSolution([1, 1], [0.5, -0.5], "test")
    flipped = sol.flipped()
    assert flipped.estimates.tolist() == [-1, 1, -1]


def test_error_rate_is_gauge_invariant():
    truth = GroundTruth([1, 1, -1, -1, 1])
    est = np.array([-1, -1, 1, 1, 1])  # global flip with one mistake
    assert error_rate(est, truth) == pytest.approx(0.2)
    assert error_rate(-est, truth) == pytest.approx(0.2)
    assert error_rate(truth.z, truth.flipped()) == 0.0


def test_error_rate_ignore_mask():
    truth = GroundTruth([1, 1, -1, -1])
    est = np.array([1, -1, -1, -1])
    assert error_rate(est, truth) == pytest.approx(0.25)
    assert error_rate(est, truth, ignore=[False, True, False, False]) == 0.0
    with pytest.raises(DimensionError):
        error_rate(est, truth, ignore=[True])


def test_align_global_sign():
    truth = GroundTruth([1, -1, 1])
    sol = SyncSolution.from_scores([-1.0, 1.0, -1.0], "test")
    assert align_global_sign(sol, truth).estimates.tolist() == [1, -1, 1]
