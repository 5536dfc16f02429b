import numpy as np
import pytest

from zsync.core import GroundTruth
from zsync.errors import ParameterError
from zsync.generators import (
    CongressModelSpec,
    NoiseSpec,
    complete_with_random_bad,
    complete_with_regular_bad,
    congress_model_I,
    equal_partition_benchmark_II,
    erdos_renyi_instance,
    make_rng,
    persistence_ids,
    preferential_attachment_instance,
    random_anchors,
    synthetic_voting,
)


def _bad_mask(g, truth):
    return g.weights != truth.z[g.rows] * truth.z[g.cols]


def test_make_rng_streams_are_reproducible_and_independent():
    a = make_rng(7, 1, 2).random(5)
    assert np.array_equal(a, make_rng(7, 1, 2).random(5))
    assert not np.array_equal(a, make_rng(7, 1, 3).random(5))
    with pytest.raises(ParameterError):
        make_rng(-1)


@pytest.mark.parametrize("alpha,eta", [(0.0, 0.1), (1.5, 0.1), (0.5, -0.1), (0.5, 1.2)])
def test_noise_spec_ranges(alpha, eta):
    with pytest.raises(ParameterError):
        NoiseSpec(alpha, eta)


def test_complete_noiseless_instance():
    g, truth = erdos_renyi_instance(20, NoiseSpec(1.0, 0.0), rng=make_rng(0))
    assert g.m == 20 * 19 // 2
    assert not _bad_mask(g, truth).any()


def test_erdos_renyi_is_deterministic_and_keeps_given_truth():
    truth = GroundTruth(np.ones(30, dtype=int))
    g1, t1 = erdos_renyi_instance(30, NoiseSpec(0.3, 0.2), truth, make_rng(5))
    g2, _ = erdos_renyi_instance(30, NoiseSpec(0.3, 0.2), truth, make_rng(5))
    assert t1 is truth
    assert np.array_equal(g1.weights, g2.weights)
    assert np.array_equal(g1.rows, g2.rows)
    with pytest.raises(ParameterError):
        erdos_renyi_instance(1, NoiseSpec())


def test_full_flip_negates_every_edge():
    g, truth = erdos_renyi_instance(10, NoiseSpec(1.0, 1.0), rng=make_rng(1))
    assert _bad_mask(g, truth).all()


@pytest.mark.parametrize("n,d", [(20, 4), (20, 15), (21, 3), (30, 0), (12, 11)])
def test_regular_bad_subgraph_degrees(n, d):
    g, truth = complete_with_regular_bad(n, d, seed=2)
    assert g.m == n * (n - 1) // 2
    bad = _bad_mask(g, truth)
    degree = np.bincount(g.rows[bad], minlength=n) + np.bincount(g.cols[bad], minlength=n)
    if (n * d) % 2 == 0:
        assert (degree == d).all()
    else:
        assert degree.max() == d
        assert degree.min() >= d - 1


def test_random_bad_subgraph_mean_degree():
    g, truth = complete_with_random_bad(100, 30, seed=4)
    bad = int(_bad_mask(g, truth).sum())
    assert 2 * bad / 100 == pytest.approx(30, rel=0.15)
    with pytest.raises(ParameterError):
        complete_with_random_bad(10, 12)


def test_preferential_attachment_is_heavy_tailed():
    g, truth = preferential_attachment_instance(500, 10, seed=0)
    counts = np.bincount(g.rows, minlength=500) + np.bincount(g.cols, minlength=500)
    assert counts.max() > 3 * counts.mean()
    assert counts.min() >= 10
    assert not _bad_mask(g, truth).any()


@pytest.mark.parametrize("n,m_pa", [(10, 10), (10, 15), (10, 0)])
def test_preferential_attachment_rejects_bad_attachment_count(n, m_pa):
    with pytest.raises(ParameterError, match="m_pa"):
        preferential_attachment_instance(n, m_pa)


def test_persistence_ids():
    ids = persistence_ids(5, 8, 1.0, make_rng(0))
    assert (ids == np.arange(8)).all()
    ids = persistence_ids(5, 8, 0.0, make_rng(0))
    assert len(np.unique(ids)) == 40


def test_congress_model_structure():
    g, truth, part = congress_model_I(CongressModelSpec())
    assert g.n == 200
    # k = S + fresh seats across the later layers; about 65 for the defaults
    assert 40 <= part.k <= 90
    # coupling edges are +1 and never flipped
    cross_layer = g.rows // 20 != g.cols // 20
    assert (g.weights[cross_layer] == 1).all()
    assert cross_layer.any()
    for block in part.blocks:
        assert len(np.unique(truth.z[block])) == 1


def test_congress_model_full_persistence_has_S_entities():
    _, _, part = congress_model_I(CongressModelSpec(C=4, S=6, gamma=1.0))
    assert part.k == 6
    assert part.sizes.tolist() == [4] * 6


def test_equal_partition_benchmark():
    g, truth, part = equal_partition_benchmark_II(40, 8, 0.3, 0.0, seed=1)
    assert part.k == 8 and (part.sizes == 5).all()
    intra = part.intra_mask(g)
    assert intra.sum() == 8 * 10
    assert (g.weights[intra] == 1).all()
    assert not _bad_mask(g, truth).any()
    with pytest.raises(ParameterError):
        equal_partition_benchmark_II(40, 7, 0.3, 0.0)


def test_random_anchors_carry_truth():
    truth = GroundTruth(np.where(np.arange(20) % 3, 1, -1))
    anchors = random_anchors(truth, 6, make_rng(3))
    assert anchors.h == 6
    assert np.array_equal(anchors.values, truth.z[anchors.nodes])
    with pytest.raises(ParameterError):
        random_anchors(truth, 21, make_rng(3))


def test_synthetic_voting_layers():
    m = synthetic_voting(C=3, S=10, bills=50, seed=2)
    assert m.C == 3
    assert m.layer_sizes == [10, 10, 10]
    for w in m.layers:
        assert np.allclose(w, w.T)
        assert np.all((w >= 0) & (w <= 1))
        assert np.allclose(np.diag(w), 1.0)


def test_congress_model_without_persistence_has_singleton_blocks():
    g, _, part = congress_model_I(CongressModelSpec(C=3, S=5, gamma=0.0))
    assert part.k == g.n == 15
    cross_layer = g.rows // 5 != g.cols // 5
    assert not cross_layer.any()
