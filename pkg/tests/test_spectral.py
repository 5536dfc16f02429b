import numpy as np
import pytest

from conftest import planted
from zsync import settings
from zsync.core import SignedGraph, conjugate, error_rate
from zsync.errors import DegenerateDegreeError, ParameterError, SizeLimitError
from zsync.spectral import (
    canonical_sign,
    eig_sync,
    laplacian_sync,
    normalize,
    spectrum,
    top_eigenpairs,
    top_eigenvector,
)


def test_noiseless_complete_graph_is_recovered(clean_graph):
    g, truth = clean_graph
    sol = eig_sync(g)
    assert error_rate(sol, truth) == 0.0
    assert sol.method == "eig"
    assert sol.diagnostics["lambda_1"] == pytest.approx(1.0)
    assert sol.diagnostics["lambda_2"] == pytest.approx(-1 / 29)
    assert sol.diagnostics["components"] == 1
    assert sol.diagnostics["residual_ok"] is True
    assert np.linalg.norm(sol.scores) == pytest.approx(1.0)


def test_raw_and_laplacian_variants(clean_graph):
    g, truth = clean_graph
    raw = eig_sync(g, normalized=False)
    assert raw.method == "eig-raw"
    assert raw.diagnostics["lambda_1"] == pytest.approx(29.0)
    lap = laplacian_sync(g)
    assert error_rate(lap, truth) == 0.0
    assert lap.diagnostics["lambda_min"] == pytest.approx(0.0, abs=1e-8)
    assert np.sum(lap.scores**2) == pytest.approx(30.0)


def test_single_inconsistent_edge(k4_one_flip):
    g, truth = k4_one_flip
    for sol in (eig_sync(g), eig_sync(g, normalized=False), laplacian_sync(g)):
        assert error_rate(sol, truth) == 0.0


def test_noisy_instance_is_mostly_recovered():
    g, truth = planted(200, alpha=0.5, eta=0.2, seed=1)
    assert error_rate(eig_sync(g), truth) < 0.1


def test_lanczos_agrees_with_dense():
    g, _ = planted(80, alpha=0.4, eta=0.1, seed=2)
    dense = top_eigenpairs(g.adjacency, 3, solver="dense")
    lanczos = top_eigenpairs(g.adjacency, 3, solver="lanczos")
    assert np.allclose(dense.values, lanczos.values, atol=1e-7)
    assert np.allclose(dense.vectors[:, 0], lanczos.vectors[:, 0], atol=1e-6)
    assert dense.iterations == 0 and lanczos.iterations > 0


def test_smallest_eigenpairs_are_ascending():
    m = np.diag([3.0, -2.0, 1.0, 0.5])
    pairs = top_eigenpairs(m, 2, which="SA")
    assert pairs.values.tolist() == [-2.0, 0.5]
    with pytest.raises(ParameterError):
        top_eigenpairs(m, 1, which="LM")
    with pytest.raises(ParameterError):
        top_eigenpairs(m, 1, solver="qr")


def test_canonical_sign():
    assert canonical_sign(np.array([0.1, -0.9, 0.2])).tolist() == [-0.1, 0.9, -0.2]


def test_isolated_node_breaks_normalization():
    g = SignedGraph.from_edges(3, [(0, 1, 1.0)])
    with pytest.raises(DegenerateDegreeError) as err:
        normalize(g)
    assert err.value.node == 2
    assert err.value.exit_code == 2


def test_components_are_solved_separately():
    a, _ = planted(6, seed=1)
    edges = list(a.edges()) + [(i + 6, j + 6, w) for i, j, w in a.edges()]
    g = SignedGraph.from_edges(13, edges)
    sol = eig_sync(g)
    assert sol.diagnostics["components"] == 3
    assert sol.scores[12] == 0.0
    for block in (np.arange(6), np.arange(6, 12)):
        sub = g.subgraph(block)
        x = sol.estimates[block]
        assert np.all(sub.weights == x[sub.rows] * x[sub.cols])


def test_normalized_operator_matches_dense(clean_graph):
    g, _ = clean_graph
    op = normalize(g)
    v = np.arange(g.n, dtype=float)
    assert np.allclose(op.matvec(v), op.to_dense() @ v)


def test_spectrum_energy_and_histogram(clean_graph):
    g, _ = clean_graph
    report = spectrum(g, r=3, histogram_bins=10)
    assert report.eigenvalues[0] == pytest.approx(29.0)
    assert report.energy[0] == pytest.approx(29 / 30)
    assert report.gap_12 == pytest.approx(30.0)
    assert report.histogram_frame()["count"].sum() == 30
    assert list(report.to_frame().columns) == ["rank", "eigenvalue", "energy"]


def test_histogram_size_limit(clean_graph, monkeypatch):
    g, _ = clean_graph
    monkeypatch.setattr(settings, "HISTOGRAM_MAX_N", 10)
    with pytest.raises(SizeLimitError):
        spectrum(g, histogram_bins=5)
    spectrum(g, r=2)


def test_top_eigenvector_is_unit(clean_graph):
    g, truth = clean_graph
    lam, v = top_eigenvector(g, normalized=True)
    assert lam == pytest.approx(1.0)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert abs(np.dot(np.sign(v), truth.z)) == g.n


def test_inaccurate_dense_pairs_are_flagged(caplog):
    lopsided = np.array([[0.0, 1.0], [0.0, 0.0]])
    with caplog.at_level("WARNING", logger="zsync.spectral"):
        pairs = top_eigenpairs(lopsided, 2, solver="dense")
    assert not pairs.accurate
    assert pairs.residual > 0.5
    assert "eigen residual" in caplog.text
    assert top_eigenpairs(lopsided + lopsided.T, 2, solver="dense").accurate


@pytest.mark.parametrize("solve", [eig_sync, laplacian_sync])
def test_gauge_transform_carries_through(solve):
    g, _ = planted(60, alpha=0.5, eta=0.15, seed=4)
    s = np.where(np.random.default_rng(5).random(g.n) < 0.5, -1, 1)
    base = solve(g)
    moved = solve(conjugate(g, s))
    assert error_rate(moved, s * base.estimates) == 0.0
