"""Statistical orderings of the solver families on reduced experiment sweeps.

All tests here are slow; run them with `pytest -m slow`.
"""

import numpy as np
import pytest

from zsync.experiments import ANCHORED_ALL, KSYNC_ALL, median_curves, run_experiment
from zsync.rmt import default_grids, heatmap_sweep

pytestmark = pytest.mark.slow

ETA_GRID = [0.0, 0.1, 0.2, 0.3, 0.4]


def _wide(df, key):
    return median_curves(df, [key, "method"]).pivot(index=key, columns="method", values="tau")


def test_noise_curve_falls_off_at_the_threshold():
    df = run_experiment("noise-curve").frame
    tau = median_curves(df, ["p"]).set_index("p")["tau"]
    assert tau[0.55] < 0.02
    assert tau[0.525] < 0.3
    assert tau[0.55] < tau[0.525] < tau[0.514]
    assert tau[0.514] > 0.2
    assert tau[0.5] > 0.4


def test_heatmap_splits_along_the_threshold_curve():
    alphas, etas = default_grids(5)
    norm = heatmap_sweep(200, alphas, etas, trials=20, normalized=True)
    raw = heatmap_sweep(200, alphas, etas, trials=20, normalized=False)
    p = 1 - norm["eta"]
    above = p >= norm["p_star"] + 0.05
    below = p <= 0.5 + 0.2 * (norm["p_star"] - 0.5)
    assert above.any() and below.any()
    assert (norm.loc[above, "tau_median"] < 0.25).all()
    assert (norm.loc[below, "tau_median"] > 0.4).all()
    # both variants see the same instances; only the gap scale differs
    assert np.abs(norm["tau_median"] - raw["tau_median"]).max() <= 0.05
    assert not np.allclose(norm["gap_median"], raw["gap_median"])


def test_mps_keeps_up_with_eig_under_a_regular_bad_subgraph():
    df = run_experiment("mps-regular", {"d_grid": [10, 50], "h_grid": [1]}).frame
    wide = _wide(df, "bad_degree")
    assert wide.loc[10, "eig"] < 0.05
    # at d = 50 half the edges are flipped and the eigenvector is at chance
    assert wide.loc[50, "eig"] > 0.4
    assert wide.loc[50, "mps"] <= wide.loc[50, "eig"] + 0.03


def test_mps_has_no_edge_under_a_random_bad_subgraph():
    df = run_experiment("mps-random", {"d_grid": [0, 10, 20, 30, 50], "h_grid": [1]}).frame
    wide = _wide(df, "bad_degree")
    assert ((wide["mps"] - wide["eig"]) >= -0.02).all()


@pytest.mark.parametrize("h", [30, 50])
def test_anchored_methods_agree_with_enough_anchors(h):
    df = run_experiment("anchors-fig", {"h_grid": [h], "eta_grid": ETA_GRID}).frame
    wide = _wide(df, "eta")
    low = wide[wide.index <= 0.35][ANCHORED_ALL]
    assert (low.max(axis=1) - low.min(axis=1)).max() <= 0.08


def test_equal_partition_benchmark_orderings():
    df = run_experiment("ksync-fig2", {"k_grid": [5, 100], "eta_grid": ETA_GRID}).frame
    curves = median_curves(df, ["k", "eta", "method"])
    small = curves[(curves["k"] == 5) & (curves["eta"] <= 0.3)]
    assert (small["tau"] < 0.05).all()
    large = curves[(curves["k"] == 100) & (curves["eta"] == 0.4)].set_index("method")["tau"]
    assert large["sdp-k"] <= large.min() + 0.02
    assert large["mps-k"] >= large.max() - 0.02


def test_congress_model_sdp_stays_near_the_best():
    df = run_experiment("ksync-fig1", {"eta_grid": ETA_GRID}).frame
    curves = median_curves(df, ["gamma", "eta", "method"])
    for _, group in curves.groupby("gamma"):
        wide = group.pivot(index="eta", columns="method", values="tau")
        assert (wide["sdp-k"] - wide[KSYNC_ALL].min(axis=1)).max() <= 0.02
