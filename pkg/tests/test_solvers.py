import numpy as np
import pytest

from zsync.core import AnchorSet, Partition, error_rate
from zsync.errors import ParameterError
from zsync.mps import MpsOptions
from zsync.solvers import (
    ANCHORED_METHODS,
    METHODS,
    PLAIN_METHODS,
    SolveOptions,
    needs_anchors,
    needs_partition,
    solve,
)


def test_method_registry():
    assert len(METHODS) == len(set(METHODS)) == 14
    assert needs_anchors("qcqp-d") and not needs_anchors("mps")
    assert needs_partition("part-k") and not needs_partition("sdp")


@pytest.mark.parametrize("method", PLAIN_METHODS)
def test_plain_methods_on_clean_graph(method, clean_graph):
    g, truth = clean_graph
    sol = solve(method, g, options=SolveOptions(mps_max_iter=1000))
    assert error_rate(sol, truth) == 0.0


@pytest.mark.parametrize("method", ANCHORED_METHODS)
def test_anchored_methods_on_clean_graph(method, clean_graph):
    g, truth = clean_graph
    anchors = AnchorSet([0, 11], truth.z[[0, 11]])
    sol = solve(method, g, anchors=anchors)
    assert sol.method == method
    assert np.array_equal(sol.estimates, truth.z)


def test_missing_side_inputs(clean_graph):
    g, _ = clean_graph
    with pytest.raises(ParameterError, match="needs anchors"):
        solve("sdp-xy", g)
    with pytest.raises(ParameterError, match="needs a partition"):
        solve("sdp-k", g)
    with pytest.raises(ParameterError, match="unknown method"):
        solve("gradient", g)


def test_partition_methods_dispatch(clean_graph):
    g, _ = clean_graph
    part = Partition(np.arange(30) // 3)
    sol = solve("part-k", g, partition=part, options=SolveOptions(signed_only=True))
    assert sol.method == "part-k"
    assert sol.diagnostics["k"] == 10
    assert np.all(sol.estimates.reshape(10, 3) == sol.estimates.reshape(10, 3)[:, :1])


def test_default_options_follow_mps_defaults():
    assert SolveOptions().mps() == MpsOptions()
