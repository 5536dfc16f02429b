"""Shared oracles and instances."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from zsync.core import AnchorSet, GroundTruth, Partition, SignedGraph, objective_value
from zsync.generators import NoiseSpec, erdos_renyi_instance, make_rng
from zsync.multiplex import MultiplexVoting


# ── brute force ────────────────────────────────────────────


def all_sign_vectors(n: int) -> np.ndarray:
    """Every x in {-1,+1}^n with x_0 = +1 (the other half is the global flip)."""
    if n == 1:
        return np.ones((1, 1), dtype=np.int64)
    tails = np.array(list(itertools.product((1, -1), repeat=n - 1)), dtype=np.int64)
    return np.hstack([np.ones((len(tails), 1), dtype=np.int64), tails])


def _objectives(g: SignedGraph, X: np.ndarray) -> np.ndarray:
    return 2.0 * np.sum(g.weights * X[:, g.rows] * X[:, g.cols], axis=1)


def brute_force_max(g: SignedGraph) -> float:
    return float(_objectives(g, all_sign_vectors(g.n)).max())


def brute_force_anchored_max(g: SignedGraph, anchors: AnchorSet) -> float:
    sensors = np.flatnonzero(~anchors.mask(g.n))
    X = np.zeros((2 ** len(sensors), g.n), dtype=np.int64)
    X[:, sensors] = np.array(list(itertools.product((1, -1), repeat=len(sensors))), dtype=np.int64)
    X[:, anchors.nodes] = anchors.values
    return float(_objectives(g, X).max())


def brute_force_ksync_max(g: SignedGraph, partition: Partition) -> float:
    blocks = all_sign_vectors(partition.k)
    return float(_objectives(g, blocks[:, partition.block_of]).max())


# ── instances ──────────────────────────────────────────────


def planted(n: int, alpha: float = 1.0, eta: float = 0.0, seed: int = 0):
    return erdos_renyi_instance(n, NoiseSpec(alpha, eta), rng=make_rng(seed))


def small_random(n: int, seed: int, density: float = 0.6):
    """Dense-ish random signed graph with fractional weights."""
    rng = make_rng(seed, 99)
    i, j = np.triu_indices(n, k=1)
    keep = rng.random(len(i)) < density
    w = rng.uniform(0.1, 1.0, keep.sum()) * np.where(rng.random(keep.sum()) < 0.5, -1, 1)
    return SignedGraph(n, i[keep], j[keep], w)


@pytest.fixture
def k4_one_flip():
    """K4 consistent with z = (1, -1, 1, 1) except edge (0, 2) flipped."""
    z = np.array([1, -1, 1, 1])
    edges = []
    for i, j in itertools.combinations(range(4), 2):
        w = z[i] * z[j] * (-1 if (i, j) == (0, 2) else 1)
        edges.append((i, j, float(w)))
    return SignedGraph.from_edges(4, edges), GroundTruth(z)


@pytest.fixture
def clean_graph():
    return planted(30, alpha=1.0, eta=0.0, seed=3)


# ── multiplex fixtures ─────────────────────────────────────

TOY_LAYERS = [
    [0, 1, 2, 3, 6, 7, 8, 9],
    [2, 3, 4, 5, 8, 9, 10, 11],
    [0, 1, 4, 5, 6, 7, 10, 11],
]
TOY_DISAGREEMENTS = {0: ((0, 1), 0.4), 1: ((3, 9), 0.7), 2: ((4, 5), 0.5)}


def _party(entity: int) -> str:
    return "D" if entity < 6 else "R"


def toy_layers(traitor: bool = False):
    layers, labels = [], []
    for t, members in enumerate(TOY_LAYERS):
        w = np.empty((len(members), len(members)))
        for a, ea in enumerate(members):
            for b, eb in enumerate(members):
                w[a, b] = 1.0 if a == b else (0.8 if _party(ea) == _party(eb) else 0.2)
        (e1, e2), value = TOY_DISAGREEMENTS[t]
        a, b = members.index(e1), members.index(e2)
        w[a, b] = w[b, a] = value
        if traitor and t == 2:
            a = members.index(4)
            for b, eb in enumerate(members):
                if eb != 4:
                    w[a, b] = w[b, a] = 0.2 if _party(eb) == "D" else 0.8
        layers.append(w)
        labels.append([_party(e) for e in members])
    return layers, [np.array(m) for m in TOY_LAYERS], labels


@pytest.fixture
def toy_multiplex():
    """3 layers, 12 entities (e0-e5 D, e6-e11 R), each entity in two layers.

    Planted disagreements: layer 0 (e0, e1) = 0.4, layer 1 (e3, e9) = 0.7,
    layer 2 (e4, e5) = 0.5 (dropped by the sign transform).
    """
    layers, identity, labels = toy_layers()
    return MultiplexVoting(layers, identity, 1.0, labels)


@pytest.fixture
def traitor_multiplex():
    """The toy multiplex with e4 voting with R throughout layer 2."""
    layers, identity, labels = toy_layers(traitor=True)
    return MultiplexVoting(layers, identity, 1.0, labels)
