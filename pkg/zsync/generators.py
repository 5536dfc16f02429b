"""Seeded random instance generators for the graph and noise models used in
the experiments.

Randomness: every instance draws from its own PCG64 stream derived from
SeedSequence(seed, spawn_key=instance key), so a sweep can hand out
(cell, trial) keys to worker processes and still reproduce bit-identically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from zsync.core import AnchorSet, GroundTruth, Partition, SignedGraph
from zsync.errors import ParameterError

log = logging.getLogger(__name__)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream for (seed, key...)."""
    if int(seed) < 0 or any(int(k) < 0 for k in key):
        raise ParameterError("seeds and stream keys must be non-negative integers")
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def _child_seed(rng: np.random.Generator) -> int:
    """Integer seed for libraries that want their own (networkx)."""
    return int(rng.integers(2**31 - 1))


def _random_signs(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.where(rng.random(n) < 0.5, -1, 1)


def _measure(z, rows, cols, flip) -> np.ndarray:
    """Observed products z_i z_j, negated where flipped."""
    return z[rows] * z[cols] * np.where(flip, -1, 1)


# ── specs ──────────────────────────────────────────────────


@dataclass(frozen=True)
class NoiseSpec:
    """Edge probability alpha and flip probability eta = 1 - p."""

    alpha: float = 1.0
    eta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 <= self.eta <= 1:
            raise ParameterError(f"eta must lie in [0, 1], got {self.eta}")


@dataclass(frozen=True)
class CongressModelSpec:
    C: int = 10
    S: int = 20
    gamma: float = 0.75
    alpha: float = 0.5
    eta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.C < 1 or self.S < 1:
            raise ParameterError("need at least one congress and one senator")
        if not 0 <= self.gamma <= 1:
            raise ParameterError(f"gamma must lie in [0, 1], got {self.gamma}")
        NoiseSpec(self.alpha, self.eta)


# ── Erdős–Rényi family ─────────────────────────────────────


def erdos_renyi_instance(n: int, spec: NoiseSpec, truth: GroundTruth | None = None,
                         rng: np.random.Generator | None = None) -> tuple[SignedGraph, GroundTruth]:
    """G(n, alpha) measurement graph, each edge flipped with probability eta."""
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    rng = rng or make_rng(spec.seed)
    if truth is None:
        truth = GroundTruth(_random_signs(rng, n))
    elif truth.n != n:
        raise ParameterError(f"truth has {truth.n} entries, expected {n}")
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(len(rows)) < spec.alpha
    rows, cols = rows[keep], cols[keep]
    flip = rng.random(len(rows)) < spec.eta
    g = SignedGraph(n, rows, cols, _measure(truth.z, rows, cols, flip))
    log.debug("erdos-renyi n=%d alpha=%.3f eta=%.3f edges=%d flipped=%d",
              n, spec.alpha, spec.eta, g.m, int(flip.sum()))
    return g, truth


def complete_with_random_bad(n: int, d: float, seed: int = 0) -> tuple[SignedGraph, GroundTruth]:
    """K_n whose bad edges form G(n, d/(n-1)), i.e. expected bad degree d."""
    if not 0 <= d <= n - 1:
        raise ParameterError(f"bad degree must lie in [0, n-1], got {d}")
    return erdos_renyi_instance(n, NoiseSpec(1.0, d / (n - 1), seed))


def _near_regular_keys(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Edge keys i*n+j of an (approximately) d-regular simple graph.

    Dense requests are built as the complement of a sparse regular graph.
    When n*d is odd a regular graph on n+1 nodes is drawn and the extra node
    dropped, leaving d nodes of degree d-1.
    """
    if d == 0:
        return np.zeros(0, dtype=np.int64)
    if d == n - 1:
        rows, cols = np.triu_indices(n, k=1)
        return rows * n + cols
    if d > (n - 1) / 2:
        rows, cols = np.triu_indices(n, k=1)
        return np.setdiff1d(rows * n + cols, _near_regular_keys(n, n - 1 - d, rng))
    size = n if (n * d) % 2 == 0 else n + 1
    h = nx.random_regular_graph(d, size, seed=_child_seed(rng))
    e = np.array([(min(a, b), max(a, b)) for a, b in h.edges() if a < n and b < n], dtype=np.int64)
    return np.sort(e[:, 0] * n + e[:, 1])


def complete_with_regular_bad(n: int, d: int, seed: int = 0) -> tuple[SignedGraph, GroundTruth]:
    """K_n whose bad edges form an approximately d-regular subgraph
    (noise level eta = d/(n-1))."""
    if not 0 <= d <= n - 1:
        raise ParameterError(f"bad degree must lie in [0, n-1], got {d}")
    rng = make_rng(seed)
    truth = GroundTruth(_random_signs(rng, n))
    rows, cols = np.triu_indices(n, k=1)
    flip = np.isin(rows * n + cols, _near_regular_keys(n, int(d), rng))
    g = SignedGraph(n, rows, cols, _measure(truth.z, rows, cols, flip))
    log.debug("regular-bad n=%d d=%d flipped=%d", n, d, int(flip.sum()))
    return g, truth


def preferential_attachment_instance(n: int, m_pa: int, d: float = 0.0,
                                     seed: int = 0) -> tuple[SignedGraph, GroundTruth]:
    """Barabási–Albert growth from a clique on m_pa+1 nodes; each existing
    edge is flipped independently with probability d/(n-1)."""
    if not 1 <= m_pa < n:
        raise ParameterError(f"need 1 <= m_pa < n, got m_pa={m_pa}, n={n}")
    if not 0 <= d <= n - 1:
        raise ParameterError(f"bad degree must lie in [0, n-1], got {d}")
    rng = make_rng(seed)
    truth = GroundTruth(_random_signs(rng, n))
    h = nx.barabasi_albert_graph(n, m_pa, seed=_child_seed(rng),
                                 initial_graph=nx.complete_graph(m_pa + 1))
    e = np.array([(min(a, b), max(a, b)) for a, b in h.edges()], dtype=np.int64)
    rows, cols = e[:, 0], e[:, 1]
    flip = rng.random(len(rows)) < d / (n - 1)
    g = SignedGraph(n, rows, cols, _measure(truth.z, rows, cols, flip))
    log.debug("preferential-attachment n=%d m_pa=%d edges=%d flipped=%d", n, m_pa, g.m, int(flip.sum()))
    return g, truth


# ── partitioned models ─────────────────────────────────────


def persistence_ids(C: int, S: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """(C, S) entity ids: each seat keeps its holder into the next layer with
    probability gamma, otherwise a fresh entity takes it."""
    ids = np.empty((C, S), dtype=np.int64)
    ids[0] = np.arange(S)
    next_id = S
    for t in range(1, C):
        stay = rng.random(S) < gamma
        fresh = int((~stay).sum())
        ids[t] = ids[t - 1]
        ids[t, ~stay] = np.arange(next_id, next_id + fresh)
        next_id += fresh
    return ids


def _same_entity_pairs(entity: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All unordered node pairs sharing an entity id (categorical coupling)."""
    order = np.argsort(entity, kind="stable")
    rows, cols = [], []
    for block in np.split(order, np.flatnonzero(np.diff(entity[order])) + 1):
        if len(block) > 1:
            i, j = np.triu_indices(len(block), k=1)
            rows.append(block[i])
            cols.append(block[j])
    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    r, c = np.concatenate(rows), np.concatenate(cols)
    return np.minimum(r, c), np.maximum(r, c)


def congress_model_I(spec: CongressModelSpec) -> tuple[SignedGraph, GroundTruth, Partition]:
    """C layers of S seats; within-layer pairs ~ G(S, alpha) flipped w.p. eta;
    all occurrences of one entity joined by +1 edges (never flipped)."""
    rng = make_rng(spec.seed)
    C, S = spec.C, spec.S
    entity = persistence_ids(C, S, spec.gamma, rng).reshape(-1)
    k = int(entity.max()) + 1
    z = _random_signs(rng, k)[entity]

    li, lj = np.triu_indices(S, k=1)
    rows, cols, w = [], [], []
    for t in range(C):
        keep = rng.random(len(li)) < spec.alpha
        r, c = li[keep] + t * S, lj[keep] + t * S
        flip = rng.random(len(r)) < spec.eta
        rows.append(r)
        cols.append(c)
        w.append(_measure(z, r, c, flip))
    cr, cc = _same_entity_pairs(entity)
    rows.append(cr)
    cols.append(cc)
    w.append(np.ones(len(cr)))

    g = SignedGraph(C * S, np.concatenate(rows), np.concatenate(cols), np.concatenate(w))
    log.debug("congress-model-1 C=%d S=%d gamma=%.2f -> k=%d, edges=%d", C, S, spec.gamma, k, g.m)
    return g, GroundTruth(z), Partition(entity, k)


def equal_partition_benchmark_II(n: int, k: int, alpha: float, eta: float,
                                 seed: int = 0) -> tuple[SignedGraph, GroundTruth, Partition]:
    """k equal blocks forced complete with +1 edges; inter-block pairs
    ~ G(n, alpha) flipped w.p. eta."""
    if k < 1 or k > n or n % k:
        raise ParameterError(f"block count k={k} must divide n={n}")
    NoiseSpec(alpha, eta)
    rng = make_rng(seed)
    block_of = np.arange(n) // (n // k)
    z = _random_signs(rng, k)[block_of]
    rows, cols = np.triu_indices(n, k=1)
    intra = block_of[rows] == block_of[cols]
    present = intra | (rng.random(len(rows)) < alpha)
    flip = ~intra & (rng.random(len(rows)) < eta)
    rows, cols, flip = rows[present], cols[present], flip[present]
    g = SignedGraph(n, rows, cols, _measure(z, rows, cols, flip))
    return g, GroundTruth(z), Partition(block_of, k)


# ── anchors ────────────────────────────────────────────────


def random_anchors(truth: GroundTruth, h: int, rng: np.random.Generator) -> AnchorSet:
    """h distinct nodes chosen uniformly, carrying their true values."""
    if not 0 <= h <= truth.n:
        raise ParameterError(f"anchor count must lie in [0, {truth.n}], got {h}")
    nodes = np.sort(rng.choice(truth.n, size=h, replace=False))
    return AnchorSet(nodes, truth.z[nodes])


# ── synthetic roll-call multiplex ──────────────────────────


def synthetic_voting(C: int = 10, S: int = 20, gamma: float = 0.75, defect: float = 0.1,
                     bills: int = 200, partisan: float = 0.7, epsilon: float = 1.0, seed: int = 0):
    """Roll-call similarity layers standing in for real voting data.

    On a partisan bill the two parties take opposite positions, otherwise the
    same one; each member votes with their party except with probability
    `defect`.  W_ij is the fraction of bills on which i and j voted alike.
    """
    from zsync.multiplex import MultiplexVoting

    if bills < 1:
        raise ParameterError("need at least one bill")
    for name, v in (("gamma", gamma), ("defect", defect), ("partisan", partisan)):
        if not 0 <= v <= 1:
            raise ParameterError(f"{name} must lie in [0, 1], got {v}")
    rng = make_rng(seed)
    ids = persistence_ids(C, S, gamma, rng)
    party = _random_signs(rng, int(ids.max()) + 1)
    layers, labels = [], []
    for t in range(C):
        side = party[ids[t]]
        position = _random_signs(rng, bills)
        split = rng.random(bills) < partisan
        votes = np.where(split[None, :], side[:, None], 1) * position[None, :]
        votes = votes * np.where(rng.random((S, bills)) < defect, -1, 1)
        agree = (votes[:, None, :] == votes[None, :, :]).mean(axis=2)
        np.fill_diagonal(agree, 1.0)
        layers.append(agree)
        labels.append(np.where(side > 0, "D", "R"))
    return MultiplexVoting(layers, [row for row in ids], epsilon, labels)
