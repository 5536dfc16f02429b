"""Domain types shared by all solvers, the error metric up to global sign,
and solution alignment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from zsync.errors import DimensionError, ParameterError

log = logging.getLogger(__name__)


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


def sign_pm(x) -> np.ndarray:
    """Elementwise sign with sign(0) = +1."""
    return np.where(np.asarray(x, dtype=float) >= 0, 1, -1).astype(np.int64)


# ── measurement graph ──────────────────────────────────────


@dataclass(frozen=True, eq=False)
class SignedGraph:
    """Sparse symmetric measurement matrix Z stored as its upper triangle.

    Edges are kept sorted by (i, j); the lower half and the diagonal are
    implied (Z_ji = Z_ij, Z_ii = 0).
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ParameterError(f"graph needs at least one node, got n={n}")
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (len(rows) == len(cols) == len(w)):
            raise DimensionError("rows, cols and weights must have equal length")
        if len(w):
            bad = (rows < 0) | (rows >= cols) | (cols >= n)
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                raise ParameterError(f"edge ({rows[k]},{cols[k]}) violates 0 <= i < j < n={n}")
            if not np.all(np.isfinite(w)) or np.any(w == 0) or np.any(np.abs(w) > 1):
                raise ParameterError("edge weights must be finite, nonzero and within [-1, 1]")
        key = rows * n + cols
        order = np.argsort(key, kind="stable")
        if len(np.unique(key)) != len(key):
            raise ParameterError("at most one edge per unordered pair")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", _frozen(rows[order], np.int64))
        object.__setattr__(self, "cols", _frozen(cols[order], np.int64))
        object.__setattr__(self, "weights", _frozen(w[order], float))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]]) -> SignedGraph:
        """Build from (i, j, w) triples in any orientation; self-loops rejected."""
        triples = list(edges)
        if not triples:
            return cls(n, [], [], [])
        i, j, w = (np.array(c) for c in zip(*triples))
        if np.any(i == j):
            raise ParameterError("self-loops are not stored")
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        return cls(n, lo, hi, w)

    @classmethod
    def from_matrix(cls, matrix) -> SignedGraph:
        """Build from a dense or sparse symmetric matrix; the diagonal is ignored."""
        if len(matrix.shape) != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"matrix must be square, got {matrix.shape}")
        if sp.issparse(matrix):
            coo = sp.triu(matrix, k=1).tocoo()
            sym_gap = abs(matrix - matrix.T).max() if matrix.nnz else 0.0
            n = matrix.shape[0]
            rows, cols, w = coo.row, coo.col, coo.data
        else:
            dense = np.asarray(matrix, dtype=float)
            sym_gap = np.abs(dense - dense.T).max() if dense.size else 0.0
            n = dense.shape[0]
            rows, cols = np.triu_indices(n, k=1)
            w = dense[rows, cols]
        if sym_gap > 1e-12:
            raise ParameterError("matrix is not symmetric")
        keep = w != 0
        return cls(n, rows[keep], cols[keep], w[keep])

    @property
    def m(self) -> int:
        return len(self.weights)

    def edges(self) -> Iterable[tuple[int, int, float]]:
        return zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist())

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric CSR matrix Z with zero diagonal."""
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.weights, self.weights])
        return sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    @cached_property
    def degrees(self) -> np.ndarray:
        """D_ii = sum_j |Z_ij|."""
        a = np.abs(self.weights)
        return np.bincount(self.rows, a, self.n) + np.bincount(self.cols, a, self.n)

    def components(self) -> tuple[int, np.ndarray]:
        return connected_components(self.adjacency, directed=False)

    def subgraph(self, nodes) -> SignedGraph:
        """Induced subgraph, nodes relabelled 0..len(nodes)-1 in the given order."""
        nodes = np.asarray(nodes, dtype=np.int64)
        local = np.full(self.n, -1, dtype=np.int64)
        local[nodes] = np.arange(len(nodes))
        keep = (local[self.rows] >= 0) & (local[self.cols] >= 0)
        i, j = local[self.rows[keep]], local[self.cols[keep]]
        return SignedGraph(len(nodes), np.minimum(i, j), np.maximum(i, j), self.weights[keep])

    def reweighted(self, weights) -> SignedGraph:
        return SignedGraph(self.n, self.rows, self.cols, weights)


def conjugate(g: SignedGraph, s) -> SignedGraph:
    """Gauge transform Z -> diag(s) Z diag(s) for s in {-1,+1}^n."""
    s = np.asarray(s)
    if len(s) != g.n:
        raise DimensionError(f"gauge vector has length {len(s)}, graph has {g.n} nodes")
    return g.reweighted(g.weights * s[g.rows] * s[g.cols])


# ── ground truth, partitions, anchors ──────────────────────


@dataclass(frozen=True, eq=False)
class GroundTruth:
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z).reshape(-1)
        if not np.all((z == 1) | (z == -1)):
            raise ParameterError("ground truth entries must be exactly -1 or +1")
        object.__setattr__(self, "z", _frozen(z, np.int64))

    @property
    def n(self) -> int:
        return len(self.z)

    def flipped(self) -> GroundTruth:
        return GroundTruth(-self.z)


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint cover of the nodes by k non-empty blocks."""

    block_of: np.ndarray
    k: int | None = None

    def __post_init__(self):
        b = np.asarray(self.block_of, dtype=np.int64).reshape(-1)
        if len(b) == 0:
            raise ParameterError("partition of an empty node set")
        k = int(b.max()) + 1 if self.k is None else int(self.k)
        if b.min() < 0 or b.max() >= k:
            raise ParameterError(f"block ids must lie in 0..{k - 1}")
        if len(np.unique(b)) != k:
            raise ParameterError("every block must be non-empty")
        object.__setattr__(self, "block_of", _frozen(b, np.int64))
        object.__setattr__(self, "k", k)

    @classmethod
    def singletons(cls, n: int) -> Partition:
        return cls(np.arange(n))

    @classmethod
    def from_labels(cls, labels) -> Partition:
        """Relabel arbitrary hashable labels to 0..k-1 in order of first appearance."""
        ids: dict = {}
        return cls([ids.setdefault(lab, len(ids)) for lab in labels])

    @property
    def n(self) -> int:
        return len(self.block_of)

    @cached_property
    def blocks(self) -> list[np.ndarray]:
        order = np.argsort(self.block_of, kind="stable")
        cuts = np.cumsum(np.bincount(self.block_of, minlength=self.k))[:-1]
        return np.split(order, cuts)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.block_of, minlength=self.k)

    def intra_mask(self, g: SignedGraph) -> np.ndarray:
        """True for edges whose endpoints share a block."""
        if g.n != self.n:
            raise DimensionError(f"partition covers {self.n} nodes, graph has {g.n}")
        return self.block_of[g.rows] == self.block_of[g.cols]


@dataclass(frozen=True, eq=False)
class AnchorSet:
    """Nodes with a-priori known values."""

    nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.int64).reshape(-1)
        values = np.asarray(self.values).reshape(-1)
        if len(nodes) != len(values):
            raise DimensionError("anchor nodes and values must have equal length")
        if len(np.unique(nodes)) != len(nodes):
            raise ParameterError("anchor indices must be distinct")
        if not np.all((values == 1) | (values == -1)):
            raise ParameterError("anchor values must be -1 or +1")
        order = np.argsort(nodes)
        object.__setattr__(self, "nodes", _frozen(nodes[order], np.int64))
        object.__setattr__(self, "values", _frozen(values[order], np.int64))

    @classmethod
    def from_mapping(cls, anchors: Mapping[int, int]) -> AnchorSet:
        return cls(list(anchors.keys()), list(anchors.values()))

    @property
    def h(self) -> int:
        return len(self.nodes)

    def __len__(self) -> int:
        return self.h

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.nodes.tolist(), self.values.tolist()))

    def check(self, n: int) -> None:
        if self.h and (self.nodes.min() < 0 or self.nodes.max() >= n):
            raise ParameterError(f"anchor index out of range for n={n}")

    def mask(self, n: int) -> np.ndarray:
        self.check(n)
        out = np.zeros(n, dtype=bool)
        out[self.nodes] = True
        return out

    def negated(self) -> AnchorSet:
        return AnchorSet(self.nodes, -self.values)


# ── solutions ──────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class SyncSolution:
    """±1 estimates, their pre-rounding scores, and solver diagnostics."""

    estimates: np.ndarray
    scores: np.ndarray
    method: str
    diagnostics: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float).reshape(-1)
        est = np.asarray(self.estimates).reshape(-1)
        if len(est) != len(scores):
            raise DimensionError("estimates and scores must have equal length")
        if not np.array_equal(est, sign_pm(scores)):
            raise ParameterError("estimates must equal sign(scores) with sign(0) = +1")
        object.__setattr__(self, "estimates", _frozen(est, np.int64))
        object.__setattr__(self, "scores", _frozen(scores, float))
        object.__setattr__(self, "diagnostics", dict(self.diagnostics))

    @classmethod
    def from_scores(cls, scores, method: str, diagnostics: Mapping[str, float] | None = None) -> SyncSolution:
        scores = np.asarray(scores, dtype=float)
        return cls(sign_pm(scores), scores, method, diagnostics or {})

    @property
    def n(self) -> int:
        return len(self.estimates)

    def flipped(self) -> SyncSolution:
        # a zero score would round back to +1; nudge it below zero
        scores = np.where(self.scores == 0, -np.finfo(float).tiny, -self.scores)
        return SyncSolution.from_scores(scores, self.method, self.diagnostics)

    def with_diagnostics(self, **extra: float) -> SyncSolution:
        return SyncSolution(self.estimates, self.scores, self.method, {**self.diagnostics, **extra})


def _estimates_of(sol) -> np.ndarray:
    return sol.estimates if isinstance(sol, SyncSolution) else np.asarray(sol)


def _truth_of(truth) -> np.ndarray:
    return truth.z if isinstance(truth, GroundTruth) else np.asarray(truth)


# ── metrics ────────────────────────────────────────────────


def error_rate(sol, truth, ignore=None) -> float:
    """Fraction of misclassified nodes, minimized over the global sign flip.

    `ignore` is an optional boolean mask of nodes excluded from scoring
    (they still take part in solving).
    """
    est, z = _estimates_of(sol), _truth_of(truth)
    if len(est) != len(z):
        raise DimensionError(f"solution has {len(est)} entries, truth has {len(z)}")
    keep = np.ones(len(z), dtype=bool)
    if ignore is not None:
        ignore = np.asarray(ignore, dtype=bool)
        if len(ignore) != len(z):
            raise DimensionError("ignore mask length differs from truth")
        keep = ~ignore
    n = int(keep.sum())
    if n == 0:
        return 0.0
    h = int(np.count_nonzero(est[keep] != z[keep]))
    return min(h, n - h) / n


def align_global_sign(sol: SyncSolution, truth) -> SyncSolution:
    """Return sol or its global flip, whichever is closer to truth; ties keep sol."""
    z = _truth_of(truth)
    if sol.n != len(z):
        raise DimensionError(f"solution has {sol.n} entries, truth has {len(z)}")
    h = int(np.count_nonzero(sol.estimates != z))
    return sol.flipped() if h > sol.n - h else sol


def objective_value(g: SignedGraph, x) -> float:
    """x^T Z x for x in {-1,+1}^n, both triangle halves counted, diagonal excluded."""
    x = _estimates_of(x)
    if len(x) != g.n:
        raise DimensionError(f"assignment has {len(x)} entries, graph has {g.n} nodes")
    if not np.all((x == 1) | (x == -1)):
        raise ParameterError("assignment entries must be -1 or +1")
    return float(2.0 * np.sum(g.weights * x[g.rows] * x[g.cols]))
