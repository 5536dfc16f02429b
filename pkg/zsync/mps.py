"""Message-passing synchronization.

Each round first re-estimates, for every edge, the probability that its
observed sign is correct (Bayes' rule against the current node beliefs),
then recomputes each node's belief p+ of being +1 from its neighbours,
both from the previous round's values.  Anchors stay fixed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from zsync.core import AnchorSet, Partition, SignedGraph, SyncSolution, error_rate
from zsync.errors import ParameterError
from zsync.generators import make_rng

log = logging.getLogger(__name__)

CHANNEL_P = 0.8
MAX_ITER = 200
TOL = 1e-6
SENSITIVITY_GRID = (0.6, 0.7, 0.8, 0.9, 0.95)


@dataclass(frozen=True)
class MpsOptions:
    channel_p: float = CHANNEL_P
    max_iter: int = MAX_ITER
    tol: float = TOL
    damping: float = 0.0
    random_root: bool = False
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if not 0.5 < self.channel_p <= 1:
            raise ParameterError(f"channel_p must lie in (0.5, 1], got {self.channel_p}")
        if not 0 <= self.damping < 1:
            raise ParameterError(f"damping must lie in [0, 1), got {self.damping}")
        if self.max_iter < 1 or self.tol <= 0:
            raise ParameterError("max_iter must be positive and tol > 0")


@dataclass
class BeliefState:
    """Node beliefs p+ and per-edge correctness beliefs for either observed sign."""

    p_plus: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray
    channel_p: float
    fixed: np.ndarray  # nodes whose belief never changes (anchors, pinned roots)
    iteration: int = 0
    trace: list = field(default_factory=list)

    @property
    def p_minus(self) -> np.ndarray:
        return 1.0 - self.p_plus

    @classmethod
    def initial(cls, g: SignedGraph, fixed_values: dict[int, int], channel_p: float) -> BeliefState:
        p = np.full(g.n, 0.5)
        fixed = np.zeros(g.n, dtype=bool)
        for node, value in fixed_values.items():
            p[node] = 1.0 if value > 0 else 0.0
            fixed[node] = True
        return cls(p, np.full(g.m, channel_p), np.full(g.m, channel_p), channel_p, fixed)

    def check(self) -> None:
        assert np.all((self.p_plus >= 0) & (self.p_plus <= 1)), "node belief left [0, 1]"
        assert np.all((self.w_plus >= 0) & (self.w_plus <= 1)), "edge belief left [0, 1]"
        assert np.all((self.w_minus >= 0) & (self.w_minus <= 1)), "edge belief left [0, 1]"


# ── update rules ───────────────────────────────────────────


def agreement(pi_plus, pj_plus):
    """pi+ = p_i+ p_j+ + p_i- p_j-, the belief that both ends carry the same sign."""
    return pi_plus * pj_plus + (1.0 - pi_plus) * (1.0 - pj_plus)


def edge_beliefs(pi_plus, pj_plus, p: float) -> tuple[np.ndarray, np.ndarray]:
    """(w+, w-): posterior that an edge observed as +1 (resp. -1) is correct."""
    pi = agreement(np.asarray(pi_plus, dtype=float), np.asarray(pj_plus, dtype=float))
    num_plus, den_plus = pi * p, pi * (2 * p - 1) + 1 - p
    num_minus, den_minus = (1 - pi) * p, p - pi * (2 * p - 1)
    # both denominators vanish only for p = 1 against a certain contradiction
    w_plus = np.divide(num_plus, den_plus, out=np.zeros_like(pi), where=den_plus > 0)
    w_minus = np.divide(num_minus, den_minus, out=np.zeros_like(pi), where=den_minus > 0)
    return np.clip(w_plus, 0.0, 1.0), np.clip(w_minus, 0.0, 1.0)


def mps_edge_update(state: BeliefState, i: int, j: int, sign: int) -> float:
    """Belief that edge (i, j) with observed sign `sign` is correct."""
    w_plus, w_minus = edge_beliefs(state.p_plus[i], state.p_plus[j], state.channel_p)
    return float(w_plus if sign > 0 else w_minus)


def _raw_sums(g: SignedGraph, p: np.ndarray, w_plus: np.ndarray, w_minus: np.ndarray):
    """Unnormalized (p+, p-) sums per node, contributions weighted by |Z_ij|."""
    positive = g.weights > 0
    mag = np.abs(g.weights)
    w = np.where(positive, w_plus, w_minus)
    raw_plus = np.zeros(g.n)
    raw_minus = np.zeros(g.n)
    for me, other in ((g.rows, g.cols), (g.cols, g.rows)):
        says_plus = np.where(positive, p[other], 1.0 - p[other])
        np.add.at(raw_plus, me, mag * w * says_plus)
        np.add.at(raw_minus, me, mag * w * (1.0 - says_plus))
    return raw_plus, raw_minus


def _normalized(raw_plus: np.ndarray, raw_minus: np.ndarray) -> np.ndarray:
    total = raw_plus + raw_minus
    return np.divide(raw_plus, total, out=np.full_like(total, 0.5), where=total > 0)


def mps_node_update(state: BeliefState, g: SignedGraph, i: int) -> float:
    """New p+ of node i from its neighbours; fixed nodes are returned unchanged."""
    if state.fixed[i]:
        return float(state.p_plus[i])
    raw_plus, raw_minus = _raw_sums(g, state.p_plus, state.w_plus, state.w_minus)
    return float(_normalized(raw_plus[i:i + 1], raw_minus[i:i + 1])[0])


# ── driver ─────────────────────────────────────────────────


def _roots(g: SignedGraph, anchors: AnchorSet, opts: MpsOptions) -> dict[int, int]:
    """One +1 root per component of size >= 2 that holds no anchor."""
    count, labels = g.components()
    anchored = set(labels[anchors.nodes].tolist())
    rng = make_rng(opts.seed) if opts.random_root else None
    roots = {}
    for c in range(count):
        nodes = np.flatnonzero(labels == c)
        if c in anchored or len(nodes) < 2:
            continue
        if rng is not None:
            root = int(rng.choice(nodes))
        else:
            root = int(nodes[np.argmax(g.degrees[nodes])])
        roots[root] = 1
    return roots


def _block_fixed(partition: Partition, fixed_values: dict[int, int]) -> dict[int, int]:
    """Extend fixed values to every member of a block holding a fixed node."""
    per_block: dict[int, int] = {}
    for node, value in fixed_values.items():
        b = int(partition.block_of[node])
        if per_block.setdefault(b, value) != value:
            raise ParameterError(f"anchors inside block {b} disagree")
    return {int(i): per_block[int(partition.block_of[i])]
            for i in range(partition.n) if int(partition.block_of[i]) in per_block}


def run_mps(g: SignedGraph, anchors: AnchorSet | None = None, opts: MpsOptions | None = None,
            partition: Partition | None = None) -> tuple[SyncSolution, BeliefState]:
    """Synchronous message passing until max |dp+| < tol or max_iter rounds.

    Without anchors a root per component (largest degree, lowest index) is
    pinned to +1 and the result holds up to global sign.  With a partition,
    intra-block edges are trusted (w = 1) and each block's beliefs are
    replaced by their median after every round.
    """
    anchors = anchors or AnchorSet()
    anchors.check(g.n)
    opts = opts or MpsOptions()
    if partition is not None and partition.n != g.n:
        raise ParameterError(f"partition covers {partition.n} nodes, graph has {g.n}")

    roots = _roots(g, anchors, opts)
    fixed_values = {**anchors.as_dict(), **roots}
    if partition is not None:
        fixed_values = _block_fixed(partition, fixed_values)
    state = BeliefState.initial(g, fixed_values, opts.channel_p)
    intra = partition.intra_mask(g) if partition is not None else np.zeros(g.m, dtype=bool)

    best_p, best_delta, delta = state.p_plus.copy(), np.inf, np.inf
    converged = False
    while state.iteration < opts.max_iter:
        p_old = state.p_plus
        w_plus, w_minus = edge_beliefs(p_old[g.rows], p_old[g.cols], opts.channel_p)
        w_plus[intra] = 1.0
        w_minus[intra] = 1.0
        state.w_plus, state.w_minus = w_plus, w_minus

        p_new = _normalized(*_raw_sums(g, p_old, w_plus, w_minus))
        if opts.damping:
            p_new = (1 - opts.damping) * p_new + opts.damping * p_old
        if partition is not None:
            medians = np.array([np.median(p_new[b]) for b in partition.blocks])
            p_new = medians[partition.block_of]
        p_new[state.fixed] = p_old[state.fixed]

        state.p_plus = p_new
        state.iteration += 1
        state.check()
        if opts.trace:
            state.trace.append(p_new.copy())
        delta = float(np.max(np.abs(p_new - p_old))) if g.n else 0.0
        if delta < best_delta:
            best_p, best_delta = p_new.copy(), delta
        if delta < opts.tol:
            converged = True
            break

    p_final = state.p_plus if converged else best_p
    if not converged:
        log.warning("mps: no convergence after %d rounds (last change %.3e); returning best iterate",
                    opts.max_iter, delta)
    isolated = int(np.count_nonzero((g.degrees == 0) & ~state.fixed))
    diag = {
        "iterations": state.iteration,
        "converged": int(converged),
        "residual": best_delta if not converged else delta,
        "channel_p": opts.channel_p,
        "roots": len(roots),
        "isolated": isolated,
    }
    method = "mps" if partition is None else "mps-k"
    return SyncSolution.from_scores(2.0 * p_final - 1.0, method, diag), state


def mps_sync(g: SignedGraph, anchors: AnchorSet | None = None, opts: MpsOptions | None = None,
             partition: Partition | None = None) -> SyncSolution:
    return run_mps(g, anchors, opts, partition)[0]


def trace_frame(trace: list[np.ndarray]) -> pd.DataFrame:
    """Belief trace as rows (iteration, node, p_plus)."""
    if not trace:
        return pd.DataFrame({"iteration": [], "node": [], "p_plus": []})
    n = len(trace[0])
    return pd.DataFrame({
        "iteration": np.repeat(np.arange(1, len(trace) + 1), n),
        "node": np.tile(np.arange(n), len(trace)),
        "p_plus": np.concatenate(trace),
    })


def channel_sensitivity(g: SignedGraph, truth, anchors: AnchorSet | None = None,
                        grid=SENSITIVITY_GRID, partition: Partition | None = None,
                        ignore=None) -> pd.DataFrame:
    """Final error rate for each assumed channel_p on a grid."""
    rows = []
    for p in grid:
        sol = mps_sync(g, anchors, MpsOptions(channel_p=float(p)), partition)
        rows.append({
            "channel_p": float(p),
            "tau": error_rate(sol, truth, ignore),
            "iterations": sol.diagnostics["iterations"],
            "converged": sol.diagnostics["converged"],
        })
    return pd.DataFrame(rows)
