"""Semidefinite relaxations: plain, anchored (SDP-Y, SDP-XY) and
partition-constrained.

Every program is brought to the shape

    max <C, Y>   s.t.  diag(Y) = 1,  Y psd

and solved on a Burer–Monteiro factor Y = V V^T with unit rows by
block-coordinate ascent: each row in turn is replaced by its renormalized
gradient sum_j C_ij v_j.  The result carries the dual bound
sum(y) + n max(0, -lambda_min(Diag(y) - C)) with y_i = v_i . (C V)_i, an
upper bound on the program's optimum.

Anchors enter by substitution: every anchor row is a_i u for one shared unit
gauge row u, so an anchored problem is a bordered (l+1)-row program.
A partition collapses likewise: rows in a block must coincide, leaving a
k-row program on block-summed weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.sparse as sp

from zsync import settings
from zsync.anchored import build_anchored_system
from zsync.core import AnchorSet, Partition, SignedGraph, SyncSolution, objective_value, sign_pm
from zsync.errors import ConvergenceError, SizeLimitError
from zsync.generators import make_rng
from zsync.spectral import canonical_sign, top_eigenpairs

log = logging.getLogger(__name__)

RESTARTS = 3
MAX_ITER = 20000
REL_TOL = 1e-7
WINDOW = 50
STEP_TOL = 1e-14


@dataclass(frozen=True)
class SdpOptions:
    restarts: int = RESTARTS
    max_iter: int = MAX_ITER
    tol: float = REL_TOL
    window: int = WINDOW
    step_tol: float = STEP_TOL
    rank: int | None = None
    seed: int = 0


def bm_rank(n: int) -> int:
    return math.ceil(math.sqrt(2 * n)) + 1


@dataclass(frozen=True, eq=False)
class SdpResult:
    factor: np.ndarray      # V, one unit row per program variable
    objective: float        # Trace(Z Y) in the original problem's terms
    rounded: SyncSolution
    feasibility: float      # max |Y_ii - 1|
    violation: float        # max equality-constraint violation
    iterations: int         # epochs summed over restarts
    dual_bound: float

    @property
    def gram(self) -> np.ndarray:
        return self.factor @ self.factor.T

    @property
    def size(self) -> int:
        return self.factor.shape[0]

    def factor_frame(self) -> pd.DataFrame:
        cols = {"row": np.arange(self.size)}
        cols.update({f"v{c}": self.factor[:, c] for c in range(self.factor.shape[1])})
        return pd.DataFrame(cols)


# ── solver ─────────────────────────────────────────────────


@dataclass(frozen=True)
class _Factor:
    V: np.ndarray
    objective: float
    iterations: int


def _check_size(n: int) -> None:
    if n > settings.SDP_MAX_N:
        raise SizeLimitError(f"SDP limited to {settings.SDP_MAX_N} rows (got {n}); set ZSYNC_SDP_MAX_N to raise")


def _ascend(C: sp.csr_matrix, opts: SdpOptions, score: sp.csr_matrix | None = None) -> _Factor:
    """Best factor over `opts.restarts` random starts.

    `score` is the matrix whose objective drives the stopping rule (defaults
    to C); the penalized partition program passes the unpenalized Z.
    """
    n = C.shape[0]
    score = C if score is None else score
    r = opts.rank or bm_rank(n)
    indptr, indices, data = C.indptr, C.indices, C.data
    best: _Factor | None = None
    total = 0
    for restart in range(opts.restarts):
        rng = make_rng(opts.seed, restart)
        V = rng.standard_normal((n, r))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        history: list[float] = []
        converged = False
        for epoch in range(opts.max_iter):
            moved = 0.0
            for i in rng.permutation(n):
                lo, hi = indptr[i], indptr[i + 1]
                if lo == hi:
                    continue
                grad = data[lo:hi] @ V[indices[lo:hi]]
                norm = np.linalg.norm(grad)
                if norm <= 1e-12:
                    continue
                new = grad / norm
                moved = max(moved, float(np.sum((new - V[i]) ** 2)))
                V[i] = new
            obj = float(np.sum((score @ V) * V))
            history.append(obj)
            if moved < opts.step_tol:
                converged = True
            elif epoch >= opts.window:
                past = history[epoch - opts.window]
                converged = abs(obj - past) <= opts.tol * max(1.0, abs(obj))
            if converged:
                break
        total += epoch + 1
        log.debug("sdp restart %d: n=%d rank=%d epochs=%d objective=%.10g", restart, n, r, epoch + 1, obj)
        if not converged:
            change = abs(history[-1] - history[-1 - opts.window]) if len(history) > opts.window else math.nan
            raise ConvergenceError(
                f"SDP ascent stagnated after {opts.max_iter} epochs",
                residual=change,
                best=V,
            )
        if best is None or obj > best.objective + 1e-12:
            best = _Factor(V.copy(), obj, 0)
    return _Factor(best.V, best.objective, total)


def _dual_bound(C: sp.csr_matrix, V: np.ndarray) -> float:
    """sum(y) + n max(0, -lambda_min(Diag(y) - C)) with y_i = v_i . (C V)_i."""
    y = np.sum((C @ V) * V, axis=1)
    slack = (sp.diags(y) - C).tocsr()
    lam_min = float(top_eigenpairs(slack, 1, which="SA").values[0])
    return float(y.sum() + C.shape[0] * max(0.0, -lam_min))


def _feasibility(V: np.ndarray) -> float:
    return float(np.max(np.abs(np.sum(V * V, axis=1) - 1.0))) if len(V) else 0.0


def _top_direction(V: np.ndarray) -> np.ndarray:
    """Top eigenvector of V V^T, via the leading left singular vector of V."""
    u, _, _ = np.linalg.svd(V, full_matrices=False)
    return canonical_sign(u[:, 0])


# ── programs ───────────────────────────────────────────────


def sdp_sync(g: SignedGraph, opts: SdpOptions | None = None) -> SdpResult:
    """max Trace(Z Y) s.t. diag(Y) = 1, Y psd; rounded by the top eigenvector of Y."""
    opts = opts or SdpOptions()
    _check_size(g.n)
    C = g.adjacency
    fac = _ascend(C, opts)
    scores = _top_direction(fac.V)
    feas = _feasibility(fac.V)
    bound = _dual_bound(C, fac.V)
    rounded = SyncSolution.from_scores(scores, "sdp", {"sdp_objective": fac.objective, "iterations": fac.iterations})
    rounded = rounded.with_diagnostics(objective=objective_value(g, rounded), dual_bound=bound)
    return SdpResult(fac.V, fac.objective, rounded, feas, feas, fac.iterations, bound)


def _bordered(g: SignedGraph, anchors: AnchorSet, opts: SdpOptions):
    """Solve the anchored program; returns (system, factor, bordered C)."""
    sys = build_anchored_system(g, anchors)
    _check_size(sys.l + 1)
    b = sp.csr_matrix(sys.b.reshape(-1, 1))
    C = sp.bmat([[sys.S, b], [b.T, None]], format="csr")
    return sys, _ascend(C, opts), C


def _anchored_result(g, sys, fac, C, scores, method: str) -> SdpResult:
    objective = fac.objective + sys.anchor_constant
    feas = _feasibility(fac.V)
    bound = _dual_bound(C, fac.V) + sys.anchor_constant
    rounded = SyncSolution.from_scores(sys.expand(scores), method, {
        "sdp_objective": objective,
        "iterations": fac.iterations,
    })
    rounded = rounded.with_diagnostics(objective=objective_value(g, rounded), dual_bound=bound)
    # anchor pairs hold Y_ij = a_i a_j |u|^2 exactly, so the violation is the gauge row's norm defect
    violation = abs(float(fac.V[-1] @ fac.V[-1]) - 1.0)
    return SdpResult(fac.V, objective, rounded, feas, violation, fac.iterations, bound)


def sdp_sync_anchored_Y(g: SignedGraph, anchors: AnchorSet, opts: SdpOptions | None = None) -> SdpResult:
    """Anchor pairs constrained to Y_ij = a_i a_j; sensors rounded by the top
    eigenvector of their own block, signed by majority agreement with the
    sensor-anchor block."""
    sys, fac, C = _bordered(g, anchors, opts or SdpOptions())
    sensors, gauge = fac.V[:-1], fac.V[-1]
    q = _top_direction(sensors)
    x = sensors @ gauge
    if np.sum(sign_pm(q) * sign_pm(x)) < 0:
        q = -q
    return _anchored_result(g, sys, fac, C, q, "sdp-y")


def sdp_sync_anchored_XY(g: SignedGraph, anchors: AnchorSet, opts: SdpOptions | None = None) -> SdpResult:
    """Program over [[Y, x], [x^T, 1]] psd with objective Trace(S Y) + 2 x^T U a;
    estimates = sign(x)."""
    sys, fac, C = _bordered(g, anchors, opts or SdpOptions())
    x = fac.V[:-1] @ fac.V[-1]
    return _anchored_result(g, sys, fac, C, x, "sdp-xy")


def collapse(g: SignedGraph, partition: Partition) -> tuple[sp.csr_matrix, float]:
    """Block-summed weights P^T Z P with its diagonal split off as a constant."""
    P = sp.csr_matrix((np.ones(partition.n), (np.arange(partition.n), partition.block_of)),
                      shape=(partition.n, partition.k))
    Zk = (P.T @ g.adjacency @ P).tocsr()
    constant = float(Zk.diagonal().sum())
    Zk = (Zk - sp.diags(Zk.diagonal())).tocsr()
    Zk.eliminate_zeros()
    return Zk, constant


def sdp_ksync(g: SignedGraph, partition: Partition, opts: SdpOptions | None = None,
              penalty: float | None = None) -> SdpResult:
    """Partition-constrained program Y_ij = 1 within every block.

    By default solved on the collapsed k-row program.  With `penalty` the
    n-row program is solved directly with rho added to every intra-block
    pair, then projected onto the constraint (rows of a block replaced by
    their normalized mean); kept to cross-check the collapse.
    """
    opts = opts or SdpOptions()
    if penalty is not None:
        return _sdp_ksync_penalized(g, partition, opts, float(penalty))
    _check_size(partition.k)
    Zk, constant = collapse(g, partition)
    fac = _ascend(Zk, opts)
    V = fac.V[partition.block_of]
    block_scores = _top_direction(fac.V)
    objective = fac.objective + constant
    bound = _dual_bound(Zk, fac.V) + constant
    feas = _feasibility(fac.V)
    rounded = SyncSolution.from_scores(block_scores[partition.block_of], "sdp-k", {
        "sdp_objective": objective,
        "iterations": fac.iterations,
        "k": partition.k,
    })
    rounded = rounded.with_diagnostics(objective=objective_value(g, rounded), dual_bound=bound)
    return SdpResult(V, objective, rounded, feas, feas, fac.iterations, bound)


def _sdp_ksync_penalized(g: SignedGraph, partition: Partition, opts: SdpOptions, rho: float) -> SdpResult:
    _check_size(g.n)
    rows, cols = [], []
    for block in partition.blocks:
        i, j = np.triu_indices(len(block), k=1)
        rows.append(block[i])
        cols.append(block[j])
    r, c = np.concatenate(rows), np.concatenate(cols)
    pen = sp.csr_matrix((np.full(len(r), rho), (r, c)), shape=(g.n, g.n))
    C = (g.adjacency + pen + pen.T).tocsr()
    fac = _ascend(C, opts, score=g.adjacency)

    V = fac.V
    violation = float(np.max(1.0 - np.sum(V[r] * V[c], axis=1))) if len(r) else 0.0
    means = np.vstack([V[b].mean(axis=0) for b in partition.blocks])
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    projected = means[partition.block_of]
    objective = float(np.sum((g.adjacency @ projected) * projected))
    block_scores = _top_direction(means)
    rounded = SyncSolution.from_scores(block_scores[partition.block_of], "sdp-k-penalized", {
        "sdp_objective": objective,
        "iterations": fac.iterations,
        "penalty": rho,
        "k": partition.k,
    })
    rounded = rounded.with_diagnostics(objective=objective_value(g, rounded))
    return SdpResult(projected, objective, rounded, _feasibility(projected), violation, fac.iterations, math.nan)
