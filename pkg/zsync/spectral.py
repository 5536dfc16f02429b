"""Eigenvector synchronization (normalized and raw), the Laplacian
least-squares variant, and spectrum reports.

Eigenproblems are symmetric throughout: the normalized operator D^-1 Z is
solved through D^-1/2 Z D^-1/2 and mapped back by D^-1/2, and the smallest
eigenvector of the Laplacian D - Z is found as the top eigenvector of
cI - (D - Z) with c = 2 max D_ii.  Small problems go to LAPACK (numpy.eigh),
large ones to ARPACK Lanczos (scipy eigsh) on a matvec-counting operator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from zsync import settings
from zsync.core import SignedGraph, SyncSolution, objective_value
from zsync.errors import ConvergenceError, DegenerateDegreeError, ParameterError, SizeLimitError

log = logging.getLogger(__name__)

LANCZOS_TOL = 1e-10
RESIDUAL_TOL = 1e-8
START_SEED = 20140101
SOLVERS = ("auto", "dense", "lanczos")


# ── eigensolver ────────────────────────────────────────────


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray   # ordered by `which` (descending for LA)
    vectors: np.ndarray  # unit columns
    iterations: int      # matvecs (0 for the dense path)
    residual: float      # max ||A v - lambda v||
    solver: str
    accurate: bool = True  # residual within RESIDUAL_TOL (relative to the largest |lambda|)


def _start_vector(n: int) -> np.ndarray:
    return np.random.default_rng(START_SEED).standard_normal(n)


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Fix an eigenvector's sign: its largest-magnitude entry (lowest index) is positive."""
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def top_eigenpairs(matrix, r: int = 1, which: str = "LA", solver: str = "auto",
                   tol: float = LANCZOS_TOL, maxiter: int | None = None) -> EigenPairs:
    """r extreme eigenpairs of a symmetric matrix (dense, sparse or LinearOperator).

    which="LA" returns the largest algebraic eigenvalues in descending
    order, which="SA" the smallest in ascending order.
    """
    if solver not in SOLVERS:
        raise ParameterError(f"unknown eigensolver {solver!r}; choose from {', '.join(SOLVERS)}")
    if which not in ("LA", "SA"):
        raise ParameterError(f"which must be 'LA' or 'SA', got {which!r}")
    n = matrix.shape[0]
    r = min(int(r), n)
    if r < 1:
        raise ParameterError("need at least one eigenpair")
    if solver == "auto":
        solver = "dense" if n <= settings.DENSE_LIMIT else "lanczos"
    if solver == "lanczos" and r >= n:
        solver = "dense"

    if solver == "dense":
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
        vals, vecs = np.linalg.eigh(dense)
        idx = np.arange(n)[::-1][:r] if which == "LA" else np.arange(r)
        vals, vecs, iterations = vals[idx], vecs[:, idx], 0
    else:
        count = [0]

        def matvec(v):
            count[0] += 1
            return matrix @ np.ravel(v)

        op = LinearOperator((n, n), matvec=matvec, dtype=float)
        if maxiter is None:
            maxiter = max(1000, int(10 * n * math.log(n)))
        try:
            vals, vecs = eigsh(op, k=r, which=which, v0=_start_vector(n), tol=tol, maxiter=maxiter)
        except ArpackNoConvergence as e:
            raise ConvergenceError(
                f"Lanczos did not converge after {count[0]} matvecs ({len(e.eigenvalues)} of {r} pairs)",
                best=e.eigenvectors,
            ) from e
        order = np.argsort(vals)
        if which == "LA":
            order = order[::-1]
        vals, vecs, iterations = vals[order], vecs[:, order], count[0]

    vecs = np.column_stack([canonical_sign(vecs[:, c]) for c in range(r)])
    resid = np.asarray(matrix @ vecs) - vecs * vals
    residual = float(np.max(np.linalg.norm(resid, axis=0)))
    accurate = residual <= RESIDUAL_TOL * max(1.0, float(np.max(np.abs(vals))))
    if not accurate:
        log.warning("eigen residual %.3e above %.0e (solver=%s)", residual, RESIDUAL_TOL, solver)
    return EigenPairs(vals, vecs, iterations, residual, solver, accurate)


# ── normalized operator ────────────────────────────────────


@dataclass(frozen=True, eq=False)
class NormalizedOperator:
    """The random-walk normalization D^-1 Z of a graph without isolated nodes."""

    graph: SignedGraph

    @cached_property
    def inv_sqrt_degrees(self) -> np.ndarray:
        return 1.0 / np.sqrt(self.graph.degrees)

    @cached_property
    def symmetric(self) -> sp.csr_matrix:
        """D^-1/2 Z D^-1/2, similar to D^-1 Z and hence with the same real spectrum."""
        s = sp.diags(self.inv_sqrt_degrees)
        return (s @ self.graph.adjacency @ s).tocsr()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.graph.n, self.graph.n)

    def matvec(self, v) -> np.ndarray:
        return (self.graph.adjacency @ np.asarray(v, dtype=float)) / self.graph.degrees

    def __matmul__(self, v):
        return self.matvec(v)

    def to_dense(self) -> np.ndarray:
        return self.graph.to_dense() / self.graph.degrees[:, None]

    def back(self, u: np.ndarray) -> np.ndarray:
        """Map an eigenvector of the symmetric form to one of D^-1 Z (unit norm)."""
        v = self.inv_sqrt_degrees * u
        return v / np.linalg.norm(v)


def normalize(g: SignedGraph) -> NormalizedOperator:
    zero = np.flatnonzero(g.degrees == 0)
    if len(zero):
        raise DegenerateDegreeError(int(zero[0]), f"node {int(zero[0])} has no incident edge; D^-1 undefined")
    return NormalizedOperator(g)


# ── synchronization ────────────────────────────────────────


def _per_component(g: SignedGraph, solve_connected, method: str) -> SyncSolution:
    """Run `solve_connected` on each connected component; isolated nodes score 0."""
    count, labels = g.components()
    if count == 1 and g.n > 1:
        scores, diag = solve_connected(g)
        diag["components"] = 1
        return SyncSolution.from_scores(scores, method, diag)

    log.warning("%s: graph has %d connected components; signs are independent per component", method, count)
    scores = np.zeros(g.n)
    sizes = np.bincount(labels)
    diag: dict = {}
    residual_ok = True
    for c in np.argsort(-sizes, kind="stable"):
        nodes = np.flatnonzero(labels == c)
        if len(nodes) < 2:
            continue
        sub_scores, sub_diag = solve_connected(g.subgraph(nodes))
        scores[nodes] = sub_scores
        residual_ok = residual_ok and sub_diag.get("residual_ok", True)
        if not diag:
            diag = sub_diag
    diag["components"] = int(count)
    if "residual_ok" in diag:
        diag["residual_ok"] = residual_ok
    return SyncSolution.from_scores(scores, method, diag)


def _eigen_diagnostics(pairs: EigenPairs) -> dict:
    vals = list(pairs.values) + [math.nan] * (3 - len(pairs.values))
    return {
        "lambda_1": float(vals[0]),
        "lambda_2": float(vals[1]),
        "lambda_3": float(vals[2]),
        "gap_12": float(vals[0] - vals[1]),
        "iterations": pairs.iterations,
        "residual": pairs.residual,
        "residual_ok": pairs.accurate,
        "eigvec_norm": 1.0,
    }


def eig_sync(g: SignedGraph, normalized: bool = True, solver: str = "auto") -> SyncSolution:
    """Signs of the top eigenvector of D^-1 Z (or of Z when normalized=False)."""

    def solve(h: SignedGraph):
        if normalized:
            op = normalize(h)
            pairs = top_eigenpairs(op.symmetric, 3, solver=solver)
            v = canonical_sign(op.back(pairs.vectors[:, 0]))
        else:
            pairs = top_eigenpairs(h.adjacency, 3, solver=solver)
            v = pairs.vectors[:, 0]
        return v, _eigen_diagnostics(pairs)

    sol = _per_component(g, solve, "eig" if normalized else "eig-raw")
    return sol.with_diagnostics(objective=objective_value(g, sol))


def laplacian_sync(g: SignedGraph, solver: str = "auto") -> SyncSolution:
    """Smallest eigenvector of D - Z, scaled to ||x||^2 = n per component."""

    def solve(h: SignedGraph):
        c = 2.0 * float(h.degrees.max())
        shifted = (sp.diags(c - h.degrees) + h.adjacency).tocsr()
        pairs = top_eigenpairs(shifted, min(2, h.n), solver=solver)
        x = pairs.vectors[:, 0] * math.sqrt(h.n)
        diag = {
            "lambda_min": float(c - pairs.values[0]),
            "lambda_next": float(c - pairs.values[1]) if len(pairs.values) > 1 else math.nan,
            "iterations": pairs.iterations,
            "residual": pairs.residual,
            "residual_ok": pairs.accurate,
            "eigvec_norm": float(h.n),
        }
        return x, diag

    sol = _per_component(g, solve, "laplacian")
    return sol.with_diagnostics(objective=objective_value(g, sol))


# ── spectrum reports ───────────────────────────────────────


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    energy: np.ndarray
    histogram: tuple[np.ndarray, np.ndarray] | None = None  # (bin_edges, counts)

    def _at(self, k: int) -> float:
        return float(self.eigenvalues[k]) if len(self.eigenvalues) > k else math.nan

    @property
    def gap_12(self) -> float:
        return self._at(0) - self._at(1)

    @property
    def gap_23(self) -> float:
        return self._at(1) - self._at(2)

    @property
    def ratio_32(self) -> float:
        return self._at(2) / self._at(1) if self._at(1) != 0 else math.nan

    def to_frame(self) -> pd.DataFrame:
        r = len(self.eigenvalues)
        return pd.DataFrame({"rank": np.arange(1, r + 1), "eigenvalue": self.eigenvalues, "energy": self.energy})

    def histogram_frame(self) -> pd.DataFrame:
        if self.histogram is None:
            raise ParameterError("spectrum was computed without a histogram")
        edges, counts = self.histogram
        return pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts})


def spectrum(g: SignedGraph, r: int = 3, normalized: bool = False,
             histogram_bins: int | None = None, solver: str = "auto") -> SpectrumReport:
    """Top-r eigenvalues of Z (or D^-1 Z), their share of the squared
    spectrum, and optionally a histogram of the full spectrum."""
    if not 1 <= r <= g.n:
        raise ParameterError(f"need 1 <= r <= n={g.n}, got r={r}")
    matrix = normalize(g).symmetric if normalized else g.adjacency
    if histogram_bins is not None:
        if g.n > settings.HISTOGRAM_MAX_N:
            raise SizeLimitError(
                f"full-spectrum histogram limited to n <= {settings.HISTOGRAM_MAX_N} (got n={g.n})"
            )
        full = np.linalg.eigvalsh(matrix.toarray())[::-1]
        vals = full[:r]
        counts, edges = np.histogram(full, bins=int(histogram_bins))
        hist = (edges, counts)
    else:
        vals = top_eigenpairs(matrix, r, solver=solver).values
        hist = None
    frob2 = float(matrix.multiply(matrix).sum())
    energy = vals**2 / frob2 if frob2 > 0 else np.zeros_like(vals)
    return SpectrumReport(np.asarray(vals, dtype=float), energy, hist)


def top_eigenvector(g: SignedGraph, normalized: bool = False, solver: str = "auto") -> tuple[float, np.ndarray]:
    """(lambda_1, unit v_1) of Z or of D^-1 Z for a whole graph."""
    if normalized:
        op = normalize(g)
        pairs = top_eigenpairs(op.symmetric, 1, solver=solver)
        return float(pairs.values[0]), op.back(pairs.vectors[:, 0])
    pairs = top_eigenpairs(g.adjacency, 1, solver=solver)
    return float(pairs.values[0]), pairs.vectors[:, 0]
