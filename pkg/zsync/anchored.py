"""Anchored synchronization as a quadratically constrained quadratic program.

With anchors fixed the objective splits into sensor-sensor (S),
sensor-anchor (U) and anchor-anchor (V) blocks; dropping the constant
anchor term leaves

    min  s^T (D_S - S) s - 2 s^T U a

over the sensors, solved under either z^T z = l or z^T D_S z = Delta.  Both
are trust-region subproblems; the multiplier comes from the secular
equation ||(M + lambda I)^-1 b||^2 = target.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import cg

from zsync.core import AnchorSet, SignedGraph, SyncSolution, objective_value
from zsync.errors import ConvergenceError, DegenerateAnchorError, DegenerateDegreeError, ParameterError
from zsync.spectral import top_eigenpairs

log = logging.getLogger(__name__)

DENSE_QCQP_LIMIT = 2000
POLE_MARGIN = 1e-9
ROOT_RTOL = 1e-10
CG_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class AnchoredSystem:
    n: int
    anchors: AnchorSet
    sensors: np.ndarray  # solver coordinate -> original node id
    S: sp.csr_matrix     # l x l
    U: sp.csr_matrix     # l x h
    V: sp.csr_matrix     # h x h
    degrees: np.ndarray  # D_S, full-graph degrees of the sensors

    @property
    def l(self) -> int:
        return len(self.sensors)

    @property
    def h(self) -> int:
        return self.anchors.h

    @property
    def a(self) -> np.ndarray:
        return self.anchors.values.astype(float)

    @cached_property
    def b(self) -> np.ndarray:
        """U a, the anchors' pull on each sensor."""
        return np.asarray(self.U @ self.a).reshape(-1)

    @cached_property
    def M(self) -> sp.csr_matrix:
        """D_S - S (positive semidefinite: D_S dominates S row-wise)."""
        return (sp.diags(self.degrees) - self.S).tocsr()

    @property
    def anchor_constant(self) -> float:
        """a^T V a, the anchor-anchor part of x^T Z x."""
        return float(self.a @ (self.V @ self.a))

    def assemble(self) -> np.ndarray:
        """Dense Z rebuilt from the blocks, in original node order."""
        z = np.zeros((self.n, self.n))
        s, t = self.sensors, self.anchors.nodes
        z[np.ix_(s, s)] = self.S.toarray()
        z[np.ix_(s, t)] = self.U.toarray()
        z[np.ix_(t, s)] = self.U.toarray().T
        z[np.ix_(t, t)] = self.V.toarray()
        return z

    def expand(self, sensor_scores) -> np.ndarray:
        """Full length-n scores: sensors from the solver, anchors at their values."""
        out = np.zeros(self.n)
        out[self.sensors] = sensor_scores
        out[self.anchors.nodes] = self.a
        return out


def build_anchored_system(g: SignedGraph, anchors: AnchorSet) -> AnchoredSystem:
    if not 1 <= anchors.h < g.n:
        raise ParameterError(f"need between 1 and n-1={g.n - 1} anchors, got {anchors.h}")
    mask = anchors.mask(g.n)
    sensors = np.flatnonzero(~mask)
    t = anchors.nodes
    adj = g.adjacency
    rows = adj[sensors]
    return AnchoredSystem(
        n=g.n,
        anchors=anchors,
        sensors=sensors,
        S=rows[:, sensors].tocsr(),
        U=rows[:, t].tocsr(),
        V=adj[t][:, t].tocsr(),
        degrees=g.degrees[sensors],
    )


# ── secular equation ───────────────────────────────────────


@dataclass(frozen=True)
class SecularSolution:
    z: np.ndarray
    lam: float
    hard_case: bool
    secular_residual: float  # |phi(lambda) - target| before the final rescale


def _bracket_hi(phi, lo: float, pole: float, b_norm: float, target: float) -> float:
    # phi(lambda) <= ||b||^2 / (lambda - pole)^2, so this offset already lands below target
    step = max(b_norm / math.sqrt(target), 1e-12)
    hi = pole + step
    while phi(hi) > target:
        step *= 2.0
        hi = pole + step
    return hi


def _secular_dense(M: np.ndarray, b: np.ndarray, target: float) -> SecularSolution:
    mu, Q = np.linalg.eigh(M)
    c = Q.T @ b
    mu_min = float(mu[0])
    scale = max(1.0, float(np.abs(mu).max()))

    def phi(lam):
        return float(np.sum((c / (mu + lam)) ** 2))

    pole = -mu_min
    lo = pole + POLE_MARGIN * scale
    low_modes = np.abs(mu - mu_min) <= 1e-10 * scale
    if phi(lo) <= target:
        # hard case: no root right of the pole; complete along the bottom eigenspace
        upper = ~low_modes
        zp = Q[:, upper] @ (c[upper] / (mu[upper] - mu_min))
        t = math.sqrt(max(target - float(zp @ zp), 0.0))
        z = zp + t * Q[:, 0]
        log.warning("secular equation in the hard case (lambda at pole %.3e)", pole)
        return SecularSolution(z, pole, True, abs(float(z @ z) - target))

    hi = _bracket_hi(phi, lo, pole, float(np.linalg.norm(b)), target)
    lam = brentq(lambda x: phi(x) - target, lo, hi, xtol=1e-14, rtol=ROOT_RTOL, maxiter=500)
    z = Q @ (c / (mu + lam))
    return SecularSolution(z, lam, False, abs(phi(lam) - target))


def _secular_sparse(M: sp.csr_matrix, b: np.ndarray, target: float) -> SecularSolution:
    l = M.shape[0]
    bottom = top_eigenpairs(M, 1, which="SA")
    mu_min, q = float(bottom.values[0]), bottom.vectors[:, 0]
    scale = max(1.0, float(abs(M).sum(axis=1).max()))
    eye = sp.identity(l, format="csr")

    def solve(lam):
        x, info = cg(M + lam * eye, b, rtol=CG_RTOL, maxiter=10 * l)
        if info > 0:
            raise ConvergenceError(f"CG did not converge at lambda={lam:.6g}", residual=math.nan, best=x)
        return x

    def phi(lam):
        x = solve(lam)
        return float(x @ x)

    pole = -mu_min
    lo = pole + POLE_MARGIN * scale
    if phi(lo) <= target:
        # near-hard case: stay just right of the pole and fill up along the bottom mode
        zp = solve(lo)
        zp = zp - (zp @ q) * q
        t = math.sqrt(max(target - float(zp @ zp), 0.0))
        z = zp + t * q
        log.warning("secular equation in the hard case (lambda at pole %.3e)", pole)
        return SecularSolution(z, pole, True, abs(float(z @ z) - target))
    hi = _bracket_hi(phi, lo, pole, float(np.linalg.norm(b)), target)
    lam = brentq(lambda x: phi(x) - target, lo, hi, xtol=1e-14, rtol=ROOT_RTOL, maxiter=500)
    z = solve(lam)
    return SecularSolution(z, lam, False, abs(float(z @ z) - target))


def solve_secular(M, b: np.ndarray, target: float) -> SecularSolution:
    """z = (M + lambda I)^-1 b with ||z||^2 = target and M + lambda I positive
    semidefinite; the returned z meets the norm constraint to rounding."""
    if sp.issparse(M) and M.shape[0] > DENSE_QCQP_LIMIT:
        sol = _secular_sparse(M, b, target)
    else:
        sol = _secular_dense(M.toarray() if sp.issparse(M) else np.asarray(M), b, target)
    norm2 = float(sol.z @ sol.z)
    z = sol.z * math.sqrt(target / norm2) if norm2 > 0 else sol.z
    return SecularSolution(z, sol.lam, sol.hard_case, sol.secular_residual)


def secular_function(M, b: np.ndarray):
    """phi(lambda) = ||(M + lambda I)^-1 b||^2 evaluated through an eigendecomposition."""
    mu, Q = np.linalg.eigh(M.toarray() if sp.issparse(M) else np.asarray(M))
    c = Q.T @ b
    return lambda lam: float(np.sum((c / (mu + lam)) ** 2)), float(mu[0])


# ── solvers ────────────────────────────────────────────────


def _check_pull(sys: AnchoredSystem) -> None:
    if not np.any(sys.b):
        raise DegenerateAnchorError("U a = 0: no sensor feels the anchors")


def _solution(sys: AnchoredSystem, z: np.ndarray, method: str, diag: dict, g: SignedGraph | None) -> SyncSolution:
    sol = SyncSolution.from_scores(sys.expand(z), method, diag)
    if g is not None:
        sol = sol.with_diagnostics(objective=objective_value(g, sol))
    return sol


def qcqp_sync_identity(sys: AnchoredSystem, g: SignedGraph | None = None) -> SyncSolution:
    """Minimize the block quadratic under z^T z = l."""
    _check_pull(sys)
    sec = solve_secular(sys.M, sys.b, float(sys.l))
    diag = {
        "lambda": sec.lam,
        "constraint_residual": abs(float(sec.z @ sec.z) - sys.l),
        "secular_residual": sec.secular_residual,
        "hard_case": int(sec.hard_case),
    }
    log.debug("qcqp-i l=%d lambda=%.6g hard=%s", sys.l, sec.lam, sec.hard_case)
    return _solution(sys, sec.z, "qcqp-i", diag, g)


def qcqp_sync_degree(sys: AnchoredSystem, g: SignedGraph | None = None) -> SyncSolution:
    """Minimize the block quadratic under z^T D_S z = Delta = sum of sensor degrees,
    solved in zbar = D_S^1/2 z and mapped back."""
    _check_pull(sys)
    zero = np.flatnonzero(sys.degrees == 0)
    if len(zero):
        node = int(sys.sensors[zero[0]])
        raise DegenerateDegreeError(node, f"sensor {node} has no incident edge; D_S^-1/2 undefined")
    inv_sqrt = 1.0 / np.sqrt(sys.degrees)
    scale = sp.diags(inv_sqrt)
    m_bar = (scale @ sys.M @ scale).tocsr()
    delta = float(sys.degrees.sum())
    sec = solve_secular(m_bar, inv_sqrt * sys.b, delta)
    z = inv_sqrt * sec.z
    diag = {
        "lambda": sec.lam,
        "delta": delta,
        "constraint_residual": abs(float(sec.z @ sec.z) - delta),
        "secular_residual": sec.secular_residual,
        "hard_case": int(sec.hard_case),
    }
    log.debug("qcqp-d l=%d delta=%.6g lambda=%.6g hard=%s", sys.l, delta, sec.lam, sec.hard_case)
    return _solution(sys, z, "qcqp-d", diag, g)
