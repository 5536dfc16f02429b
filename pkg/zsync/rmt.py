"""Random-matrix view of the noise model: detection threshold, rank-one
plus noise decomposition, correlation bound and the (alpha, eta) heatmap.

In expectation Z_ij = z_i z_j (2p - 1) alpha, so with t = z / sqrt(n)

    Z = theta t t^T + R,   theta = n alpha (2p - 1),
    Var(R_ij) = alpha (1 - alpha + 4 p alpha - 4 p^2 alpha) = sigma^2 / n.

The top eigenvalue leaves the semicircle bulk [-2 sigma, 2 sigma] once
theta > sigma, i.e. roughly p > 1/2 + 1/(2 sqrt(alpha n)).  These checks
put (2p - 1) alpha on the diagonal of Z.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from zsync.core import GroundTruth, SignedGraph, error_rate
from zsync.errors import ParameterError, SyncError
from zsync.generators import NoiseSpec, erdos_renyi_instance, make_rng
from zsync.pool import parallel_map
from zsync.spectral import eig_sync, spectrum, top_eigenpairs

log = logging.getLogger(__name__)

HEATMAP_N = 200
HEATMAP_TRIALS = 20
HEATMAP_RESOLUTION = 20


def _check(n: int, alpha: float, p: float | None = None) -> None:
    if n < 1:
        raise ParameterError(f"need n >= 1, got {n}")
    if not 0 <= alpha <= 1:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    if p is not None and not 0 <= p <= 1:
        raise ParameterError(f"p must lie in [0, 1], got {p}")


def threshold(n: int, alpha: float) -> float:
    """p* = 1/2 + 1/(2 sqrt(alpha n)); infinite when alpha = 0 (nothing observed)."""
    _check(n, alpha)
    if alpha == 0:
        log.warning("alpha = 0: no edges, no detection threshold")
        return math.inf
    return 0.5 + 1.0 / (2.0 * math.sqrt(alpha * n))


@dataclass(frozen=True)
class NoiseAnalysis:
    n: int
    alpha: float
    p: float

    @property
    def theta(self) -> float:
        return self.n * self.alpha * (2 * self.p - 1)

    @property
    def sigma(self) -> float:
        a, p = self.alpha, self.p
        return math.sqrt(max(self.n * a * (1 - a + 4 * p * a - 4 * p * p * a), 0.0))

    @property
    def entry_variance(self) -> float:
        return self.sigma**2 / self.n

    @property
    def p_star(self) -> float:
        return threshold(self.n, self.alpha)

    @property
    def detectable(self) -> bool:
        return self.theta > self.sigma

    def as_dict(self) -> dict:
        return {
            "n": self.n, "alpha": self.alpha, "p": self.p, "theta": self.theta,
            "sigma": self.sigma, "p_star": self.p_star, "detectable": self.detectable,
        }


def analyze(n: int, alpha: float, p: float) -> NoiseAnalysis:
    _check(n, alpha, p)
    return NoiseAnalysis(int(n), float(alpha), float(p))


def semicircle_support(analysis: NoiseAnalysis) -> tuple[float, float]:
    return -2.0 * analysis.sigma, 2.0 * analysis.sigma


def _semicircle_cdf(x: np.ndarray, sigma: float) -> np.ndarray:
    r = 2.0 * sigma
    x = np.clip(x, -r, r)
    return 0.5 + x * np.sqrt(r * r - x * x) / (math.pi * r * r) + np.arcsin(x / r) / math.pi


def spectrum_histogram(g: SignedGraph, bins: int, alpha: float, p: float) -> pd.DataFrame:
    """Histogram of the full spectrum of Z next to the semicircle's expected counts."""
    report = spectrum(g, 1, histogram_bins=bins)
    df = report.histogram_frame()
    sigma = analyze(g.n, alpha, p).sigma
    if sigma > 0:
        mass = _semicircle_cdf(df["bin_right"].to_numpy(), sigma) - _semicircle_cdf(df["bin_left"].to_numpy(), sigma)
        df["semicircle"] = g.n * mass
    else:
        df["semicircle"] = 0.0
    return df


# ── decomposition checks ───────────────────────────────────


def _with_diagonal(g: SignedGraph, alpha: float, p: float) -> np.ndarray:
    z = g.to_dense()
    np.fill_diagonal(z, (2 * p - 1) * alpha)
    return z


def _residual(g: SignedGraph, truth: GroundTruth, alpha: float, p: float) -> tuple[np.ndarray, np.ndarray]:
    if truth.n != g.n:
        raise ParameterError(f"truth has {truth.n} entries, graph has {g.n} nodes")
    z = _with_diagonal(g, alpha, p)
    s = truth.z.astype(float)
    return z, z - alpha * (2 * p - 1) * np.outer(s, s)


@dataclass(frozen=True)
class ResidualStats:
    mean: float
    variance: float
    expected_variance: float

    @property
    def relative_error(self) -> float:
        if self.expected_variance == 0:
            return abs(self.variance)
        return abs(self.variance - self.expected_variance) / self.expected_variance


def rank_one_decomposition_check(g: SignedGraph, truth: GroundTruth, alpha: float, p: float) -> ResidualStats:
    """Empirical mean and variance of the off-diagonal entries of
    R = Z - n alpha (2p - 1) t t^T against alpha (1 - alpha + 4 p alpha - 4 p^2 alpha)."""
    _check(g.n, alpha, p)
    _, r = _residual(g, truth, alpha, p)
    i, j = np.triu_indices(g.n, k=1)
    off = r[i, j]
    return ResidualStats(float(off.mean()), float(off.var()), analyze(g.n, alpha, p).entry_variance)


@dataclass(frozen=True)
class CorrelationBound:
    bound: float            # (lambda_1(Z) - lambda_1(R)) / theta
    measured: float         # <v_1, t>^2
    lambda_1: float
    lambda_1_residual: float
    two_sigma: float        # semicircle edge, the analytic stand-in for lambda_1(R)
    applicable: bool

    @property
    def holds(self) -> bool:
        return not self.applicable or self.measured >= self.bound - 1e-6


def correlation_bound(g: SignedGraph, truth: GroundTruth, alpha: float, p: float) -> CorrelationBound:
    """Lower bound on the squared overlap of the top eigenvector with the truth.

    Only meaningful for p > 1/2 (theta > 0); otherwise reported as not applicable.
    """
    _check(g.n, alpha, p)
    z, r = _residual(g, truth, alpha, p)
    top = top_eigenpairs(z, 1)
    lam_r = float(top_eigenpairs(r, 1).values[0])
    lam_z = float(top.values[0])
    t = truth.z / math.sqrt(g.n)
    measured = float((top.vectors[:, 0] @ t) ** 2)
    info = analyze(g.n, alpha, p)
    applicable = p > 0.5 and alpha > 0
    bound = (lam_z - lam_r) / info.theta if applicable else math.nan
    result = CorrelationBound(bound, measured, lam_z, lam_r, 2 * info.sigma, applicable)
    if applicable and not result.holds:
        log.warning("correlation bound violated: measured %.6f < bound %.6f", measured, bound)
    return result


# ── heatmap ────────────────────────────────────────────────


@dataclass(frozen=True)
class _Cell:
    index: int
    n: int
    alpha: float
    eta: float
    trials: int
    normalized: bool
    seed: int


def _heatmap_cell(cell: _Cell) -> dict:
    taus, gaps = [], []
    failed = 0
    for trial in range(cell.trials):
        try:
            g, truth = erdos_renyi_instance(cell.n, NoiseSpec(cell.alpha, cell.eta),
                                            rng=make_rng(cell.seed, cell.index, trial))
            sol = eig_sync(g, normalized=cell.normalized)
        except SyncError as e:
            log.warning("heatmap cell alpha=%.3f eta=%.3f trial %d failed: %s", cell.alpha, cell.eta, trial, e)
            failed += 1
            continue
        taus.append(error_rate(sol, truth))
        gaps.append(sol.diagnostics.get("gap_12", math.nan))
    info = analyze(cell.n, cell.alpha, 1.0 - cell.eta)
    return {
        "alpha": cell.alpha,
        "eta": cell.eta,
        "tau_median": float(np.median(taus)) if taus else math.nan,
        "gap_median": float(np.nanmedian(gaps)) if taus else math.nan,
        "p_star": info.p_star,
        "detectable": info.detectable,
        "failed": failed == cell.trials,
    }


def default_grids(resolution: int = HEATMAP_RESOLUTION) -> tuple[np.ndarray, np.ndarray]:
    """alpha in (0, 1] and eta in [0, 0.5]."""
    alphas = np.linspace(1.0 / resolution, 1.0, resolution)
    etas = np.linspace(0.0, 0.5, resolution)
    return alphas, etas


def heatmap_sweep(n: int = HEATMAP_N, alpha_grid=None, eta_grid=None, trials: int = HEATMAP_TRIALS,
                  normalized: bool = True, seed: int = 0, jobs: int | None = None) -> pd.DataFrame:
    """Median error rate and spectral gap per (alpha, eta) cell, with p* alongside.

    Columns: alpha, eta, tau_median, gap_median, p_star, detectable, failed.
    Cell seeds derive from (seed, cell index, trial).
    """
    default_alpha, default_eta = default_grids()
    alpha_grid = default_alpha if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    eta_grid = default_eta if eta_grid is None else np.asarray(eta_grid, dtype=float)
    if len(alpha_grid) == 0 or len(eta_grid) == 0:
        raise ParameterError("heatmap grids must be non-empty")
    if trials < 1:
        raise ParameterError("need at least one trial per cell")
    cells = []
    for a in alpha_grid:
        for e in eta_grid:
            cells.append(_Cell(len(cells), int(n), float(a), float(e), int(trials), bool(normalized), int(seed)))
    return pd.DataFrame(parallel_map(_heatmap_cell, cells, jobs))


def threshold_curve(n: int, alpha_grid) -> pd.DataFrame:
    """p* and the matching eta* = 1 - p* along an alpha grid."""
    rows = []
    for a in alpha_grid:
        p_star = threshold(n, float(a))
        rows.append({"alpha": float(a), "p_star": p_star, "eta_star": 1.0 - p_star})
    return pd.DataFrame(rows)
