"""One entry point for every synchronization method by name."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from zsync.anchored import build_anchored_system, qcqp_sync_degree, qcqp_sync_identity
from zsync.core import AnchorSet, Partition, SignedGraph, SyncSolution
from zsync.errors import ParameterError
from zsync.ksync import KSYNC_METHODS, solve_ksync
from zsync.mps import CHANNEL_P, MAX_ITER, TOL, MpsOptions, mps_sync
from zsync.sdp import SdpOptions, sdp_sync, sdp_sync_anchored_XY, sdp_sync_anchored_Y
from zsync.spectral import eig_sync, laplacian_sync

log = logging.getLogger(__name__)

PLAIN_METHODS = ("eig", "eig-raw", "laplacian", "sdp", "mps")
ANCHORED_METHODS = ("sdp-y", "sdp-xy", "qcqp-i", "qcqp-d")
PARTITION_METHODS = KSYNC_METHODS
METHODS = PLAIN_METHODS + ANCHORED_METHODS + PARTITION_METHODS


@dataclass(frozen=True)
class SolveOptions:
    seed: int = 0
    channel_p: float = CHANNEL_P
    mps_max_iter: int = MAX_ITER
    mps_tol: float = TOL
    damping: float = 0.0
    solver: str = "auto"
    signed_only: bool = False
    tally: str = "count"

    def mps(self) -> MpsOptions:
        return MpsOptions(self.channel_p, self.mps_max_iter, self.mps_tol, self.damping, seed=self.seed)

    def sdp(self) -> SdpOptions:
        return SdpOptions(seed=self.seed)


def needs_anchors(method: str) -> bool:
    return method in ANCHORED_METHODS


def needs_partition(method: str) -> bool:
    return method in PARTITION_METHODS


def solve(method: str, g: SignedGraph, anchors: AnchorSet | None = None,
          partition: Partition | None = None, options: SolveOptions | None = None) -> SyncSolution:
    """Run `method` on g; anchored methods need anchors, k-methods a partition.

    mps uses anchors when given; every other plain method ignores them.
    """
    opts = options or SolveOptions()
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if needs_anchors(method) and (anchors is None or anchors.h == 0):
        raise ParameterError(f"method {method} needs anchors")
    if needs_partition(method) and partition is None:
        raise ParameterError(f"method {method} needs a partition")
    log.debug("solving n=%d m=%d with %s", g.n, g.m, method)

    if method == "eig":
        return eig_sync(g, normalized=True, solver=opts.solver)
    if method == "eig-raw":
        return eig_sync(g, normalized=False, solver=opts.solver)
    if method == "laplacian":
        return laplacian_sync(g, solver=opts.solver)
    if method == "sdp":
        return sdp_sync(g, opts.sdp()).rounded
    if method == "mps":
        return mps_sync(g, anchors, opts.mps())
    if method == "sdp-y":
        return sdp_sync_anchored_Y(g, anchors, opts.sdp()).rounded
    if method == "sdp-xy":
        return sdp_sync_anchored_XY(g, anchors, opts.sdp()).rounded
    if method == "qcqp-i":
        return qcqp_sync_identity(build_anchored_system(g, anchors), g)
    if method == "qcqp-d":
        return qcqp_sync_degree(build_anchored_system(g, anchors), g)
    return solve_ksync(method, g, partition, opts.seed, opts.mps(), anchors, opts.signed_only, opts.tally)
