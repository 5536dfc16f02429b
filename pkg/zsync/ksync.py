"""Partition-constrained synchronization (k-SYNC): every block of nodes
shares one unknown sign."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import pandas as pd

from zsync.core import Partition, SignedGraph, SyncSolution, error_rate, objective_value
from zsync.errors import ParameterError
from zsync.mps import MpsOptions, mps_sync
from zsync.sdp import SdpOptions, sdp_ksync
from zsync.spectral import eig_sync

log = logging.getLogger(__name__)

KSYNC_METHODS = ("eig-k", "mveig-k", "part-k", "sdp-k", "mps-k")
TALLIES = ("count", "mass")


@dataclass(frozen=True, eq=False)
class PartitionGraph:
    k: int
    graph: SignedGraph     # k-node quotient graph, zero-weight pairs omitted
    counts: pd.DataFrame   # u, v, e_plus, e_minus for every adjacent block pair

    @property
    def weights(self):
        return self.graph.adjacency


def build_partition_graph(g: SignedGraph, partition: Partition, signed_only: bool = False,
                          tally: str = "count") -> PartitionGraph:
    """Quotient graph on blocks from inter-block edges.

    Weight of (u, v) is +E+/E when E+ > E-, -E-/E when E- > E+ and 0 on a
    tie; with `signed_only` just the majority sign.  `tally="mass"` sums |w|
    instead of counting edges.
    """
    if tally not in TALLIES:
        raise ParameterError(f"tally must be one of {', '.join(TALLIES)}, got {tally!r}")
    inter = ~partition.intra_mask(g)
    bu = partition.block_of[g.rows[inter]]
    bv = partition.block_of[g.cols[inter]]
    w = g.weights[inter]
    amount = np.abs(w) if tally == "mass" else np.ones(len(w))
    df = pd.DataFrame({
        "u": np.minimum(bu, bv),
        "v": np.maximum(bu, bv),
        "e_plus": np.where(w > 0, amount, 0.0),
        "e_minus": np.where(w < 0, amount, 0.0),
    })
    counts = df.groupby(["u", "v"], as_index=False, sort=True)[["e_plus", "e_minus"]].sum()
    total = counts["e_plus"] + counts["e_minus"]
    major = np.maximum(counts["e_plus"], counts["e_minus"])
    sign = np.sign(counts["e_plus"] - counts["e_minus"])
    weight = sign if signed_only else sign * major / total
    keep = (weight != 0).to_numpy()
    graph = SignedGraph(partition.k, counts["u"].to_numpy()[keep], counts["v"].to_numpy()[keep],
                        weight.to_numpy(dtype=float)[keep])
    return PartitionGraph(partition.k, graph, counts)


def _tagged(sol: SyncSolution, method: str, g: SignedGraph, partition: Partition) -> SyncSolution:
    return SyncSolution(sol.estimates, sol.scores, method, {
        **sol.diagnostics, "k": partition.k, "objective": objective_value(g, sol),
    })


def eig_ksync(g: SignedGraph, partition: Partition) -> SyncSolution:
    """Eigenvector method ignoring the partition constraint."""
    if partition.n != g.n:
        raise ParameterError(f"partition covers {partition.n} nodes, graph has {g.n}")
    return _tagged(eig_sync(g), "eig-k", g, partition)


def majority_vote(estimates: np.ndarray, partition: Partition) -> np.ndarray:
    """Per-node block score: mean of the block's estimates (>= 0 means at least half are +1)."""
    sums = np.bincount(partition.block_of, weights=estimates, minlength=partition.k)
    return (sums / partition.sizes)[partition.block_of]


def mveig_ksync(g: SignedGraph, partition: Partition) -> SyncSolution:
    """Eigenvector estimates overwritten by each block's majority sign (ties -> +1)."""
    base = eig_ksync(g, partition)
    scores = majority_vote(base.estimates, partition)
    sol = SyncSolution.from_scores(scores, "mveig-k", base.diagnostics)
    return sol.with_diagnostics(objective=objective_value(g, sol))


def part_ksync(g: SignedGraph, partition: Partition, signed_only: bool = False,
               tally: str = "count") -> SyncSolution:
    """Normalized eigenvector synchronization of the partition graph; each
    block's sign goes to all of its members."""
    pg = build_partition_graph(g, partition, signed_only, tally)
    block = eig_sync(pg.graph)
    if block.diagnostics.get("components", 1) > 1:
        log.warning("part-k: partition graph has %d components", block.diagnostics["components"])
    sol = SyncSolution.from_scores(block.scores[partition.block_of], "part-k", block.diagnostics)
    return sol.with_diagnostics(k=partition.k, objective=objective_value(g, sol))


def solve_ksync(method: str, g: SignedGraph, partition: Partition, seed: int = 0,
                mps_opts: MpsOptions | None = None, anchors=None, signed_only: bool = False,
                tally: str = "count") -> SyncSolution:
    if method == "eig-k":
        return eig_ksync(g, partition)
    if method == "mveig-k":
        return mveig_ksync(g, partition)
    if method == "part-k":
        return part_ksync(g, partition, signed_only, tally)
    if method == "sdp-k":
        return sdp_ksync(g, partition, SdpOptions(seed=seed)).rounded
    if method == "mps-k":
        sol = mps_sync(g, anchors, mps_opts, partition)
        return sol.with_diagnostics(k=partition.k, objective=objective_value(g, sol))
    raise ParameterError(f"unknown k-SYNC method {method!r}; choose from {', '.join(KSYNC_METHODS)}")


def run_ksync_suite(g: SignedGraph, partition: Partition, truth, methods=KSYNC_METHODS,
                    seeds=(0,), timing: bool = False) -> pd.DataFrame:
    """Error rate of every method (and seed, for the seeded solvers) on one instance.

    Columns: method, seed, tau, iterations (+ wall_ms with `timing`).
    """
    rows = []
    for method in methods:
        for seed in seeds:
            start = time.perf_counter()
            sol = solve_ksync(method, g, partition, seed)
            row = {
                "method": method,
                "seed": int(seed),
                "tau": error_rate(sol, truth),
                "iterations": int(sol.diagnostics.get("iterations", 0)),
            }
            if timing:
                row["wall_ms"] = (time.perf_counter() - start) * 1000.0
            rows.append(row)
    return pd.DataFrame(rows)
