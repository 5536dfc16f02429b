"""Artifact files: edge lists, truth/partition/anchor tables, solutions and
JSON manifests.  All CSVs are written with 0-based node ids, a header row,
'\\n' line endings and 17 significant digits, so re-reading is lossless and
re-writing is byte-identical."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from zsync.core import AnchorSet, GroundTruth, Partition, SignedGraph, SyncSolution
from zsync.errors import FormatError, SyncError

FLOAT_FORMAT = "%.17g"

GRAPH_COLUMNS = ["i", "j", "w"]
TRUTH_COLUMNS = ["i", "z"]
PARTITION_COLUMNS = ["i", "block"]
ANCHOR_COLUMNS = ["i", "a"]
SOLUTION_COLUMNS = ["node", "estimate", "score"]


# ── generic helpers ────────────────────────────────────────


def write_frame(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_frame(path: str | Path, columns: list[str]) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError as e:
        raise FormatError(f"{path}: empty file") from e
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise FormatError(f"{path}: {e}") from e
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise FormatError(f"{path}: missing column(s) {', '.join(missing)}")
    return df


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(payload: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise FormatError(f"{path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from e


def _node_column(df: pd.DataFrame, col: str, path, n: int | None) -> np.ndarray:
    """Check that a node-keyed table covers 0..n-1 exactly once; return the sort order."""
    ids = df[col].to_numpy()
    expected = len(df) if n is None else n
    if len(ids) != expected or not np.array_equal(np.sort(ids), np.arange(expected)):
        raise FormatError(f"{path}: '{col}' must list every node 0..{expected - 1} exactly once")
    return np.argsort(ids)


# ── graph ──────────────────────────────────────────────────


def write_graph(g: SignedGraph, path: str | Path) -> Path:
    df = pd.DataFrame({"i": g.rows, "j": g.cols, "w": g.weights})
    return write_frame(df, path)


def read_graph(path: str | Path, n: int | None = None) -> SignedGraph:
    """Read an upper-triangle edge list.  Without `n` the node count is the
    largest index + 1 (trailing isolated nodes need `n` from the manifest)."""
    df = read_frame(path, GRAPH_COLUMNS)
    rows = df["i"].to_numpy(dtype=np.int64)
    cols = df["j"].to_numpy(dtype=np.int64)
    if n is None:
        n = int(max(rows.max(initial=-1), cols.max(initial=-1))) + 1
    try:
        return SignedGraph(max(n, 1), rows, cols, df["w"].to_numpy(dtype=float))
    except SyncError as e:
        raise FormatError(f"{path}: {e}") from e


# ── node tables ────────────────────────────────────────────


def write_truth(truth: GroundTruth, path: str | Path) -> Path:
    return write_frame(pd.DataFrame({"i": np.arange(truth.n), "z": truth.z}), path)


def read_truth(path: str | Path, n: int | None = None) -> GroundTruth:
    df = read_frame(path, TRUTH_COLUMNS)
    order = _node_column(df, "i", path, n)
    try:
        return GroundTruth(df["z"].to_numpy()[order])
    except SyncError as e:
        raise FormatError(f"{path}: {e}") from e


def write_partition(partition: Partition, path: str | Path) -> Path:
    df = pd.DataFrame({"i": np.arange(partition.n), "block": partition.block_of})
    return write_frame(df, path)


def read_partition(path: str | Path, n: int | None = None) -> Partition:
    df = read_frame(path, PARTITION_COLUMNS)
    order = _node_column(df, "i", path, n)
    try:
        return Partition(df["block"].to_numpy()[order])
    except SyncError as e:
        raise FormatError(f"{path}: {e}") from e


def write_anchors(anchors: AnchorSet, path: str | Path) -> Path:
    return write_frame(pd.DataFrame({"i": anchors.nodes, "a": anchors.values}), path)


def read_anchors(path: str | Path) -> AnchorSet:
    df = read_frame(path, ANCHOR_COLUMNS)
    try:
        return AnchorSet(df["i"].to_numpy(), df["a"].to_numpy())
    except SyncError as e:
        raise FormatError(f"{path}: {e}") from e


# ── solutions ──────────────────────────────────────────────


def solution_frame(sol: SyncSolution) -> pd.DataFrame:
    return pd.DataFrame({"node": np.arange(sol.n), "estimate": sol.estimates, "score": sol.scores})


def write_solution(sol: SyncSolution, path: str | Path) -> Path:
    return write_frame(solution_frame(sol), path)


def read_solution(path: str | Path, method: str = "file") -> SyncSolution:
    df = read_frame(path, SOLUTION_COLUMNS)
    order = _node_column(df, "node", path, None)
    try:
        return SyncSolution(df["estimate"].to_numpy()[order], df["score"].to_numpy()[order], method)
    except SyncError as e:
        raise FormatError(f"{path}: {e}") from e
