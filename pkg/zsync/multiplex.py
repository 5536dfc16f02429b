"""Multiplex signed networks built from per-layer similarity matrices
(e.g. roll-call agreement per congress).

The supra-adjacency matrix is W = H + eps*Omega: H block-diagonal with the
layers, Omega joining occurrences of the same entity across layers.  The
sign transform turns each similarity into a measurement, sign(2W - 1) or
the linear 2W - 1, keeping the coupling at eps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.sparse as sp

from zsync.core import Partition, SignedGraph, SyncSolution
from zsync.errors import DimensionError, FormatError, ParameterError
from zsync.formats import read_frame, read_json, write_frame, write_json

log = logging.getLogger(__name__)

TRANSFORMS = ("sign", "linear")
COUPLINGS = ("categorical", "ordinal")
PARTIES = ("D", "R")
IDENTITY_COLUMNS = ["layer", "local_id", "entity_id", "label"]


@dataclass(frozen=True, eq=False)
class MultiplexVoting:
    layers: list          # C dense symmetric similarity matrices, entries in [0, 1]
    identity: list        # per layer: entity id of every local index
    epsilon: float = 1.0
    labels: list | None = None  # per layer: party label of every local index

    def __post_init__(self):
        layers = [np.asarray(w, dtype=float) for w in self.layers]
        identity = [np.asarray(ids).reshape(-1) for ids in self.identity]
        if not layers:
            raise ParameterError("a multiplex needs at least one layer")
        if len(identity) != len(layers):
            raise DimensionError(f"{len(layers)} layers but {len(identity)} identity maps")
        for t, (w, ids) in enumerate(zip(layers, identity)):
            if w.ndim != 2 or w.shape[0] != w.shape[1]:
                raise DimensionError(f"layer {t}: similarity matrix must be square, got {w.shape}")
            if len(ids) != w.shape[0]:
                raise DimensionError(f"layer {t}: {w.shape[0]} nodes but {len(ids)} identity entries")
            if not np.allclose(w, w.T, atol=1e-12):
                raise ParameterError(f"layer {t}: similarity matrix is not symmetric")
            if np.any(w < 0) or np.any(w > 1) or not np.all(np.isfinite(w)):
                raise ParameterError(f"layer {t}: similarities must lie in [0, 1]")
            if len(np.unique(ids)) != len(ids):
                raise ParameterError(f"layer {t}: an entity appears twice")
        if not 0 <= self.epsilon <= 1:
            raise ParameterError(f"coupling epsilon must lie in [0, 1], got {self.epsilon}")
        labels = None
        if self.labels is not None:
            labels = [np.asarray(lab, dtype=object).reshape(-1) for lab in self.labels]
            if [len(x) for x in labels] != [len(x) for x in identity]:
                raise DimensionError("labels must match the identity map layer by layer")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "identity", identity)
        object.__setattr__(self, "labels", labels)

    @property
    def C(self) -> int:
        return len(self.layers)

    @property
    def layer_sizes(self) -> list[int]:
        return [len(ids) for ids in self.identity]

    @property
    def n(self) -> int:
        return sum(self.layer_sizes)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.layer_sizes)])

    @cached_property
    def layer_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.C), self.layer_sizes)

    @cached_property
    def entity(self) -> np.ndarray:
        """Entity id of every supra node."""
        return np.concatenate(self.identity)

    @cached_property
    def partition(self) -> Partition:
        return Partition.from_labels(self.entity.tolist())

    def label_vector(self) -> np.ndarray:
        if self.labels is None:
            raise ParameterError("this multiplex carries no party labels")
        return np.concatenate(self.labels)

    def with_epsilon(self, epsilon: float) -> MultiplexVoting:
        return MultiplexVoting(self.layers, self.identity, epsilon, self.labels)


# ── assembly ───────────────────────────────────────────────


def coupling_pairs(m: MultiplexVoting, coupling: str = "categorical") -> tuple[np.ndarray, np.ndarray]:
    """Supra node pairs (i < j) joining occurrences of one entity.

    categorical: every pair of occurrences, q choose 2 for q occurrences;
    ordinal: only occurrences in consecutive layers.
    """
    if coupling not in COUPLINGS:
        raise ParameterError(f"coupling must be one of {', '.join(COUPLINGS)}, got {coupling!r}")
    rows, cols = [], []
    for nodes in m.partition.blocks:
        if len(nodes) < 2:
            continue
        nodes = np.sort(nodes)
        if coupling == "categorical":
            i, j = np.triu_indices(len(nodes), k=1)
            a, b = nodes[i], nodes[j]
        else:
            a, b = nodes[:-1], nodes[1:]
            adjacent = m.layer_of[b] - m.layer_of[a] == 1
            a, b = a[adjacent], b[adjacent]
        rows.append(a)
        cols.append(b)
    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(rows), np.concatenate(cols)


def _layer_entries(m: MultiplexVoting):
    """(rows, cols, similarity) of all intra-layer pairs in supra indexing."""
    rows, cols, vals = [], [], []
    for t, w in enumerate(m.layers):
        i, j = np.triu_indices(w.shape[0], k=1)
        rows.append(i + m.offsets[t])
        cols.append(j + m.offsets[t])
        vals.append(w[i, j])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def assemble_supra(m: MultiplexVoting, coupling: str = "categorical") -> sp.csr_matrix:
    """W = H + eps*Omega as a symmetric sparse matrix with zero diagonal."""
    r, c, v = _layer_entries(m)
    cr, cc = coupling_pairs(m, coupling)
    rows = np.concatenate([r, cr])
    cols = np.concatenate([c, cc])
    vals = np.concatenate([v, np.full(len(cr), m.epsilon)])
    upper = sp.csr_matrix((vals, (rows, cols)), shape=(m.n, m.n))
    w = (upper + upper.T).tocsr()
    w.eliminate_zeros()
    return w


def sign_transform(m: MultiplexVoting, transform: str = "sign", theta: float = 0.0,
                   coupling: str = "categorical") -> tuple[SignedGraph, Partition, dict]:
    """Signed measurement graph of a multiplex plus its entity partition.

    Intra-layer similarities map to sign(2W - 1) (or 2W - 1 with
    transform="linear", then hard-thresholded at theta); exact 0.5 carries no
    information and is dropped.  Coupling pairs carry eps.
    """
    if transform not in TRANSFORMS:
        raise ParameterError(f"transform must be one of {', '.join(TRANSFORMS)}, got {transform!r}")
    if not 0 <= theta < 1:
        raise ParameterError(f"theta must lie in [0, 1), got {theta}")
    r, c, v = _layer_entries(m)
    centered = 2.0 * v - 1.0
    values = np.sign(centered) if transform == "sign" else centered
    undecided = int(np.count_nonzero(centered == 0))
    if undecided:
        log.warning("dropping %d intra-layer entries at exactly 0.5", undecided)
    keep = values != 0
    below = np.zeros(len(values), dtype=bool)
    if transform == "linear" and theta > 0:
        below = keep & (np.abs(values) < theta)
        keep &= ~below
    cr, cc = coupling_pairs(m, coupling) if m.epsilon > 0 else (np.zeros(0, np.int64), np.zeros(0, np.int64))
    g = SignedGraph(
        m.n,
        np.concatenate([r[keep], cr]),
        np.concatenate([c[keep], cc]),
        np.concatenate([values[keep], np.full(len(cr), m.epsilon)]),
    )
    info = {"dropped_half": undecided, "thresholded": int(below.sum()), "coupling_pairs": len(cr)}
    if below.any():
        count = g.components()[0]
        if count > 1:
            log.warning("threshold %.3f leaves the graph in %d components", theta, count)
    return g, m.partition, info


def threshold_entries(g: SignedGraph, theta: float, protect=None) -> SignedGraph:
    """Zero out entries with |Z_ij| < theta; `protect` masks edges that always stay."""
    if not 0 <= theta < 1:
        raise ParameterError(f"theta must lie in [0, 1), got {theta}")
    keep = np.abs(g.weights) >= theta
    if protect is not None:
        keep |= np.asarray(protect, dtype=bool)
    out = SignedGraph(g.n, g.rows[keep], g.cols[keep], g.weights[keep])
    before, after = g.components()[0], out.components()[0]
    if after > before:
        log.warning("threshold %.3f disconnects the graph (%d -> %d components)", theta, before, after)
    return out


# ── reports ────────────────────────────────────────────────


def party_signs(m: MultiplexVoting, parties=PARTIES) -> np.ndarray:
    """+1 for the first party, -1 for the second, 0 for anyone else."""
    labels = m.label_vector()
    return np.where(labels == parties[0], 1, np.where(labels == parties[1], -1, 0))


def _aligned(sol: SyncSolution, z: np.ndarray) -> np.ndarray:
    """Estimates flipped globally to best match the labelled nodes."""
    if sol.n != len(z):
        raise DimensionError(f"solution has {sol.n} entries, multiplex has {len(z)} nodes")
    known = z != 0
    wrong = int(np.count_nonzero(sol.estimates[known] != z[known]))
    return -sol.estimates if wrong > int(known.sum()) - wrong else sol.estimates


def misclassification_report(sol: SyncSolution, m: MultiplexVoting, parties=PARTIES) -> pd.DataFrame:
    """Per layer and party: members estimated on the other side, after alignment.

    Nodes with neither party label are left out.
    """
    z = party_signs(m, parties)
    est = _aligned(sol, z)
    rows = []
    for t in range(m.C):
        sl = slice(m.offsets[t], m.offsets[t + 1])
        for party, s in zip(parties, (1, -1)):
            members = z[sl] == s
            rows.append({
                "layer": t,
                "party": party,
                "members": int(members.sum()),
                "misclassified": int(np.count_nonzero(members & (est[sl] != s))),
            })
    return pd.DataFrame(rows)


def entity_report(sol: SyncSolution, m: MultiplexVoting, parties=PARTIES) -> pd.DataFrame:
    """Per entity: terms served M, terms misclassified T and T/M, worst first."""
    z = party_signs(m, parties)
    est = _aligned(sol, z)
    labels = m.label_vector()
    df = pd.DataFrame({
        "entity_id": m.entity,
        "label": labels,
        "served": 1,
        "misclassified": ((z != 0) & (est != z)).astype(int),
    })
    out = df.groupby("entity_id", sort=False).agg(
        label=("label", "first"), served=("served", "sum"), misclassified=("misclassified", "sum")
    ).reset_index()
    out["ratio"] = out["misclassified"] / out["served"]
    return out.sort_values(["ratio", "misclassified", "entity_id"], ascending=[False, False, True],
                           kind="stable").reset_index(drop=True)


def layer_spectra(m: MultiplexVoting, r: int = 5) -> pd.DataFrame:
    """Top-r eigenvalues of each layer's similarity matrix with lambda_2 - lambda_3
    and lambda_2 / lambda_3 (bipolarity proxies)."""
    rows = []
    for t, w in enumerate(m.layers):
        vals = np.linalg.eigvalsh(w)[::-1][:r]
        vals = np.concatenate([vals, np.full(r - len(vals), np.nan)])
        row = {"layer": t}
        row.update({f"lambda_{i + 1}": float(v) for i, v in enumerate(vals)})
        row["gap_23"] = row["lambda_2"] - row["lambda_3"]
        row["ratio_23"] = row["lambda_2"] / row["lambda_3"] if row["lambda_3"] else np.nan
        rows.append(row)
    return pd.DataFrame(rows)


def multiplicity_report(m: MultiplexVoting) -> pd.DataFrame:
    """Distinct entities and mean occurrences per entity as layers are added."""
    rows = []
    for t in range(1, m.C + 1):
        counts = pd.Series(np.concatenate(m.identity[:t])).value_counts()
        rows.append({"layers": t, "entities": len(counts), "mean_multiplicity": float(counts.mean())})
    return pd.DataFrame(rows)


def multiplicity_histogram(m: MultiplexVoting) -> pd.DataFrame:
    counts = pd.Series(m.entity).value_counts()
    hist = counts.value_counts().sort_index()
    return pd.DataFrame({"multiplicity": hist.index.to_numpy(), "entities": hist.to_numpy()})


# ── files ──────────────────────────────────────────────────


def write_multiplex(m: MultiplexVoting, directory: str | Path, transform: str = "sign",
                    theta: float = 0.0, coupling: str = "categorical") -> Path:
    """manifest.json + layer_XX.csv (dense, header of local ids) + identity.csv."""
    directory = Path(directory)
    names = []
    for t, w in enumerate(m.layers):
        name = f"layer_{t:02d}.csv"
        write_frame(pd.DataFrame(w, columns=[str(i) for i in range(w.shape[0])]), directory / name)
        names.append(name)
    labels = m.labels or [np.full(len(ids), "", dtype=object) for ids in m.identity]
    identity = pd.DataFrame({
        "layer": m.layer_of,
        "local_id": np.concatenate([np.arange(s) for s in m.layer_sizes]),
        "entity_id": m.entity,
        "label": np.concatenate(labels),
    })
    write_frame(identity, directory / "identity.csv")
    manifest = {
        "epsilon": m.epsilon,
        "transform": transform,
        "theta": theta,
        "coupling": coupling,
        "layers": names,
        "identity": "identity.csv",
    }
    return write_json(manifest, directory / "manifest.json")


def read_multiplex(manifest_path: str | Path) -> tuple[MultiplexVoting, dict]:
    """Load a multiplex and its assembly options from a manifest."""
    manifest_path = Path(manifest_path)
    manifest = read_json(manifest_path)
    base = manifest_path.parent
    try:
        layer_files = manifest["layers"]
        identity_file = manifest["identity"]
    except KeyError as e:
        raise FormatError(f"{manifest_path}: manifest lacks {e}") from e

    layers = []
    for name in layer_files:
        try:
            layers.append(pd.read_csv(base / name, float_precision="round_trip").to_numpy(dtype=float))
        except (OSError, ValueError, pd.errors.ParserError) as e:
            raise FormatError(f"{base / name}: {e}") from e
    ident = read_frame(base / identity_file, IDENTITY_COLUMNS)
    ident["label"] = ident["label"].fillna("").astype(str)
    identity, labels = [], []
    for t in range(len(layers)):
        rows = ident[ident["layer"] == t].sort_values("local_id")
        if not np.array_equal(rows["local_id"].to_numpy(), np.arange(layers[t].shape[0])):
            raise FormatError(f"{identity_file}: layer {t} must list local ids 0..{layers[t].shape[0] - 1}")
        identity.append(rows["entity_id"].to_numpy())
        labels.append(rows["label"].to_numpy(dtype=object))
    has_labels = any((lab != "").any() for lab in labels)
    options = {
        "transform": manifest.get("transform", "sign"),
        "theta": float(manifest.get("theta", 0.0)),
        "coupling": manifest.get("coupling", "categorical"),
    }
    try:
        m = MultiplexVoting(layers, identity, float(manifest.get("epsilon", 1.0)), labels if has_labels else None)
    except (ParameterError, DimensionError) as e:
        raise FormatError(f"{manifest_path}: {e}") from e
    return m, options
