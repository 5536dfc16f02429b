"""Named experiment presets: parameter sweeps whose tidy result tables are
the data behind each comparison (heatmaps, noise curves, anchor curves,
k-SYNC curves, incremental multiplex, channel sensitivity).

Every preset expands its parameters into (cell, seed) trials, runs them
through the process pool and returns rows in trial order, so the table is
the same for any worker count.  A trial's randomness derives only from
(seed, cell index, seed index).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from zsync.core import Partition, error_rate
from zsync.errors import ParameterError, SyncError
from zsync.formats import read_json
from zsync.generators import (
    CongressModelSpec,
    NoiseSpec,
    complete_with_random_bad,
    complete_with_regular_bad,
    congress_model_I,
    equal_partition_benchmark_II,
    erdos_renyi_instance,
    make_rng,
    preferential_attachment_instance,
    random_anchors,
    synthetic_voting,
)
from zsync.mps import SENSITIVITY_GRID, channel_sensitivity
from zsync.multiplex import MultiplexVoting, party_signs, sign_transform
from zsync.pool import parallel_map
from zsync.rmt import default_grids, heatmap_sweep
from zsync.solvers import SolveOptions, solve

log = logging.getLogger(__name__)

ETA_GRID = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]
BAD_DEGREE_GRID = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90]
ANCHOR_GRID = [1, 10, 20, 30]
KSYNC_ALL = ["eig-k", "mveig-k", "part-k", "sdp-k", "mps-k"]
ANCHORED_ALL = ["qcqp-i", "qcqp-d", "sdp-y", "sdp-xy", "mps"]


@dataclass(frozen=True)
class Trial:
    preset: str
    cell: int
    seed_index: int
    seed: int
    params: dict = field(hash=False)

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed, self.cell, self.seed_index)

    def instance_seed(self) -> int:
        return int(self.rng().integers(2**31 - 1))


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    defaults: dict
    cells: Callable[[dict], list[dict]]
    run: Callable[[Trial], list[dict]]


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    preset: str
    params: dict
    frame: pd.DataFrame


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - start) * 1000.0


def _method_rows(trial: Trial, methods, run_one) -> list[dict]:
    """One row per method; a method that raises is recorded as failed."""
    rows = []
    for method in methods:
        row = {**trial.params, "seed": trial.seed_index, "method": method}
        try:
            (tau, iterations), wall = _timed(run_one, method)
        except SyncError as e:
            log.warning("%s cell %d seed %d: %s failed: %s", trial.preset, trial.cell,
                        trial.seed_index, method, e)
            tau, iterations, wall = math.nan, 0, math.nan
        row.update({"tau": tau, "iterations": iterations, "failed": math.isnan(tau)})
        if trial.params.get("timing"):
            row["wall_ms"] = wall
        row.pop("timing", None)
        rows.append(row)
    return rows


def _grid(**axes) -> list[dict]:
    cells = [{}]
    for name, values in axes.items():
        cells = [{**c, name: v} for c in cells for v in values]
    return cells


# ── spectral noise sweeps ──────────────────────────────────


def _noise_curve_cells(p: dict) -> list[dict]:
    return [{"n": p["n"], "alpha": p["alpha"], "p": float(q), "normalized": p["normalized"]}
            for q in p["p_grid"]]


def _noise_curve_trial(trial: Trial) -> list[dict]:
    c = trial.params
    g, truth = erdos_renyi_instance(c["n"], NoiseSpec(c["alpha"], 1.0 - c["p"]), rng=trial.rng())
    sol = solve("eig" if c["normalized"] else "eig-raw", g)
    return [{**c, "seed": trial.seed_index, "tau": error_rate(sol, truth),
             "gap_12": sol.diagnostics.get("gap_12", math.nan)}]


# ── MPS vs eigenvector on complete graphs ──────────────────


def _bad_cells(p: dict) -> list[dict]:
    return [{"n": p["n"], **c, "timing": p["timing"]}
            for c in _grid(bad_degree=p["d_grid"], h=p["h_grid"])]


def _bad_trial(builder) -> Callable[[Trial], list[dict]]:
    def run(trial: Trial) -> list[dict]:
        c = trial.params
        rng = trial.rng()
        g, truth = builder(c, int(rng.integers(2**31 - 1)))
        anchors = random_anchors(truth, c["h"], rng)
        ignore = anchors.mask(g.n)

        def one(method):
            sol = solve(method, g, anchors if method == "mps" else None)
            return error_rate(sol, truth, ignore), int(sol.diagnostics.get("iterations", 0))

        return _method_rows(trial, ("eig", "mps"), one)
    return run


def _regular_bad(c: dict, seed: int):
    return complete_with_regular_bad(c["n"], int(c["bad_degree"]), seed)


def _random_bad(c: dict, seed: int):
    return complete_with_random_bad(c["n"], float(c["bad_degree"]), seed)


def _pa_cells(p: dict) -> list[dict]:
    return [{"n": p["n"], "m_pa": p["m_pa"], **c, "timing": p["timing"]}
            for c in _grid(bad_degree=p["d_grid"], h=p["h_grid"])]


def _pa_bad(c: dict, seed: int):
    return preferential_attachment_instance(c["n"], c["m_pa"], float(c["bad_degree"]), seed)


# ── anchored comparison ────────────────────────────────────


def _anchor_cells(p: dict) -> list[dict]:
    return [{"n": p["n"], "alpha": p["alpha"], **c, "timing": p["timing"]}
            for c in _grid(h=p["h_grid"], eta=p["eta_grid"])]


def _anchor_trial(trial: Trial) -> list[dict]:
    c = trial.params
    rng = trial.rng()
    g, truth = erdos_renyi_instance(c["n"], NoiseSpec(c["alpha"], c["eta"]), rng=rng)
    anchors = random_anchors(truth, c["h"], rng)
    ignore = anchors.mask(g.n)
    methods = c.get("methods") or ANCHORED_ALL

    def one(method):
        sol = solve(method, g, anchors, options=SolveOptions(seed=trial.seed_index))
        return error_rate(sol, truth, ignore), int(sol.diagnostics.get("iterations", 0))

    return _method_rows(trial, methods, one)


# ── k-SYNC ─────────────────────────────────────────────────


def _ksync_rows(trial: Trial, g, truth, partition: Partition, ignore=None) -> list[dict]:
    def one(method):
        sol = solve(method, g, partition=partition, options=SolveOptions(seed=trial.seed_index))
        return error_rate(sol, truth, ignore), int(sol.diagnostics.get("iterations", 0))

    return _method_rows(trial, trial.params.get("methods") or KSYNC_ALL, one)


def _congress_cells(p: dict) -> list[dict]:
    return [{"C": p["C"], "S": p["S"], "alpha": p["alpha"], **c, "timing": p["timing"]}
            for c in _grid(gamma=p["gamma_grid"], eta=p["eta_grid"])]


def _congress_trial(trial: Trial) -> list[dict]:
    c = trial.params
    spec = CongressModelSpec(c["C"], c["S"], c["gamma"], c["alpha"], c["eta"], trial.instance_seed())
    g, truth, partition = congress_model_I(spec)
    return _ksync_rows(trial, g, truth, partition)


def _benchmark_cells(p: dict) -> list[dict]:
    return [{"n": p["n"], "alpha": p["alpha"], **c, "timing": p["timing"]}
            for c in _grid(k=p["k_grid"], eta=p["eta_grid"])]


def _benchmark_trial(trial: Trial) -> list[dict]:
    c = trial.params
    g, truth, partition = equal_partition_benchmark_II(c["n"], int(c["k"]), c["alpha"], c["eta"],
                                                       trial.instance_seed())
    return _ksync_rows(trial, g, truth, partition)


def _incremental_cells(p: dict) -> list[dict]:
    base = {k: p[k] for k in ("C", "S", "gamma", "defect", "bills", "partisan", "epsilon")}
    return [{**base, "layers": t, "timing": p["timing"]} for t in range(1, p["C"] + 1)]


def _incremental_trial(trial: Trial) -> list[dict]:
    """All layers are drawn once per seed; the cell keeps the first t of them."""
    c = trial.params
    full = synthetic_voting(c["C"], c["S"], c["gamma"], c["defect"], c["bills"], c["partisan"],
                            c["epsilon"], seed=int(make_rng(trial.seed, trial.seed_index).integers(2**31 - 1)))
    t = c["layers"]
    m = MultiplexVoting(full.layers[:t], full.identity[:t], full.epsilon, full.labels[:t])
    g, partition, _ = sign_transform(m)
    z = party_signs(m)
    rows = _ksync_rows(trial, g, z, partition, ignore=z == 0)
    for row in rows:
        row["entities"] = partition.k
        row["mean_multiplicity"] = m.n / partition.k
    return rows


# ── MPS channel sensitivity ────────────────────────────────


def _sensitivity_cells(p: dict) -> list[dict]:
    return [{"n": p["n"], "alpha": p["alpha"], "h": p["h"], "eta": float(e)} for e in p["eta_grid"]]


def _sensitivity_trial(trial: Trial) -> list[dict]:
    c = trial.params
    rng = trial.rng()
    g, truth = erdos_renyi_instance(c["n"], NoiseSpec(c["alpha"], c["eta"]), rng=rng)
    anchors = random_anchors(truth, c["h"], rng) if c["h"] else None
    ignore = anchors.mask(g.n) if anchors is not None else None
    grid = trial.params.get("channel_grid") or SENSITIVITY_GRID
    df = channel_sensitivity(g, truth, anchors, grid, ignore=ignore)
    return [{**c, "seed": trial.seed_index, **row} for row in df.to_dict("records")]


# ── registry ───────────────────────────────────────────────


def _heatmap_runner(p: dict, jobs: int | None) -> pd.DataFrame:
    alphas, etas = default_grids(p["resolution"])
    frames = []
    for normalized in p["variants"]:
        df = heatmap_sweep(p["n"], alphas, etas, p["trials"], normalized == "normalized", p["seed"], jobs)
        df.insert(0, "variant", normalized)
        frames.append(df)
    return pd.concat(frames, ignore_index=True)


PRESETS: dict[str, Preset] = {}


def _register(name: str, description: str, defaults: dict, cells, run) -> None:
    PRESETS[name] = Preset(name, description, defaults, cells, run)


_register("noise-curve", "eigenvector error on G(n, alpha) as p approaches 1/2",
          {"n": 1000, "alpha": 1.0, "p_grid": [0.55, 0.525, 0.514, 0.5], "normalized": True,
           "seeds": 10, "seed": 0},
          _noise_curve_cells, _noise_curve_trial)
_register("mps-regular", "EIG vs MPS on K_n with a d-regular bad subgraph",
          {"n": 100, "d_grid": BAD_DEGREE_GRID, "h_grid": ANCHOR_GRID, "seeds": 100, "seed": 0,
           "timing": False},
          _bad_cells, _bad_trial(_regular_bad))
_register("mps-random", "EIG vs MPS on K_n with an Erdős–Rényi bad subgraph",
          {"n": 100, "d_grid": BAD_DEGREE_GRID, "h_grid": ANCHOR_GRID, "seeds": 100, "seed": 0,
           "timing": False},
          _bad_cells, _bad_trial(_random_bad))
_register("mps-pa", "EIG vs MPS on preferential-attachment graphs",
          {"n": 500, "m_pa": 10, "d_grid": [0, 25, 50, 100, 150, 200], "h_grid": ANCHOR_GRID,
           "seeds": 20, "seed": 0, "timing": False},
          _pa_cells, _bad_trial(_pa_bad))
_register("anchors-fig", "QCQP-i, QCQP-d, SDP-Y, SDP-XY and MPS with anchors on G(n, alpha)",
          {"n": 75, "alpha": 0.2, "h_grid": [15], "eta_grid": ETA_GRID, "methods": ANCHORED_ALL,
           "seeds": 50, "seed": 0, "timing": False},
          _anchor_cells, _anchor_trial)
_register("ksync-fig1", "k-SYNC methods on the congress model",
          {"C": 10, "S": 20, "alpha": 0.5, "gamma_grid": [0.5, 0.75, 0.95], "eta_grid": ETA_GRID,
           "methods": KSYNC_ALL, "seeds": 25, "seed": 0, "timing": False},
          _congress_cells, _congress_trial)
_register("ksync-fig2", "k-SYNC methods on the equal-partition benchmark",
          {"n": 200, "alpha": 0.1, "k_grid": [25], "eta_grid": ETA_GRID, "methods": KSYNC_ALL,
           "seeds": 25, "seed": 0, "timing": False},
          _benchmark_cells, _benchmark_trial)
_register("ksync-incremental", "k-SYNC on a synthetic roll-call multiplex, one layer at a time",
          {"C": 10, "S": 20, "gamma": 0.75, "defect": 0.1, "bills": 200, "partisan": 0.7,
           "epsilon": 1.0, "methods": KSYNC_ALL, "seeds": 10, "seed": 0, "timing": False},
          _incremental_cells, _incremental_trial)
_register("mps-sensitivity", "MPS error for each assumed channel_p",
          {"n": 200, "alpha": 0.2, "h": 0, "eta_grid": [0.1, 0.2, 0.3, 0.4],
           "channel_grid": list(SENSITIVITY_GRID), "seeds": 10, "seed": 0},
          _sensitivity_cells, _sensitivity_trial)

HEATMAP_DEFAULTS = {"n": 200, "resolution": 20, "trials": 20, "variants": ["normalized"], "seed": 0}
PRESET_NAMES = ("heatmap-fig",) + tuple(PRESETS)


def describe() -> pd.DataFrame:
    rows = [{"preset": "heatmap-fig", "description": "median eigenvector error per (alpha, eta) cell"}]
    rows += [{"preset": p.name, "description": p.description} for p in PRESETS.values()]
    return pd.DataFrame(rows)


# ── running ────────────────────────────────────────────────


def defaults(name: str) -> dict:
    if name == "heatmap-fig":
        return dict(HEATMAP_DEFAULTS)
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return dict(PRESETS[name].defaults)


def resolve_params(name: str, overrides: dict | None = None) -> dict:
    """Preset defaults updated with overrides; unknown keys are rejected."""
    params = defaults(name)
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ParameterError(f"preset {name} has no parameter {key!r}; known: {', '.join(params)}")
        params[key] = value
    if params.get("seeds", 1) < 1:
        raise ParameterError("need at least one seed")
    if name == "heatmap-fig":
        bad = set(params["variants"]) - {"normalized", "raw"}
        if bad:
            raise ParameterError(f"heatmap variants must be normalized or raw, got {sorted(bad)}")
    return params


def trials_for(name: str, params: dict) -> list[Trial]:
    preset = PRESETS[name]
    cells = preset.cells(params)
    if "methods" in params:
        cells = [{**c, "methods": list(params["methods"])} for c in cells]
    if "channel_grid" in params:
        cells = [{**c, "channel_grid": list(params["channel_grid"])} for c in cells]
    return [Trial(name, i, s, int(params["seed"]), cell)
            for i, cell in enumerate(cells) for s in range(int(params["seeds"]))]


def _run_trial(trial: Trial) -> list[dict]:
    return PRESETS[trial.preset].run(trial)


def _tidy(rows: list[dict]) -> pd.DataFrame:
    df = pd.DataFrame(rows)
    for col in ("methods", "channel_grid"):
        if col in df.columns:
            df = df.drop(columns=col)
    return df


def run_experiment(name: str, overrides: dict | None = None, jobs: int | None = None) -> ExperimentResult:
    """Run a named preset and return its tidy result table."""
    params = resolve_params(name, overrides)
    log.info("experiment %s with %s", name, params)
    if name == "heatmap-fig":
        return ExperimentResult(name, params, _heatmap_runner(params, jobs))
    trials = trials_for(name, params)
    log.debug("%s: %d trials", name, len(trials))
    chunks = parallel_map(_run_trial, trials, jobs)
    return ExperimentResult(name, params, _tidy([row for chunk in chunks for row in chunk]))


def load_spec(path: str | Path) -> tuple[str, dict]:
    """A custom sweep file: {"preset": name, "params": {...}}."""
    spec = read_json(path)
    if "preset" not in spec:
        raise ParameterError(f"{path}: sweep spec needs a 'preset' key")
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise ParameterError(f"{path}: 'params' must be an object")
    return str(spec["preset"]), params


def median_curves(df: pd.DataFrame, keys: list[str]) -> pd.DataFrame:
    """Median tau per group (failed trials excluded)."""
    ok = df[~df["failed"]] if "failed" in df.columns else df
    return ok.groupby(keys, as_index=False, sort=True)["tau"].median()
