"""Command-line entry point.

    python -m zsync generate erdos-renyi --n 1000 --alpha 1 --eta 0.45 --seed 7 --out runs/er
    python -m zsync solve eig --graph runs/er/graph.csv --truth runs/er/truth.csv --out runs/er/eig
    python -m zsync experiment anchors-fig --n 75 --alpha 0.2 --h 15 --jobs 4 --out runs/anchors
    python -m zsync analyze threshold --n 200 --alpha 0.5 --p 0.6
    python -m zsync multiplex --manifest data/congress/manifest.json --method eig-k --out runs/cong
    python -m zsync replay runs/er/manifest.json --out runs/er-again

Every command that writes files also writes manifest.json; `replay` re-runs
it.  Exit codes: 0 ok, 2 usage or invalid input, 3 solver gave up, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import pandas as pd

import zsync
from zsync import experiments, mps, rmt, settings
from zsync.core import error_rate
from zsync.errors import SyncError, UsageError
from zsync.formats import (
    read_anchors,
    read_graph,
    read_json,
    read_partition,
    read_truth,
    write_anchors,
    write_frame,
    write_graph,
    write_json,
    write_partition,
    write_solution,
    write_truth,
)
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
from zsync.ksync import TALLIES
from zsync.multiplex import (
    COUPLINGS,
    TRANSFORMS,
    entity_report,
    layer_spectra,
    misclassification_report,
    multiplicity_histogram,
    multiplicity_report,
    party_signs,
    read_multiplex,
    sign_transform,
    write_multiplex,
)
from zsync.solvers import METHODS, SolveOptions, needs_anchors, needs_partition, solve
from zsync.spectral import SOLVERS, spectrum

log = logging.getLogger(__name__)

MODELS = ("erdos-renyi", "regular-bad", "random-bad", "pref-attach", "congress-model-1",
          "benchmark-2", "synthetic-voting")
ANALYSES = ("threshold", "spectrum", "histogram", "correlation", "residual")

MODEL_DEFAULTS = {
    "erdos-renyi": {"n": 100, "alpha": 1.0, "eta": 0.0},
    "regular-bad": {"n": 100, "d": 10},
    "random-bad": {"n": 100, "d": 10.0},
    "pref-attach": {"n": 500, "m_pa": 10, "d": 0.0},
    "congress-model-1": {"C": 10, "S": 20, "gamma": 0.75, "alpha": 0.5, "eta": 0.0},
    "benchmark-2": {"n": 200, "k": 25, "alpha": 0.1, "eta": 0.0},
    "synthetic-voting": {"C": 10, "S": 20, "gamma": 0.75, "defect": 0.1, "bills": 200,
                         "partisan": 0.7, "epsilon": 1.0},
}

# measurement columns; everything else in a result table is a grouping key
RESULT_COLUMNS = {"seed", "tau", "iterations", "failed", "wall_ms", "gap_12", "converged",
                  "entities", "mean_multiplicity"}

SEP = "=" * 70
RULE = "─" * 70


# ── manifest ───────────────────────────────────────────────


def _versions() -> dict:
    out = {"zsync": zsync.__version__}
    for pkg in ("numpy", "scipy", "pandas", "networkx"):
        try:
            out[pkg] = version(pkg)
        except PackageNotFoundError:
            out[pkg] = None
    return out


@dataclass
class RunManifest:
    """Everything needed to re-run a command: its argv plus what it resolved to."""

    command: str
    argv: list
    seed: int | None = None
    method: str | None = None
    params: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    versions: dict = field(default_factory=_versions)

    def write(self, directory: Path) -> Path:
        return write_json(asdict(self), Path(directory) / "manifest.json")

    @classmethod
    def read(cls, path: str | Path) -> RunManifest:
        data = read_json(path)
        if "argv" not in data or "command" not in data:
            raise UsageError(f"{path} is not a run manifest (no argv/command)")
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


# ── output helpers ─────────────────────────────────────────


def _print_table(title: str, df: pd.DataFrame) -> None:
    print(SEP)
    print(f"  {title}")
    print(SEP)
    print(df.to_string(index=False))
    print()


def _print_pairs(title: str, pairs: dict) -> None:
    print(SEP)
    print(f"  {title}")
    print(RULE)
    for k, v in pairs.items():
        print(f"  {k:<24} {v}")
    print()


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _model_params(args: argparse.Namespace) -> dict:
    params = dict(MODEL_DEFAULTS[args.model])
    for key in params:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = type(params[key])(value)
    return params


# ── generate ───────────────────────────────────────────────


def cmd_generate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    params = _model_params(args)
    seed = args.seed
    manifest = RunManifest("generate", list(args.argv), seed=seed, method=args.model, params=params)

    if args.model == "synthetic-voting":
        m = synthetic_voting(**params, seed=seed)
        write_multiplex(m, out)
        manifest.outputs = ["manifest.json"] + [f"layer_{t:02d}.csv" for t in range(m.C)] + ["identity.csv"]
        manifest.params["n"] = m.n
        # the multiplex manifest owns manifest.json in this directory
        write_json(asdict(manifest), out / "run.json")
        log.info("wrote a %d-layer multiplex (%d nodes) to %s", m.C, m.n, out)
        return 0

    partition = None
    if args.model == "erdos-renyi":
        g, truth = erdos_renyi_instance(params["n"], NoiseSpec(params["alpha"], params["eta"], seed))
    elif args.model == "regular-bad":
        g, truth = complete_with_regular_bad(params["n"], params["d"], seed)
    elif args.model == "random-bad":
        g, truth = complete_with_random_bad(params["n"], params["d"], seed)
    elif args.model == "pref-attach":
        g, truth = preferential_attachment_instance(params["n"], params["m_pa"], params["d"], seed)
    elif args.model == "congress-model-1":
        g, truth, partition = congress_model_I(CongressModelSpec(**params, seed=seed))
    else:
        g, truth, partition = equal_partition_benchmark_II(params["n"], params["k"], params["alpha"],
                                                           params["eta"], seed)

    write_graph(g, out / "graph.csv")
    write_truth(truth, out / "truth.csv")
    outputs = ["graph.csv", "truth.csv"]
    if partition is not None:
        write_partition(partition, out / "partition.csv")
        outputs.append("partition.csv")
        manifest.params["k"] = partition.k
    if args.anchors:
        write_anchors(random_anchors(truth, args.anchors, make_rng(seed, 1)), out / "anchors.csv")
        outputs.append("anchors.csv")
        manifest.params["h"] = args.anchors
    manifest.params.update({"n": g.n, "m": g.m})
    manifest.outputs = outputs + ["manifest.json"]
    manifest.write(out)
    log.info("generated %s: n=%d m=%d -> %s", args.model, g.n, g.m, out)
    return 0


# ── solve ──────────────────────────────────────────────────


def _solve_options(args: argparse.Namespace) -> SolveOptions:
    return SolveOptions(
        seed=args.seed,
        channel_p=args.channel_p,
        mps_max_iter=args.max_iter,
        mps_tol=args.tol,
        damping=args.damping,
        solver=args.solver,
        signed_only=args.signed_only,
        tally=args.tally,
    )


def cmd_solve(args: argparse.Namespace) -> int:
    if needs_anchors(args.method) and not args.anchors:
        raise UsageError(f"method {args.method} needs --anchors")
    if needs_partition(args.method) and not args.partition:
        raise UsageError(f"method {args.method} needs --partition")

    truth = read_truth(args.truth, args.n) if args.truth else None
    partition = read_partition(args.partition, args.n) if args.partition else None
    n = args.n or (truth.n if truth is not None else partition.n if partition is not None else None)
    g = read_graph(args.graph, n)
    anchors = read_anchors(args.anchors) if args.anchors else None
    opts = _solve_options(args)

    start = time.perf_counter()
    sol = solve(args.method, g, anchors, partition, opts)
    wall_ms = (time.perf_counter() - start) * 1000.0

    diagnostics = {"method": sol.method, "n": g.n, "m": g.m, **sol.diagnostics}
    if truth is not None:
        ignore = anchors.mask(g.n) if anchors is not None else None
        diagnostics["tau"] = error_rate(sol, truth, ignore)
    if args.timing:
        diagnostics["wall_ms"] = wall_ms

    out = Path(args.out)
    write_solution(sol, out / "solution.csv")
    write_json(diagnostics, out / "diagnostics.json")
    inputs = {k: getattr(args, k) for k in ("graph", "anchors", "partition", "truth") if getattr(args, k)}
    RunManifest("solve", list(args.argv), seed=args.seed, method=args.method,
                params=asdict(opts), inputs=inputs,
                outputs=["solution.csv", "diagnostics.json", "manifest.json"]).write(out)
    if "tau" in diagnostics:
        log.info("%s: tau=%.4f", args.method, diagnostics["tau"])
    return 0


# ── experiment ─────────────────────────────────────────────


SHORTCUTS = {"n": ("n",), "alpha": ("alpha",), "h": ("h_grid", "h"), "k": ("k_grid",)}


def _experiment_overrides(args: argparse.Namespace, name: str, base: dict) -> dict:
    overrides = dict(base)
    known = experiments.defaults(name)
    for flag, keys in SHORTCUTS.items():
        value = getattr(args, flag)
        if value is None:
            continue
        key = next((k for k in keys if k in known), None)
        if key is None:
            raise UsageError(f"preset {name} takes no --{flag}")
        overrides[key] = [value] if key.endswith("_grid") else value
    for flag in ("seeds", "seed"):
        if getattr(args, flag) is not None:
            overrides[flag] = getattr(args, flag)
    if args.timing:
        if "timing" not in known:
            raise UsageError(f"preset {name} takes no --timing")
        overrides["timing"] = True
    for item in args.set or []:
        key, sep, text = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = _parse_value(text)
    return overrides


def summarize(df: pd.DataFrame) -> pd.DataFrame | None:
    if "tau" not in df.columns:
        return None
    keys = [c for c in df.columns if c not in RESULT_COLUMNS]
    return experiments.median_curves(df, keys)


def cmd_experiment(args: argparse.Namespace) -> int:
    if args.list:
        _print_table("EXPERIMENT PRESETS", experiments.describe())
        return 0
    if args.spec:
        name, base = experiments.load_spec(args.spec)
    elif args.preset:
        name, base = args.preset, {}
    else:
        raise UsageError("experiment needs a preset name or --spec")
    if name not in experiments.PRESET_NAMES:
        raise UsageError(f"unknown preset {name!r}; choose from {', '.join(experiments.PRESET_NAMES)}")
    if not args.out:
        raise UsageError("experiment needs --out")

    result = experiments.run_experiment(name, _experiment_overrides(args, name, base), args.jobs)
    out = Path(args.out)
    write_frame(result.frame, out / "results.csv")
    outputs = ["results.csv"]
    summary = summarize(result.frame)
    if summary is not None:
        write_frame(summary, out / "summary.csv")
        outputs.append("summary.csv")
    inputs = {"spec": args.spec} if args.spec else {}
    RunManifest("experiment", list(args.argv), seed=result.params.get("seed"), method=name,
                params=result.params, inputs=inputs, outputs=outputs + ["manifest.json"]).write(out)
    log.info("experiment %s: %d rows -> %s", name, len(result.frame), out)
    return 0


# ── analyze ────────────────────────────────────────────────


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"analyze {args.kind} needs --{name.replace('_', '-')}")


def cmd_analyze(args: argparse.Namespace) -> int:
    out = Path(args.out) if args.out else None
    outputs = []

    if args.kind == "threshold":
        _require(args, "n", "alpha")
        p = args.p if args.p is not None else 0.5
        info = rmt.analyze(args.n, args.alpha, p)
        payload = info.as_dict()
        _print_pairs("NOISE THRESHOLD", payload)
        if out:
            write_json(payload, out / "threshold.json")
            alphas, _ = rmt.default_grids()
            write_frame(rmt.threshold_curve(args.n, alphas), out / "threshold_curve.csv")
            outputs += ["threshold.json", "threshold_curve.csv"]
    else:
        _require(args, "graph")
        truth = read_truth(args.truth) if args.truth else None
        g = read_graph(args.graph, truth.n if truth is not None else args.n)

        if args.kind == "spectrum":
            report = spectrum(g, min(args.r, g.n), normalized=args.normalized)
            df = report.to_frame()
            _print_table("TOP EIGENVALUES", df)
            _print_pairs("GAPS", {"gap_12": report.gap_12, "gap_23": report.gap_23, "ratio_32": report.ratio_32})
            if out:
                write_frame(df, out / "spectrum.csv")
                outputs.append("spectrum.csv")
        elif args.kind == "histogram":
            _require(args, "alpha", "p")
            df = rmt.spectrum_histogram(g, args.bins, args.alpha, args.p)
            lo, hi = rmt.semicircle_support(rmt.analyze(g.n, args.alpha, args.p))
            _print_table(f"SPECTRUM HISTOGRAM  (semicircle support [{lo:.3f}, {hi:.3f}])", df)
            if out:
                write_frame(df, out / "histogram.csv")
                outputs.append("histogram.csv")
        else:
            _require(args, "truth", "alpha", "p")
            if args.kind == "correlation":
                res = rmt.correlation_bound(g, truth, args.alpha, args.p)
                payload = {**asdict(res), "holds": res.holds}
                _print_pairs("CORRELATION BOUND", payload)
            else:
                res = rmt.rank_one_decomposition_check(g, truth, args.alpha, args.p)
                payload = {**asdict(res), "relative_error": res.relative_error}
                _print_pairs("RESIDUAL VARIANCE", payload)
            if out:
                write_json(payload, out / f"{args.kind}.json")
                outputs.append(f"{args.kind}.json")

    if out:
        inputs = {k: getattr(args, k) for k in ("graph", "truth") if getattr(args, k, None)}
        params = {k: getattr(args, k) for k in ("n", "alpha", "p", "r", "bins", "normalized")}
        RunManifest("analyze", list(args.argv), method=args.kind, params=params, inputs=inputs,
                    outputs=outputs + ["manifest.json"]).write(out)
    return 0


# ── multiplex ──────────────────────────────────────────────


def cmd_multiplex(args: argparse.Namespace) -> int:
    if needs_anchors(args.method):
        raise UsageError(f"method {args.method} needs anchors, which a multiplex run does not take")
    m, options = read_multiplex(args.manifest)
    for key in ("transform", "theta", "coupling"):
        if getattr(args, key) is not None:
            options[key] = getattr(args, key)
    if args.epsilon is not None:
        m = m.with_epsilon(args.epsilon)

    g, partition, info = sign_transform(m, options["transform"], options["theta"], options["coupling"])
    sol = solve(args.method, g, partition=partition, options=SolveOptions(seed=args.seed))
    diagnostics = {"method": sol.method, "n": g.n, "m": g.m, "entities": partition.k,
                   "epsilon": m.epsilon, **options, **info, **sol.diagnostics}

    out = Path(args.out)
    write_graph(g, out / "graph.csv")
    write_partition(partition, out / "partition.csv")
    write_solution(sol, out / "solution.csv")
    write_frame(layer_spectra(m), out / "layer_spectra.csv")
    write_frame(multiplicity_report(m), out / "multiplicity.csv")
    write_frame(multiplicity_histogram(m), out / "multiplicity_histogram.csv")
    outputs = ["graph.csv", "partition.csv", "solution.csv", "layer_spectra.csv",
               "multiplicity.csv", "multiplicity_histogram.csv"]
    if m.labels is not None:
        z = party_signs(m)
        diagnostics["tau"] = error_rate(sol, z, ignore=z == 0)
        per_layer = misclassification_report(sol, m)
        write_frame(per_layer, out / "misclassification.csv")
        write_frame(entity_report(sol, m), out / "entities.csv")
        outputs += ["misclassification.csv", "entities.csv"]
        _print_table(f"MISCLASSIFIED PER LAYER  ({args.method}, tau={diagnostics['tau']:.3f})", per_layer)
    write_json(diagnostics, out / "diagnostics.json")
    RunManifest("multiplex", list(args.argv), seed=args.seed, method=args.method,
                params={**options, "epsilon": m.epsilon}, inputs={"manifest": args.manifest},
                outputs=outputs + ["diagnostics.json", "manifest.json"]).write(out)
    return 0


# ── replay ─────────────────────────────────────────────────


def _with_out(argv: list, out: str | None) -> list:
    argv = list(argv)
    if out is None:
        return argv
    if "--out" in argv:
        argv[argv.index("--out") + 1] = out
    else:
        argv += ["--out", out]
    return argv


def cmd_replay(args: argparse.Namespace) -> int:
    manifest = RunManifest.read(args.manifest)
    if manifest.command == "replay":
        raise UsageError("cannot replay a replay")
    argv = _with_out(manifest.argv, args.out)
    log.info("replaying %s", " ".join(argv))
    return run(argv)


# ── parser ─────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zsync", description="Z2 group synchronization toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    parser.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random instance")
    gen.add_argument("model", choices=MODELS)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n", type=int)
    gen.add_argument("--alpha", type=float)
    gen.add_argument("--eta", type=float)
    gen.add_argument("--d", type=float, help="bad-subgraph degree")
    gen.add_argument("--m-pa", dest="m_pa", type=int, help="edges per new node (pref-attach)")
    gen.add_argument("--C", type=int, help="layers")
    gen.add_argument("--S", type=int, help="seats per layer")
    gen.add_argument("--gamma", type=float, help="persistence")
    gen.add_argument("--k", type=int, help="blocks (benchmark-2)")
    gen.add_argument("--defect", type=float)
    gen.add_argument("--bills", type=int)
    gen.add_argument("--partisan", type=float)
    gen.add_argument("--epsilon", type=float)
    gen.add_argument("--anchors", type=int, default=0, metavar="H", help="also write H random anchors")
    gen.set_defaults(func=cmd_generate)

    sol = sub.add_parser("solve", help="run one method on an instance")
    sol.add_argument("method", choices=METHODS)
    sol.add_argument("--graph", required=True)
    sol.add_argument("--out", required=True)
    sol.add_argument("--n", type=int, help="node count when the edge list leaves trailing nodes isolated")
    sol.add_argument("--truth")
    sol.add_argument("--anchors")
    sol.add_argument("--partition")
    sol.add_argument("--seed", type=int, default=0)
    sol.add_argument("--channel-p", dest="channel_p", type=float, default=mps.CHANNEL_P)
    sol.add_argument("--max-iter", dest="max_iter", type=int, default=mps.MAX_ITER)
    sol.add_argument("--tol", type=float, default=mps.TOL)
    sol.add_argument("--damping", type=float, default=0.0)
    sol.add_argument("--solver", choices=SOLVERS, default="auto")
    sol.add_argument("--signed-only", dest="signed_only", action="store_true")
    sol.add_argument("--tally", choices=TALLIES, default="count")
    sol.add_argument("--timing", action="store_true", help="add wall_ms to diagnostics")
    sol.set_defaults(func=cmd_solve)

    exp = sub.add_parser("experiment", help="run a preset sweep")
    exp.add_argument("preset", nargs="?")
    exp.add_argument("--spec", help="JSON sweep file {preset, params}")
    exp.add_argument("--list", action="store_true")
    exp.add_argument("--out")
    exp.add_argument("--n", type=int)
    exp.add_argument("--alpha", type=float)
    exp.add_argument("--h", type=int)
    exp.add_argument("--k", type=int)
    exp.add_argument("--seeds", type=int)
    exp.add_argument("--seed", type=int)
    exp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a preset parameter (JSON value)")
    exp.add_argument("--jobs", type=int, default=None)
    exp.add_argument("--timing", action="store_true", help="add wall_ms columns")
    exp.set_defaults(func=cmd_experiment)

    ana = sub.add_parser("analyze", help="noise threshold and spectrum reports")
    ana.add_argument("kind", choices=ANALYSES)
    ana.add_argument("--graph")
    ana.add_argument("--truth")
    ana.add_argument("--n", type=int)
    ana.add_argument("--alpha", type=float)
    ana.add_argument("--p", type=float)
    ana.add_argument("--r", type=int, default=3)
    ana.add_argument("--bins", type=int, default=50)
    ana.add_argument("--normalized", action="store_true")
    ana.add_argument("--out")
    ana.set_defaults(func=cmd_analyze)

    mux = sub.add_parser("multiplex", help="assemble, sign and solve a multiplex")
    mux.add_argument("--manifest", required=True)
    mux.add_argument("--out", required=True)
    mux.add_argument("--method", choices=METHODS, default="eig")
    mux.add_argument("--epsilon", type=float)
    mux.add_argument("--transform", choices=TRANSFORMS)
    mux.add_argument("--theta", type=float)
    mux.add_argument("--coupling", choices=COUPLINGS)
    mux.add_argument("--seed", type=int, default=0)
    mux.set_defaults(func=cmd_multiplex)

    rep = sub.add_parser("replay", help="re-run a command from its manifest.json")
    rep.add_argument("manifest")
    rep.add_argument("--out", help="write into this directory instead")
    rep.set_defaults(func=cmd_replay)
    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, settings.LOG_LEVEL, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def run(argv: list) -> int:
    """Parse and dispatch without touching logging configuration."""
    args = build_parser().parse_args(argv)
    args.argv = list(argv)
    return args.func(args)


def main(argv: list | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    known, _ = parser.parse_known_args(argv)
    _configure_logging(known.verbose, known.quiet)
    try:
        return run(argv)
    except SyncError as e:
        log.error("%s", e)
        return e.exit_code
    except OSError as e:
        log.error("I/O error: %s", e)
        return 4
