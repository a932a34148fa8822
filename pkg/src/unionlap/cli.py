"""Command-line entry point.

Exit codes: 0 on success, 2 on invalid input or configuration, 3 when a
solver fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .continuum import CoupledSpectrumError, ResolutionError, UnsupportedReference, nonlocal_energy
from .harness import ConfigError, ExperimentConfig, StageError
from .manifolds import MODEL_PRESETS, SamplingError, sample_mixture
from .spectra import SolverError
from .transport import ASSIGNMENT_MAX, tl2_exact

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3

log = logging.getLogger("unionlap")


def _common(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--preset", help="experiment preset (see `preset list`)")
    p.add_argument("--model", help="model preset name, overrides the config model")
    p.add_argument("--seed", type=int, help="single seed, replaces the seed list")
    p.add_argument("--eps", type=float, help="constant bandwidth")
    p.add_argument("--kernel", help="kernel key, e.g. indicator or gaussian:3")
    p.add_argument("--kind", help="normalized | unnormalized | unnormalized_scaled:<d2>")
    p.add_argument("--k", type=int, help="number of eigenpairs")
    p.add_argument("--out", help="output directory")
    if sweep:
        p.add_argument("--ns", type=int, nargs="+", help="sample counts for the sweep")
    else:
        p.add_argument("--n", type=int, help="sample count (drops pinned counts that disagree)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unionlap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a point cloud and write it as CSV")
    _common(p)

    p = sub.add_parser("spectrum", help="smallest graph-Laplacian eigenpairs")
    _common(p)

    p = sub.add_parser("compare", help="eigenpairs aligned against the continuum reference")
    _common(p)
    p.add_argument("--reference", choices=["auto", "analytic", "metric_graph"], help="reference source")
    p.add_argument("--fd-h", type=float, help="grid spacing of the metric-graph reference")

    p = sub.add_parser("nonlocal", help="nonlocal energy of a closed-form function")
    _common(p)
    p.add_argument("--function", default="cos", choices=harness.FUNCTIONS)
    p.add_argument("--resolution", type=float, help="quadrature nodes per eps")

    p = sub.add_parser("tl2", help="TL2 distance between a graph eigenvector and its limit")
    _common(p)
    p.add_argument("--index", type=int, help="1-based eigenvector index")
    p.add_argument("--method", choices=["auto", "exact", "proxy"], default="auto")

    p = sub.add_parser("sweep", help="convergence sweep over sample counts")
    _common(p, sweep=True)

    p = sub.add_parser("preset", help="named presets")
    p.add_argument("action", choices=["list"])
    return parser


def make_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("use either --config or --preset")
    if args.config:
        cfg = harness.load_config(args.config)
    elif args.preset:
        cfg = harness.preset_config(args.preset)
    else:
        cfg = ExperimentConfig()
    if args.model:
        cfg.model = args.model
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.eps is not None:
        cfg.bandwidth = harness.Bandwidth("constant", args.eps)
    for key in ("kernel", "kind", "k", "out"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    n = getattr(args, "n", None)
    if n is not None:
        if cfg.counts is not None and sum(cfg.counts) != n:
            cfg.counts = None
        cfg.n = n
    if getattr(args, "ns", None):
        cfg.ns = args.ns
    if getattr(args, "reference", None):
        cfg.reference = args.reference
    if getattr(args, "fd_h", None):
        cfg.fd_h = args.fd_h
    if getattr(args, "index", None):
        cfg.tl2_index = args.index
    return cfg


def _out_dir(cfg: ExperimentConfig) -> Path | None:
    return Path(cfg.out) if cfg.out else None


def _emit(doc: dict, out: Path | None, name: str, schema: str) -> None:
    harness.validate_json(harness._jsonable(doc), schema)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        harness.write_json(out / name, doc)
    print(json.dumps(harness._jsonable(doc), indent=2, sort_keys=True))


def cmd_sample(args) -> int:
    cfg = make_config(args)
    model = cfg.validate()
    seed = cfg.seeds[0]
    cloud = sample_mixture(model, cfg.n, seed, cfg.counts)
    out = _out_dir(cfg)
    doc = {
        "model": model.to_dict(),
        "n": cloud.n,
        "seed": seed,
        "counts": list(cloud.counts),
        "fixed_counts": cloud.fixed_counts,
        "points_file": f"points_seed{seed}.csv",
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        harness.write_points_csv(out / doc["points_file"], cloud)
        harness.validate_csv(out / doc["points_file"], "sample_row")
    _emit(doc, out, "sample.json", "sample")
    return EXIT_OK


def _print_runs(bundle) -> None:
    for r in bundle.runs:
        print(f"seed {r.seed}: n={r.n} eps={r.epsilon:.5g} counts={list(r.counts)}")
        ref = bundle.reference.values if bundle.reference is not None else None
        for j, lam in enumerate(r.spectrum.eigenvalues):
            line = f"  lambda{j + 1} = {lam:.6f}  (residual {r.spectrum.residuals[j]:.1e})"
            if ref is not None and j < ref.size:
                line += f"  reference {ref[j]:.6f}"
            print(line)


def cmd_spectrum(args) -> int:
    cfg = make_config(args)
    cfg.reference = "none"
    bundle = harness.run_experiment(cfg)
    _print_runs(bundle)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = make_config(args)
    if cfg.reference == "none":
        cfg.reference = "auto"
    bundle = harness.run_experiment(cfg)
    if bundle.reference is None:
        raise ConfigError("no continuum reference is available for this model and Laplacian kind")
    _print_runs(bundle)
    for r in bundle.runs:
        if r.alignment:
            sep = r.alignment["separation"]
            print(f"  separation scores: {', '.join(f'u{k}={v:.2f}' for k, v in sep.items())}")
    return EXIT_OK


def cmd_nonlocal(args) -> int:
    cfg = make_config(args)
    model = cfg.build_model()
    if cfg.bandwidth.rule != "constant" or cfg.bandwidth.epsilon is None:
        raise ConfigError("nonlocal needs a constant bandwidth (--eps)")
    eps = float(cfg.bandwidth.epsilon)
    u, limit = harness.named_function(model, args.function, eps, cfg.kernel)
    res = nonlocal_energy(model, u, eps, cfg.kernel, resolution=args.resolution, seed=cfg.seeds[0])
    doc = {"model": model.to_dict(), "epsilon": eps, "kernel": cfg.kernel, "function": args.function,
           "limit": limit, **res.to_dict()}
    _emit(doc, _out_dir(cfg), "nonlocal.json", "nonlocal")
    return EXIT_OK


def cmd_tl2(args) -> int:
    cfg = make_config(args)
    model = cfg.validate()
    if cfg.reference == "none":
        cfg.reference = "auto"
    reference = harness.reference_for(model, cfg, cfg.k)
    if reference is None or not reference.modes:
        raise ConfigError("TL2 needs a reference with closed-form eigenfunctions")
    j = cfg.tl2_index - 1
    if not 0 <= j < cfg.k:
        raise ConfigError("--index must lie in 1..k")
    seed = cfg.seeds[0]
    eps = cfg.bandwidth.value(cfg.n, model.max_dim)
    rec = harness.run_single(model, cfg, cfg.n, seed, eps, reference, cfg.counts)
    method = args.method
    if method == "auto":
        method = "exact" if cfg.n <= ASSIGNMENT_MAX else "proxy"
    if method == "exact":
        if cfg.n > ASSIGNMENT_MAX:
            raise ConfigError(f"exact TL2 is limited to n <= {ASSIGNMENT_MAX}")
        ref_k = reference.truncate(cfg.k)
        R = harness.reference_vectors(model, ref_k, rec.cloud, None)
        U = harness.aligned_vectors(rec.spectrum, ref_k, R)
        # the limit measure is represented by an independent sample of the same size
        other = sample_mixture(model, cfg.n, seed + 1_000_003, cfg.counts)
        R_other = harness.reference_vectors(model, ref_k, other, None)
        res = tl2_exact(rec.cloud.points, U[:, j], other.points, R_other[:, j])
        doc = {"method": "exact", "distance": res.distance, "spatial": res.spatial, "value": res.value}
    else:
        doc = {"method": "proxy", "distance": rec.diagnostics["tl2_proxy"], "spatial": None, "value": None}
    doc.update({"n": cfg.n, "seed": seed, "index": cfg.tl2_index})
    _emit(doc, _out_dir(cfg), "tl2.json", "tl2")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = make_config(args)
    table = harness.convergence_sweep(cfg)
    for row in table.summary:
        print(json.dumps(harness._jsonable(row), sort_keys=True))
    return EXIT_OK


def cmd_preset(args) -> int:
    print("experiment presets:")
    for name, raw in harness.EXPERIMENT_PRESETS.items():
        what = f"n={raw['n']}" if "n" in raw else f"ns={raw['ns']}"
        print(f"  {name:20s} model={raw['model']} {what} kind={raw['kind']} k={raw['k']}")
    print("model presets:")
    for name in MODEL_PRESETS:
        print(f"  {name}")
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "spectrum": cmd_spectrum,
    "compare": cmd_compare,
    "nonlocal": cmd_nonlocal,
    "tl2": cmd_tl2,
    "sweep": cmd_sweep,
    "preset": cmd_preset,
}

SOLVER_ERRORS = (SolverError, np.linalg.LinAlgError)
INPUT_ERRORS = (
    ConfigError,
    ResolutionError,
    CoupledSpectrumError,
    UnsupportedReference,
    SamplingError,
    ValueError,
    KeyError,
    TypeError,
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER if isinstance(exc.cause, SOLVER_ERRORS) else EXIT_INVALID
    except SOLVER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
