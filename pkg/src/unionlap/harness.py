"""Experiment configuration, single runs, convergence sweeps and result files.

A run samples the model, builds the graph, solves for the smallest
eigenpairs, aligns them against the continuum reference and writes:

``bundle.json``
    configuration, metadata, reference block and per-seed results
``spectrum_seed<s>.json`` / ``vectors_seed<s>.csv``
    eigenvalues, residuals and the eigenvectors at the sample points
``reference.json``
    the reference spectrum
``timings.json``
    wall-clock times, kept apart so the other files are byte-reproducible
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import __version__, _accel
from .continuum import (
    CoupledSpectrumError,
    ReferenceSpectrum,
    UnsupportedReference,
    merged_union_spectrum,
    metric_graph_spectrum_fd,
    reference_vectors,
)
from .graph import Graph, build_graph, degree_by_component, parse_kind
from .kernels import kernel_moments, parse_kernel
from .manifolds import (
    DegenerateIntersection,
    FlatPiece,
    MixtureModel,
    SampleCloud,
    bandwidth_ok,
    bandwidth_rule,
    distance_to_patch,
    model_intersection,
    model_preset,
    sample_mixture,
)
from .spectra import (
    SpectralResult,
    align_sign,
    align_spectra,
    procrustes_align,
    smallest_eigenpairs,
    variance_fraction,
)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """An error raised inside one pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


# --------------------------------------------------------------------------
# configuration


@dataclass
class Bandwidth:
    """``power`` (default): ``factor * ell_n ** exponent``; ``constant``: ``epsilon``."""

    rule: str = "power"
    epsilon: float | None = None
    factor: float = 2.0
    exponent: float = 0.9

    def value(self, n: int, d_max: int) -> float:
        if self.rule == "constant":
            return float(self.epsilon)
        return bandwidth_rule(n, d_max, self.factor, self.exponent)


@dataclass
class ExperimentConfig:
    model: str | dict = "paper-rect-segment"
    n: int | None = None
    counts: list[int] | None = None
    ns: list[int] | None = None
    bandwidth: Bandwidth = field(default_factory=Bandwidth)
    kernel: str = "indicator"
    kind: str = "normalized"
    k: int = 6
    seeds: list[int] = field(default_factory=lambda: [1])
    reference: str = "auto"
    fd_h: float = 1e-3
    tol: float = 1e-8
    tl2_index: int = 3
    out: str | None = None
    name: str = "custom"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        unknown = set(raw) - {f for f in cls.__dataclass_fields__} - {"epsilon"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        bw = raw.pop("bandwidth", None)
        eps = raw.pop("epsilon", None)
        if isinstance(bw, dict):
            bandwidth = Bandwidth(**bw)
        elif bw is None:
            bandwidth = Bandwidth("constant", eps) if eps is not None else Bandwidth()
        else:
            raise ConfigError("bandwidth must be an object")
        if eps is not None and bandwidth.rule == "constant":
            bandwidth.epsilon = eps
        cfg = cls(bandwidth=bandwidth, **raw)
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["out"] = None
        return d

    def build_model(self) -> MixtureModel:
        try:
            if isinstance(self.model, str):
                return model_preset(self.model)
            return MixtureModel.from_dict(self.model)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid model: {exc}") from exc

    def validate(self, sweep: bool = False) -> MixtureModel:
        model = self.build_model()
        if sweep and (not self.ns or len(self.ns) < 3):
            raise ConfigError("a convergence sweep needs at least three sample counts")
        try:
            parse_kernel(self.kernel)
            parse_kind(self.kind)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.k < 1:
            raise ConfigError("k must be positive")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        bw = self.bandwidth
        if bw.rule not in ("constant", "power"):
            raise ConfigError(f"unknown bandwidth rule {bw.rule!r}")
        if bw.rule == "constant" and (bw.epsilon is None or not bw.epsilon > 0):
            raise ConfigError("constant bandwidth needs a positive epsilon")
        if bw.rule == "power" and not (bw.factor > 0 and 0 < bw.exponent):
            raise ConfigError("power bandwidth needs positive factor and exponent")
        if self.reference not in ("auto", "analytic", "metric_graph", "none"):
            raise ConfigError(f"unknown reference mode {self.reference!r}")
        if sweep:
            if bw.rule == "constant":
                raise ConfigError("a convergence sweep needs a bandwidth rule, not a constant epsilon")
            if any(n < 3 for n in self.ns):
                raise ConfigError("sample counts must be at least 3")
        else:
            if self.n is None and self.counts is None:
                raise ConfigError("need n or pinned counts")
            if self.counts is not None:
                if len(self.counts) != len(model.components):
                    raise ConfigError("one pinned count per component")
                if self.n is not None and sum(self.counts) != self.n:
                    raise ConfigError("pinned counts must sum to n")
                self.n = int(sum(self.counts))
            if self.n < 2 or self.k >= self.n:
                raise ConfigError("need n >= 2 and k < n")
        return model


EXPERIMENT_PRESETS: dict[str, dict] = {
    "paper-fig1": {
        "name": "paper-fig1",
        "model": "paper-rect-segment",
        "n": 5400,
        "counts": [2600, 2800],
        "epsilon": 0.13,
        "kernel": "indicator",
        "kind": "normalized",
        "k": 6,
        "seeds": [1, 2, 3],
    },
    "paper-fig2": {
        "name": "paper-fig2",
        "model": "paper-rect-segment",
        "n": 5400,
        "counts": [2600, 2800],
        "epsilon": 0.13,
        "kernel": "indicator",
        "kind": "unnormalized_scaled:2",
        "k": 8,
        "seeds": [1],
    },
    "paper-sweep": {
        "name": "paper-sweep",
        "model": "paper-rect-segment",
        "ns": [2000, 8000, 32000],
        "bandwidth": {"rule": "power", "factor": 2.0, "exponent": 0.9},
        "kernel": "indicator",
        "kind": "normalized",
        "k": 6,
        "seeds": [1, 2, 3],
        "tl2_index": 3,
    },
    "circle-sweep": {
        "name": "circle-sweep",
        "model": "unit-circle",
        "ns": [2000, 8000, 32000],
        "bandwidth": {"rule": "power", "factor": 2.0, "exponent": 0.9},
        "kernel": "indicator",
        "kind": "normalized",
        "k": 3,
        "seeds": [1, 2, 3],
        "tl2_index": 2,
    },
    "crossing-segments": {
        "name": "crossing-segments",
        "model": "crossing-segments",
        "n": 4000,
        "epsilon": 0.05,
        "kernel": "indicator",
        "kind": "normalized",
        "k": 5,
        "seeds": [1],
        "reference": "metric_graph",
    },
}


def preset_config(name: str) -> ExperimentConfig:
    try:
        raw = copy.deepcopy(EXPERIMENT_PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown experiment preset {name!r}") from None
    return ExperimentConfig.from_dict(raw)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if "preset" in raw:
        base = copy.deepcopy(EXPERIMENT_PRESETS.get(raw.pop("preset"), None) or {})
        if not base:
            raise ConfigError("unknown preset in config")
        base.update(raw)
        raw = base
    return ExperimentConfig.from_dict(raw)


# --------------------------------------------------------------------------
# schemas and file output


def load_schema(name: str) -> dict:
    text = resources.files("unionlap").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_json(obj: Any, name: str) -> None:
    jsonschema.validate(obj, load_schema(name))


def validate_csv(path: str | Path, name: str) -> int:
    """Check a CSV against the row schema ``name``; returns the row count."""
    schema = load_schema(name)
    props = schema.get("properties", {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in schema.get("required", []) if c not in header]
        if missing:
            raise jsonschema.ValidationError(f"{path}: missing columns {missing}")
        count = 0
        for row in reader:
            typed = {}
            for key, val in row.items():
                spec = props.get(key) or _pattern_spec(schema, key)
                typed[key] = _coerce(val, spec)
            jsonschema.validate(typed, schema)
            count += 1
    return count


def _pattern_spec(schema: dict, key: str) -> dict:
    import re

    for pat, spec in schema.get("patternProperties", {}).items():
        if re.fullmatch(pat, key):
            return spec
    return {}


def _coerce(val: str, spec: dict):
    types = spec.get("type", "string")
    types = types if isinstance(types, list) else [types]
    if val == "" and "null" in types:
        return None
    if "integer" in types:
        try:
            return int(val)
        except ValueError:
            pass
    if "number" in types:
        try:
            return float(val)
        except ValueError:
            pass
    if "boolean" in types and val in ("true", "false"):
        return val == "true"
    return val


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_json(path: Path, obj: Any) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_vectors_csv(path: Path, cloud: SampleCloud, vectors: np.ndarray) -> None:
    N = cloud.points.shape[1]
    header = [f"x{i + 1}" for i in range(N)] + ["label"] + [f"u{j + 1}" for j in range(vectors.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, lab, row in zip(cloud.points, cloud.labels, vectors):
            w.writerow([_fmt(v) for v in p] + [int(lab)] + [_fmt(v) for v in row])


def write_points_csv(path: Path, cloud: SampleCloud) -> None:
    N = cloud.points.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(N)] + ["label"])
        for p, lab in zip(cloud.points, cloud.labels):
            w.writerow([_fmt(v) for v in p] + [int(lab)])


def write_rows_csv(path: Path, rows: list[dict]) -> None:
    keys = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in keys])


# --------------------------------------------------------------------------
# diagnostics


def reference_for(model: MixtureModel, cfg: ExperimentConfig, k: int) -> ReferenceSpectrum | None:
    kind = parse_kind(cfg.kind)
    mode = cfg.reference
    if mode == "none":
        return None
    if mode in ("auto", "analytic"):
        try:
            return merged_union_spectrum(model, cfg.kernel, kind.name, k)
        except CoupledSpectrumError:
            if mode == "analytic":
                raise
        except UnsupportedReference:
            if mode == "analytic":
                raise
            if not all(c.dim == 1 and isinstance(c.patch, FlatPiece) for c in model.components):
                return None
    if kind.name == "unnormalized":
        # the plain unnormalized Laplacian has no finite limit without rescaling
        return None
    limit = "normalized" if kind.is_normalized else "unnormalized"
    return metric_graph_spectrum_fd(model, cfg.kernel, cfg.fd_h, k, limit)


def _other_distance(model: MixtureModel, cloud: SampleCloud, i: int) -> np.ndarray:
    """Distance of component-i samples to the union of the other patches."""
    pts = cloud.points[cloud.labels == i]
    out = np.full(pts.shape[0], np.inf)
    for j, c in enumerate(model.components):
        if j != i:
            out = np.minimum(out, distance_to_patch(c.patch, pts))
    return out


def _intersection_distance(model: MixtureModel, cloud: SampleCloud, i: int) -> np.ndarray:
    pts = cloud.points[cloud.labels == i]
    out = np.full(pts.shape[0], np.inf)
    for j in range(len(model.components)):
        if j == i:
            continue
        try:
            inter = model_intersection(model, i, j)
        except (DegenerateIntersection, TypeError):
            continue
        out = np.minimum(out, inter.distance(pts))
    return out


def kde_sup_errors(model: MixtureModel, cloud: SampleCloud, graph: Graph) -> dict[str, float | None]:
    """``sup |eps^-d_i deg^(i) - alpha_i beta_i rho_i|`` per component.

    ``deg^(i)`` counts only neighbors on component ``i``. Samples within
    ``eps`` of the intersection or of the patch boundary are skipped, since
    the estimator is biased there by construction.
    """
    eps = graph.epsilon
    out: dict[str, float | None] = {}
    for i, c in enumerate(model.components):
        mask = cloud.labels == i
        coords = cloud.component_coords(i, c.dim)
        keep = (_intersection_distance(model, cloud, i) > eps) & (c.patch.boundary_distance(coords) > eps)
        if not np.any(keep):
            out[f"M{i + 1}"] = None
            continue
        deg_i = degree_by_component(graph, cloud.labels, i)[mask][keep]
        beta = kernel_moments(graph.profile, c.dim).beta
        target = c.alpha * beta * c.density.value(coords[keep])
        out[f"M{i + 1}"] = float(np.max(np.abs(eps ** (-c.dim) * deg_i - target)))
    return out


def degree_ratios(model: MixtureModel, cloud: SampleCloud, graph: Graph) -> dict[str, float | None]:
    """Scaled degrees on the higher-dimensional component near and far from the other one.

    Near: within ``eps/2`` of the lower-dimensional patch, scaled by
    ``eps^-d_low``. Far: farther than ``eps``, scaled by ``eps^-d_high``.
    """
    keys = ("near_min", "near_max", "near_median", "far_min", "far_max", "far_median")
    if len(model.components) != 2 or model.dims[0] == model.dims[1]:
        return {k: None for k in keys}
    low = int(np.argmin(model.dims))
    high = 1 - low
    eps = graph.epsilon
    mask = cloud.labels == high
    dist = distance_to_patch(model.components[low].patch, cloud.points[mask])
    deg = graph.deg[mask]
    near = deg[dist <= eps / 2] * eps ** (-model.dims[low])
    far = deg[dist > eps] * eps ** (-model.dims[high])
    out = {}
    for name, arr in (("near", near), ("far", far)):
        if arr.size:
            out[f"{name}_min"] = float(arr.min())
            out[f"{name}_max"] = float(arr.max())
            out[f"{name}_median"] = float(np.median(arr))
        else:
            out[f"{name}_min"] = out[f"{name}_max"] = out[f"{name}_median"] = None
    return out


def _cluster_of(values: np.ndarray, j: int, tol: float = 1e-9) -> tuple[int, int]:
    a = j
    while a > 0 and abs(values[a] - values[a - 1]) <= tol * max(1.0, abs(values[a])):
        a -= 1
    b = j + 1
    while b < values.size and abs(values[b] - values[b - 1]) <= tol * max(1.0, abs(values[b])):
        b += 1
    return a, b


def aligned_vectors(result: SpectralResult, reference: ReferenceSpectrum, R: np.ndarray) -> np.ndarray:
    """Computed eigenvectors rotated (within reference clusters) and signed to match ``R``."""
    vals = reference.values[: result.k]
    U = result.eigenvectors.copy()
    j = 0
    while j < result.k:
        a, b = _cluster_of(vals, j)
        b = min(b, result.k)
        if b - a > 1:
            U[:, a:b] = procrustes_align(U[:, a:b], R[:, a:b])
        else:
            U[:, j] = align_sign(U[:, j], R[:, j])
        j = b
    return U


@dataclass
class RunRecord:
    seed: int
    n: int
    epsilon: float
    counts: list[int]
    fixed_counts: bool
    bandwidth: dict
    spectrum: SpectralResult
    alignment: dict | None
    diagnostics: dict
    timings: dict
    cloud: SampleCloud = field(repr=False, default=None)
    graph: Graph = field(repr=False, default=None)

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "n": self.n,
            "epsilon": self.epsilon,
            "counts": list(self.counts),
            "fixed_counts": self.fixed_counts,
            "bandwidth": self.bandwidth,
            "eigenvalues": [float(x) for x in self.spectrum.eigenvalues],
            "residuals": [float(x) for x in self.spectrum.residuals],
            "alignment": self.alignment,
            "diagnostics": self.diagnostics,
        }


@dataclass
class ResultBundle:
    config: ExperimentConfig
    model: MixtureModel
    reference: ReferenceSpectrum | None
    runs: list[RunRecord]
    files: dict[str, str] = field(default_factory=dict)

    def metadata(self) -> dict:
        return {
            "package": "unionlap",
            "version": __version__,
            "backend": _accel.backend(),
            "numpy": np.__version__,
            "pinned_counts": bool(self.config.counts),
            "count_note": (
                "per-component counts pinned to the configured values instead of binomial draws"
                if self.config.counts
                else "per-component counts drawn from the multinomial mixture law"
            ),
        }

    def to_dict(self) -> dict:
        runs = []
        for r in self.runs:
            s = r.summary()
            s["spectrum_file"] = self.files.get(f"spectrum_{r.seed}")
            s["vectors_file"] = self.files.get(f"vectors_{r.seed}")
            runs.append(s)
        return {
            "schema": "unionlap/bundle/1",
            "name": self.config.name,
            "config": self.config.to_dict(),
            "model": self.model.to_dict(),
            "metadata": self.metadata(),
            "reference": None if self.reference is None else self.reference.to_dict(),
            "reference_file": self.files.get("reference"),
            "runs": runs,
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_single(
    model: MixtureModel,
    cfg: ExperimentConfig,
    n: int,
    seed: int,
    epsilon: float,
    reference: ReferenceSpectrum | None,
    counts=None,
) -> RunRecord:
    """Sample, build, solve and score one ``(n, seed)`` instance."""
    timings = {}
    t0 = time.perf_counter()
    cloud = _stage("sample", sample_mixture, model, n, seed, counts)
    timings["sample"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    graph = _stage("graph", build_graph, cloud, epsilon, cfg.kernel)
    timings["graph"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    result = _stage("spectrum", smallest_eigenpairs, graph, cfg.kind, cfg.k, cfg.tol)
    timings["spectrum"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    bw = bandwidth_ok(n, model.max_dim, epsilon)
    if not bw.ok:
        log.warning("bandwidth eps=%g outside (ell_n, 1) = (%g, 1) at n=%d", epsilon, bw.ell, n)
    diag: dict[str, Any] = {}
    K = len(model.components)
    if K > 1:
        diag["variance_fraction_M1"] = [variance_fraction(result.eigenvectors[:, j], cloud.labels, 0)
                                        for j in range(result.k)]
    diag["kde_sup_error"] = kde_sup_errors(model, cloud, graph)
    diag["degree_ratios"] = degree_ratios(model, cloud, graph)
    alignment = None
    if reference is not None:
        ref_k = reference.truncate(result.k)
        R = None
        if reference.modes:
            R = reference_vectors(model, ref_k, cloud, graph if parse_kind(cfg.kind).is_normalized else None)
        report = _stage("align", align_spectra, result, ref_k, cloud, R)
        alignment = report.to_dict()
        if R is not None:
            U = aligned_vectors(result, ref_k, R)
            corr = [float(abs(np.mean(U[:, j] * R[:, j]))) for j in range(result.k)]
            diag["correlation"] = corr
            j = cfg.tl2_index - 1
            if 0 <= j < result.k:
                diag["tl2_proxy"] = float(np.sqrt(np.mean((U[:, j] - R[:, j]) ** 2)))
                diag["tl2_index"] = cfg.tl2_index
    timings["diagnostics"] = time.perf_counter() - t0
    return RunRecord(
        int(seed), int(n), float(epsilon), list(cloud.counts), cloud.fixed_counts,
        {"ok": bw.ok, "ell": bw.ell, "ratio": bw.ratio}, result, alignment, diag, timings, cloud, graph,
    )


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None) -> ResultBundle:
    """Run every seed of a single-``n`` configuration and emit the result files."""
    model = cfg.validate()
    n = int(cfg.n)
    epsilon = cfg.bandwidth.value(n, model.max_dim)
    reference = _stage("reference", reference_for, model, cfg, cfg.k)
    runs = [run_single(model, cfg, n, s, epsilon, reference, cfg.counts) for s in cfg.seeds]
    bundle = ResultBundle(cfg, model, reference, runs)
    out = out or cfg.out
    if out is not None:
        emit_bundle(bundle, Path(out))
    return bundle


def emit_bundle(bundle: ResultBundle, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    if bundle.reference is not None:
        ref = bundle.reference.to_dict()
        validate_json(ref, "reference")
        write_json(out / "reference.json", ref)
        bundle.files["reference"] = "reference.json"
    for r in bundle.runs:
        vec_name = f"vectors_seed{r.seed}.csv"
        spec_name = f"spectrum_seed{r.seed}.json"
        write_vectors_csv(out / vec_name, r.cloud, r.spectrum.eigenvectors)
        spec = r.spectrum.summary()
        spec["vectors_file"] = vec_name
        validate_json(spec, "spectrum")
        write_json(out / spec_name, spec)
        bundle.files[f"vectors_{r.seed}"] = vec_name
        bundle.files[f"spectrum_{r.seed}"] = spec_name
        timings[str(r.seed)] = r.timings
    doc = bundle.to_dict()
    validate_json(doc, "bundle")
    write_json(out / "bundle.json", doc)
    write_json(out / "timings.json", timings)
    check_bundle(out)


def check_bundle(out: str | Path) -> dict:
    """Schema and cross-file checks of an emitted bundle directory."""
    out = Path(out)
    doc = json.loads((out / "bundle.json").read_text(encoding="utf-8"))
    validate_json(doc, "bundle")
    if doc.get("reference_file"):
        validate_json(json.loads((out / doc["reference_file"]).read_text(encoding="utf-8")), "reference")
    for run in doc["runs"]:
        spec = json.loads((out / run["spectrum_file"]).read_text(encoding="utf-8"))
        validate_json(spec, "spectrum")
        if spec["vectors_file"] != run["vectors_file"]:
            raise jsonschema.ValidationError("spectrum and bundle disagree on the vectors file")
        if spec["eigenvalues"] != run["eigenvalues"]:
            raise jsonschema.ValidationError("spectrum and bundle disagree on eigenvalues")
        rows = validate_vectors_csv(out / run["vectors_file"], len(spec["eigenvalues"]))
        if rows != run["n"]:
            raise jsonschema.ValidationError(f"{run['vectors_file']}: {rows} rows for n={run['n']}")
    return doc


def validate_vectors_csv(path: Path, k: int) -> int:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    nx = header.index("label") if "label" in header else -1
    expected = [f"x{i + 1}" for i in range(nx)] + ["label"] + [f"u{j + 1}" for j in range(k)]
    if nx < 1 or header != expected:
        raise jsonschema.ValidationError(f"{path}: header {header} does not match x1..xN,label,u1..u{k}")
    return validate_csv(path, "vectors_row")


# --------------------------------------------------------------------------
# convergence sweep


@dataclass
class SweepTable:
    rows: list[dict]
    summary: list[dict]
    reference: ReferenceSpectrum | None
    timings: list[dict]

    def median(self, column: str) -> dict[int, float]:
        out = {}
        for n in sorted({r["n"] for r in self.rows}):
            vals = [r[column] for r in self.rows if r["n"] == n and r[column] is not None]
            out[n] = float(np.median(vals)) if vals else math.nan
        return out


def convergence_sweep(cfg: ExperimentConfig, out: str | Path | None = None) -> SweepTable:
    """One row per ``(n, seed)``: eigenvalue errors, KDE sup errors, degree ratios, TL^2 proxy."""
    model = cfg.validate(sweep=True)
    reference = _stage("reference", reference_for, model, cfg, cfg.k)
    rows, timings = [], []
    for n in cfg.ns:
        eps = cfg.bandwidth.value(int(n), model.max_dim)
        for seed in cfg.seeds:
            rec = run_single(model, cfg, int(n), int(seed), eps, reference)
            row: dict[str, Any] = {
                "n": int(n),
                "seed": int(seed),
                "epsilon": eps,
                "ell_n": rec.bandwidth["ell"],
                "bandwidth_ok": bool(rec.bandwidth["ok"]),
            }
            for j, lam in enumerate(rec.spectrum.eigenvalues):
                row[f"lambda{j + 1}"] = float(lam)
            rel = rec.alignment["pairs"] if rec.alignment else []
            for j in range(cfg.k):
                row[f"relerr{j + 1}"] = rel[j]["relative_error"] if j < len(rel) else None
            for i in range(len(model.components)):
                row[f"kde_sup_M{i + 1}"] = rec.diagnostics["kde_sup_error"].get(f"M{i + 1}")
            for key, val in rec.diagnostics["degree_ratios"].items():
                row[f"deg_{key}"] = val
            row["tl2_proxy"] = rec.diagnostics.get("tl2_proxy")
            rows.append(row)
            timings.append({"n": int(n), "seed": int(seed), **rec.timings})
            log.info("sweep n=%d seed=%d eps=%.4g done", n, seed, eps)
    table = SweepTable(rows, [], reference, timings)
    summary = []
    for n in sorted({r["n"] for r in rows}):
        entry = {"n": n}
        for col in [c for c in rows[0] if c.startswith(("relerr", "kde_sup", "tl2"))]:
            vals = [r[col] for r in rows if r["n"] == n and r[col] is not None]
            entry[f"median_{col}"] = float(np.median(vals)) if vals else None
        summary.append(entry)
    table.summary = summary
    out = out or cfg.out
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_rows_csv(out / "sweep.csv", rows)
        validate_csv(out / "sweep.csv", "sweep_row")
        doc = {
            "schema": "unionlap/sweep/1",
            "name": cfg.name,
            "config": cfg.to_dict(),
            "model": model.to_dict(),
            "reference": None if reference is None else reference.to_dict(),
            "table_file": "sweep.csv",
            "summary": summary,
        }
        validate_json(doc, "sweep")
        write_json(out / "sweep.json", doc)
        write_json(out / "timings.json", timings)
    return table


# --------------------------------------------------------------------------
# closed-form test functions for the nonlocal subcommand

FUNCTIONS = ("cos", "sqrt-density", "piecewise")


def _cos_mode(patch):
    if isinstance(patch, FlatPiece):
        L = float(patch.lengths[0])
        k = math.pi / L

        def v(s):
            return np.cos(k * (s[:, 0] + L / 2))

        def g(s):
            out = np.zeros_like(s)
            out[:, 0] = -k * np.sin(k * (s[:, 0] + L / 2))
            return out

        return v, g
    r = float(patch.radius)

    def v(s):
        return np.cos(s[:, 0] / r)

    def g(s):
        return (-np.sin(s[:, 0] / r) / r)[:, None]

    return v, g


def named_function(model: MixtureModel, name: str, epsilon: float, profile: str = "indicator"):
    """A test function by name and its local limit energy (``None`` when it has none).

    ``cos``
        first cosine along the first axis of each patch (``cos theta`` on a circle)
    ``sqrt-density``
        ``sqrt(alpha_i rho_i)``, the ground state with zero limit energy
    ``piecewise``
        degree-corrected levels ``+1, -1, +1, ...`` per component
    """
    from .continuum import SmoothFunctionSpec, limit_energy, piecewise_constant, sqrt_density_function

    if name == "cos":
        pairs = [_cos_mode(c.patch) for c in model.components]
        u = SmoothFunctionSpec([p[0] for p in pairs], [p[1] for p in pairs])
        return u, limit_energy(model, u, profile)
    if name == "sqrt-density":
        u = sqrt_density_function(model)
        return u, limit_energy(model, u, profile)
    if name == "piecewise":
        levels = [(-1.0) ** i for i in range(len(model.components))]
        return piecewise_constant(model, levels, epsilon, profile), None
    raise ConfigError(f"unknown function {name!r}; choose from {', '.join(FUNCTIONS)}")
