"""Embedded patches, mixture measures on their union, and sampling.

Two patch kinds are supported: flat pieces (an axis box of local
coordinates pushed into ``R^N`` by an orthonormal frame) and circles
parametrized by arclength. A :class:`MixtureModel` places a density and a
mixing weight on each patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ORTHO_TOL = 1e-12
_MASK64 = (1 << 64) - 1


class SamplingError(RuntimeError):
    pass


class DegenerateIntersection(ValueError):
    pass


def _as_frame(frame, ambient: int | None = None) -> np.ndarray:
    F = np.atleast_2d(np.asarray(frame, dtype=float))
    if ambient is not None and F.shape[1] != ambient:
        raise ValueError("frame vectors must live in the ambient space")
    G = F @ F.T
    if not np.allclose(G, np.eye(F.shape[0]), atol=ORTHO_TOL, rtol=0):
        raise ValueError("frame vectors must be orthonormal to 1e-12")
    return F


@dataclass(frozen=True, eq=False)
class FlatPiece:
    """Box ``prod [-L_j/2, L_j/2]`` embedded by ``origin + s @ frame``."""

    origin: np.ndarray
    frame: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).ravel()
        frame = _as_frame(self.frame, origin.size)
        lengths = np.asarray(self.lengths, dtype=float).ravel()
        if lengths.size != frame.shape[0] or np.any(lengths <= 0):
            raise ValueError("need one positive side length per frame vector")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "lengths", lengths)

    kind = "flat"
    has_boundary = True

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.origin.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def embed(self, coords) -> np.ndarray:
        s = np.asarray(coords, dtype=float).reshape(-1, self.dim)
        return self.origin + s @ self.frame

    def local_coords(self, points) -> np.ndarray:
        return (np.atleast_2d(points) - self.origin) @ self.frame.T

    def residual(self, points) -> np.ndarray:
        """Distance of each point to the affine span of the patch."""
        P = np.atleast_2d(points)
        back = self.embed(self.local_coords(P))
        return np.linalg.norm(P - back, axis=1)

    def contains(self, coords, tol: float = 1e-12) -> np.ndarray:
        s = np.asarray(coords, dtype=float).reshape(-1, self.dim)
        return np.all(np.abs(s) <= self.lengths / 2 + tol, axis=1)

    def boundary_distance(self, coords) -> np.ndarray:
        s = np.asarray(coords, dtype=float).reshape(-1, self.dim)
        return np.min(self.lengths / 2 - np.abs(s), axis=1)

    def uniform_coords(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return (rng.random((m, self.dim)) - 0.5) * self.lengths

    def to_dict(self) -> dict:
        return {
            "kind": "flat",
            "dim": self.dim,
            "origin": self.origin.tolist(),
            "frame": self.frame.tolist(),
            "lengths": self.lengths.tolist(),
        }


@dataclass(frozen=True, eq=False)
class Circle:
    """Circle of radius ``radius`` in the plane of a 2-frame; coordinate is arclength."""

    center: np.ndarray
    radius: float
    frame: np.ndarray

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).ravel()
        frame = _as_frame(self.frame, center.size)
        if frame.shape[0] != 2:
            raise ValueError("a circle needs an orthonormal 2-frame")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "radius", float(self.radius))

    kind = "circle"
    has_boundary = False
    dim = 1

    @property
    def ambient_dim(self) -> int:
        return self.center.size

    @property
    def volume(self) -> float:
        return 2.0 * math.pi * self.radius

    @property
    def lengths(self) -> np.ndarray:
        return np.array([self.volume])

    def embed(self, coords) -> np.ndarray:
        s = np.asarray(coords, dtype=float).reshape(-1)
        phi = s / self.radius
        return self.center + self.radius * (
            np.cos(phi)[:, None] * self.frame[0] + np.sin(phi)[:, None] * self.frame[1]
        )

    def local_coords(self, points) -> np.ndarray:
        rel = np.atleast_2d(points) - self.center
        phi = np.arctan2(rel @ self.frame[1], rel @ self.frame[0]) % (2 * math.pi)
        return (phi * self.radius)[:, None]

    def residual(self, points) -> np.ndarray:
        P = np.atleast_2d(points)
        return np.linalg.norm(P - self.embed(self.local_coords(P)), axis=1)

    def contains(self, coords, tol: float = 1e-12) -> np.ndarray:
        s = np.asarray(coords, dtype=float).reshape(-1)
        return (s >= -tol) & (s <= self.volume + tol)

    def boundary_distance(self, coords) -> np.ndarray:
        return np.full(np.asarray(coords).reshape(-1).size, np.inf)

    def uniform_coords(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return (rng.random(m) * self.volume)[:, None]

    def to_dict(self) -> dict:
        return {
            "kind": "circle",
            "dim": 1,
            "center": self.center.tolist(),
            "radius": self.radius,
            "frame": self.frame.tolist(),
        }


Patch = FlatPiece | Circle


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """Probability density on a patch: uniform, or ``(1 + a cos(w . s)) / Z``.

    ``Z`` is filled in by :meth:`bind` from the patch geometry.
    """

    kind: str = "uniform"
    amplitude: float = 0.0
    frequency: tuple[float, ...] = ()
    normalization: float | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "cosine"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.kind == "cosine" and not 0 <= self.amplitude < 1:
            raise ValueError("cosine bump amplitude must lie in [0, 1)")
        object.__setattr__(self, "frequency", tuple(float(w) for w in self.frequency))

    @property
    def is_uniform(self) -> bool:
        return self.kind == "uniform" or self.amplitude == 0.0

    def bind(self, patch: Patch) -> "DensitySpec":
        if self.kind == "uniform":
            return DensitySpec("uniform", normalization=patch.volume)
        w = np.asarray(self.frequency, dtype=float)
        if w.size != patch.dim:
            raise ValueError("cosine bump needs one frequency per patch dimension")
        if isinstance(patch, Circle):
            turns = w[0] * patch.radius
            if abs(turns - round(turns)) > 1e-12:
                raise ValueError("cosine bump on a circle needs frequency * radius integral")
            bump = patch.volume if round(turns) == 0 else 0.0
        else:
            # int over [-L/2, L/2] of exp(i w s) is real: 2 sin(w L / 2) / w
            factors = [L if wj == 0 else 2 * math.sin(wj * L / 2) / wj for wj, L in zip(w, patch.lengths)]
            bump = float(np.prod(factors))
        Z = patch.volume + self.amplitude * bump
        return DensitySpec("cosine", self.amplitude, self.frequency, Z)

    def value(self, coords) -> np.ndarray:
        s = np.atleast_2d(np.asarray(coords, dtype=float))
        if self.normalization is None:
            raise RuntimeError("density must be bound to a patch before evaluation")
        if self.is_uniform:
            return np.full(s.shape[0], 1.0 / self.normalization)
        phase = s @ np.asarray(self.frequency)
        return (1.0 + self.amplitude * np.cos(phase)) / self.normalization

    def gradient(self, coords) -> np.ndarray:
        s = np.atleast_2d(np.asarray(coords, dtype=float))
        if self.is_uniform:
            return np.zeros_like(s)
        w = np.asarray(self.frequency)
        return -self.amplitude * np.sin(s @ w)[:, None] * w / self.normalization

    @property
    def bounds(self) -> tuple[float, float]:
        Z = self.normalization
        return (1 - self.amplitude) / Z, (1 + self.amplitude) / Z

    @property
    def lipschitz(self) -> float:
        return self.amplitude * float(np.linalg.norm(self.frequency)) / self.normalization

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform"}
        return {"kind": "cosine", "amplitude": self.amplitude, "frequency": list(self.frequency)}


@dataclass(frozen=True, eq=False)
class Component:
    patch: Patch
    density: DensitySpec
    alpha: float

    @property
    def dim(self) -> int:
        return self.patch.dim


@dataclass(frozen=True, eq=False)
class MixtureModel:
    components: tuple[Component, ...]
    name: str = "custom"

    def __post_init__(self):
        comps = tuple(
            Component(c.patch, c.density.bind(c.patch), float(c.alpha)) for c in self.components
        )
        if not comps:
            raise ValueError("a mixture needs at least one component")
        ambient = {c.patch.ambient_dim for c in comps}
        if len(ambient) != 1:
            raise ValueError("all patches must share the ambient dimension")
        alphas = np.array([c.alpha for c in comps])
        if np.any(alphas <= 0) or abs(alphas.sum() - 1) > 1e-12:
            raise ValueError("mixing weights must be positive and sum to 1")
        object.__setattr__(self, "components", comps)

    @property
    def ambient_dim(self) -> int:
        return self.components[0].patch.ambient_dim

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.dim for c in self.components)

    @property
    def max_dim(self) -> int:
        return max(self.dims)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([c.alpha for c in self.components])

    def to_dict(self) -> dict:
        out = []
        for c in self.components:
            d = c.patch.to_dict()
            d["alpha"] = c.alpha
            d["density"] = c.density.to_dict()
            out.append(d)
        return {"name": self.name, "components": out}

    @classmethod
    def from_dict(cls, spec: dict) -> "MixtureModel":
        comps = []
        for c in spec["components"]:
            kind = c["kind"]
            if kind == "flat":
                patch = FlatPiece(c["origin"], c["frame"], c["lengths"])
                if "dim" in c and int(c["dim"]) != patch.dim:
                    raise ValueError("declared dim does not match the frame")
            elif kind == "circle":
                patch = Circle(c["center"], c["radius"], c["frame"])
            else:
                raise ValueError(f"unknown patch kind {kind!r}")
            dens = c.get("density", {"kind": "uniform"})
            density = DensitySpec(
                dens.get("kind", "uniform"), dens.get("amplitude", 0.0), tuple(dens.get("frequency", ()))
            )
            comps.append(Component(patch, density, c["alpha"]))
        return cls(tuple(comps), spec.get("name", "custom"))


def density_at(model: MixtureModel, component: int, coords) -> np.ndarray | float:
    """Component density (without the mixing weight) at local coordinates."""
    comp = model.components[component]
    s = np.asarray(coords, dtype=float)
    scalar = s.ndim <= 1 and s.size == comp.dim
    s2 = s.reshape(-1, comp.dim)
    if not np.all(comp.patch.contains(s2)):
        raise ValueError("coordinates outside the patch parameter box")
    vals = comp.density.value(s2)
    return float(vals[0]) if scalar else vals


# --------------------------------------------------------------------------
# sampling


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def sub_seed(seed: int, stream: int) -> int:
    """Per-stream seed: splitmix64 applied to the base seed, then to the stream index."""
    return splitmix64(splitmix64(seed & _MASK64) ^ (stream & _MASK64))


COUNT_STREAM = 0xFFFF


@dataclass(eq=False)
class SampleCloud:
    points: np.ndarray
    labels: np.ndarray
    coords: np.ndarray
    counts: tuple[int, ...]
    seed: int
    fixed_counts: bool = False

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def component_coords(self, i: int, dim: int) -> np.ndarray:
        return self.coords[self.labels == i, :dim]

    def subsample(self, idx) -> "SampleCloud":
        idx = np.asarray(idx)
        labels = self.labels[idx]
        counts = tuple(int(np.sum(labels == i)) for i in range(len(self.counts)))
        return SampleCloud(self.points[idx], labels, self.coords[idx], counts, self.seed, self.fixed_counts)


def _sample_component(comp: Component, m: int, rng: np.random.Generator) -> np.ndarray:
    patch, dens = comp.patch, comp.density
    if dens.is_uniform:
        return patch.uniform_coords(rng, m)
    ceiling = (1 + dens.amplitude) / dens.normalization
    out = np.empty((m, patch.dim))
    filled, proposals = 0, 0
    budget = 1000 * max(m, 1)
    while filled < m:
        batch = max(64, 2 * (m - filled))
        s = patch.uniform_coords(rng, batch)
        accept = rng.random(batch) * ceiling <= dens.value(s)
        proposals += batch
        take = s[accept][: m - filled]
        out[filled : filled + len(take)] = take
        filled += len(take)
        if filled < m and proposals >= budget:
            raise SamplingError(f"rejection sampling stalled after {proposals} proposals")
    return out


def sample_mixture(
    model: MixtureModel, n: int, seed: int, counts: Sequence[int] | None = None
) -> SampleCloud:
    """Draw ``n`` i.i.d. points from the mixture.

    Per-component counts are multinomial (binomial for two components) unless
    ``counts`` pins them. Each component uses its own generator seeded from
    ``(seed, component index)``, so the draw does not depend on call order.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    K = len(model.components)
    fixed = counts is not None
    if fixed:
        counts = tuple(int(c) for c in counts)
        if len(counts) != K or sum(counts) != n or min(counts) < 0:
            raise ValueError("pinned counts must be nonnegative, one per component, summing to n")
    else:
        rng = np.random.Generator(np.random.PCG64(sub_seed(seed, COUNT_STREAM)))
        counts = tuple(int(c) for c in rng.multinomial(n, model.alphas))
    kmax = max(model.dims)
    pts, labels, coords = [], [], []
    for i, comp in enumerate(model.components):
        rng = np.random.Generator(np.random.PCG64(sub_seed(seed, i)))
        s = _sample_component(comp, counts[i], rng)
        pts.append(comp.patch.embed(s))
        labels.append(np.full(counts[i], i, dtype=np.int64))
        pad = np.full((counts[i], kmax), np.nan)
        pad[:, : comp.dim] = s
        coords.append(pad)
    return SampleCloud(
        np.vstack(pts), np.concatenate(labels), np.vstack(coords), counts, int(seed), fixed
    )


# --------------------------------------------------------------------------
# intersections and angles


def _shared_directions(A: FlatPiece, B: FlatPiece, tol: float = 1e-10):
    U, s, Vt = np.linalg.svd(A.frame @ B.frame.T)
    shared = int(np.sum(s > 1 - tol))
    return U, s, Vt, shared


def flat_intersection(A: FlatPiece, B: FlatPiece, tol: float = 1e-9):
    """Affine intersection of the spans of two flat pieces.

    Returns ``(point, frame)`` where ``frame`` spans the shared tangent
    directions (possibly zero rows). Raises if the spans do not meet.
    """
    M = np.hstack([A.frame.T, -B.frame.T])
    rhs = B.origin - A.origin
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.linalg.norm(M @ sol - rhs) > tol:
        raise DegenerateIntersection("affine spans of the patches do not intersect")
    point = A.origin + sol[: A.dim] @ A.frame
    U, s, Vt, shared = _shared_directions(A, B)
    frame = (U[:, :shared].T @ A.frame) if shared else np.zeros((0, A.ambient_dim))
    return point, frame


def principal_angle(A: Patch, B: Patch) -> float:
    """Smallest principal angle between tangent spaces modulo their shared directions."""
    if not (isinstance(A, FlatPiece) and isinstance(B, FlatPiece)):
        raise TypeError("principal angles are defined here for flat pieces only")
    flat_intersection(A, B)
    _, s, _, shared = _shared_directions(A, B)
    if shared >= min(A.dim, B.dim):
        raise DegenerateIntersection("one tangent space contains the other")
    cos_max = float(np.clip(s[shared], 0.0, 1.0))
    return float(math.acos(cos_max))


@dataclass(frozen=True)
class Intersection:
    point: np.ndarray
    frame: np.ndarray
    angle: float

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    def distance(self, points) -> np.ndarray:
        rel = np.atleast_2d(points) - self.point
        if self.dim:
            rel = rel - (rel @ self.frame.T) @ self.frame
        return np.linalg.norm(rel, axis=1)

    def project(self, points) -> np.ndarray:
        rel = np.atleast_2d(points) - self.point
        if not self.dim:
            return np.broadcast_to(self.point, rel.shape).copy()
        return self.point + (rel @ self.frame.T) @ self.frame


def distance_to_patch(patch: Patch, points) -> np.ndarray:
    """Euclidean distance from ambient points to a patch."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(patch, Circle):
        return np.linalg.norm(P - patch.embed(patch.local_coords(P)), axis=1)
    s = np.clip(patch.local_coords(P), -patch.lengths / 2, patch.lengths / 2)
    return np.linalg.norm(P - patch.embed(s), axis=1)


def model_intersection(model: MixtureModel, i: int = 0, j: int = 1) -> Intersection:
    A, B = model.components[i].patch, model.components[j].patch
    point, frame = flat_intersection(A, B)
    return Intersection(point, frame, principal_angle(A, B))


# --------------------------------------------------------------------------
# bandwidth scaling


def ell_n(n: int, d: int) -> float:
    """Connectivity length scale: ``sqrt(log log n / n)`` for d=1, ``(log n / n)^(1/d)`` else."""
    if n < 3:
        raise ValueError("ell_n needs n >= 3")
    if d == 1:
        return math.sqrt(math.log(math.log(n)) / n)
    return (math.log(n) / n) ** (1.0 / d)


@dataclass(frozen=True)
class BandwidthReport:
    ok: bool
    ell: float
    ratio: float

    def __bool__(self):
        return self.ok


def bandwidth_ok(n: int, d_max: int, epsilon: float) -> BandwidthReport:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    ell = ell_n(n, d_max)
    return BandwidthReport(bool(ell < epsilon < 1), ell, epsilon / ell)


def bandwidth_rule(n: int, d_max: int, factor: float = 2.0, exponent: float = 0.9) -> float:
    """``factor * ell_n ** exponent``; the default stays above ell_n and vanishes."""
    return factor * ell_n(n, d_max) ** exponent


# --------------------------------------------------------------------------
# presets

E = np.eye(3)


def paper_rect_segment(alpha1: float = 2600 / 5400) -> MixtureModel:
    """Vertical segment of length 1.3 piercing a 1.4 x 1.0 rectangle at its center."""
    segment = FlatPiece(np.zeros(3), E[[2]], [1.3])
    rectangle = FlatPiece(np.zeros(3), E[[0, 1]], [1.4, 1.0])
    return MixtureModel(
        (Component(segment, DensitySpec(), alpha1), Component(rectangle, DensitySpec(), 1 - alpha1)),
        name="paper-rect-segment",
    )


def unit_circle(density: DensitySpec | None = None) -> MixtureModel:
    circle = Circle(np.zeros(2), 1.0, np.eye(2))
    return MixtureModel((Component(circle, density or DensitySpec(), 1.0),), name="unit-circle")


def crossing_segments(length: float = 1.0, density: DensitySpec | None = None) -> MixtureModel:
    """Two segments in the plane crossing orthogonally at their midpoints."""
    dens = density or DensitySpec()
    a = FlatPiece(np.zeros(2), [[1.0, 0.0]], [length])
    b = FlatPiece(np.zeros(2), [[0.0, 1.0]], [length])
    return MixtureModel((Component(a, dens, 0.5), Component(b, dens, 0.5)), name="crossing-segments")


def single_segment(length: float = 1.3) -> MixtureModel:
    seg = FlatPiece(np.zeros(1), [[1.0]], [length])
    return MixtureModel((Component(seg, DensitySpec(), 1.0),), name="segment")


MODEL_PRESETS = {
    "paper-rect-segment": paper_rect_segment,
    "unit-circle": unit_circle,
    "crossing-segments": crossing_segments,
    "segment": single_segment,
}


def model_preset(name: str) -> MixtureModel:
    try:
        return MODEL_PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown model preset {name!r}") from None
