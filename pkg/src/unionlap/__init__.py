"""Graph Laplacians on samples from unions of intersecting manifolds.

The package builds epsilon-graphs on point clouds drawn from mixtures of flat
pieces and circles, computes normalized and unnormalized Laplacian spectra and
Dirichlet energies, and compares them with their continuum limits.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .graph import (
    Graph,
    LaplacianKind,
    NormalizedSym,
    Unnormalized,
    UnnormalizedScaled,
    apply_laplacian,
    build_graph,
    dirichlet_normalized,
    dirichlet_unnormalized,
    energy,
    laplacian_matrix,
    parse_kind,
)
from .kernels import KernelProfile, Moments, kernel_moments, parse_kernel
from .manifolds import (
    Circle,
    Component,
    DensitySpec,
    FlatPiece,
    MixtureModel,
    SampleCloud,
    bandwidth_ok,
    bandwidth_rule,
    ell_n,
    model_preset,
    sample_mixture,
)
from .spectra import (
    AlignmentReport,
    SolverError,
    SpectralResult,
    align_spectra,
    separation_score,
    smallest_eigenpairs,
    variance_fraction,
)
from .transport import TL2Result, tl2_exact, tl2_proxy

__all__ = [
    "AlignmentReport",
    "Circle",
    "Component",
    "DensitySpec",
    "FlatPiece",
    "Graph",
    "KernelProfile",
    "LaplacianKind",
    "MixtureModel",
    "Moments",
    "NormalizedSym",
    "SampleCloud",
    "SolverError",
    "SpectralResult",
    "TL2Result",
    "Unnormalized",
    "UnnormalizedScaled",
    "align_spectra",
    "apply_laplacian",
    "bandwidth_ok",
    "bandwidth_rule",
    "build_graph",
    "dirichlet_normalized",
    "dirichlet_unnormalized",
    "ell_n",
    "energy",
    "kernel_moments",
    "laplacian_matrix",
    "model_preset",
    "parse_kernel",
    "parse_kind",
    "sample_mixture",
    "separation_score",
    "smallest_eigenpairs",
    "tl2_exact",
    "tl2_proxy",
    "variance_fraction",
]
