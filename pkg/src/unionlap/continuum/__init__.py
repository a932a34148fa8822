"""Limiting objects: reference spectra, nonlocal and local energies, recovery layers."""

from .metric_graph import ResolutionError, metric_graph_spectrum_fd
from .reference import (
    CoupledSpectrumError,
    Mode,
    ReferenceSpectrum,
    UnsupportedReference,
    degree_correction,
    merged_union_spectrum,
    mode_function,
    reference_spectrum_component,
    reference_vectors,
)
from .energies import (
    LogLayer,
    NonlocalResult,
    SmoothFunctionSpec,
    l2_norm_sq,
    limit_energy,
    log_layer_energy,
    nonlocal_energy,
    quadrature_nodes,
    sqrt_density_function,
)
from .recovery import (
    DegreeCorrected,
    RecoveryError,
    RecoveryFunction,
    build_recovery,
    interpolation_weight,
    piecewise_constant,
)
