from __future__ import annotations

import math

import numpy as np
import pytest

from unionlap.continuum import ResolutionError, metric_graph_spectrum_fd
from unionlap.continuum.metric_graph import build_mesh
from unionlap.manifolds import Component, DensitySpec, FlatPiece, MixtureModel, model_preset


def test_single_segment_matches_cosine_spectrum():
    model = model_preset("segment")
    ref = metric_graph_spectrum_fd(model, "indicator", 1e-3, 4)
    exact = np.array([0, 1, 4, 9]) * math.pi**2 / (3 * 1.69)
    assert ref.values[0] == 0.0
    assert np.max(np.abs(ref.values[1:] - exact[1:]) / exact[1:]) < 1e-4
    assert ref.source == "coupled"


def test_unnormalized_segment_scaling():
    model = model_preset("segment")
    ref = metric_graph_spectrum_fd(model, "indicator", 1e-3, 3, kind="unnormalized")
    exact = (2.0 / 3.0) / 1.3 * math.pi**2 / 1.69 * np.array([1, 4])
    assert np.allclose(ref.values[1:], exact, rtol=1e-4)


def test_crossing_segments_second_order_self_convergence():
    model = model_preset("crossing-segments")
    hs = [0.01, 0.005, 0.0025]
    vals = [metric_graph_spectrum_fd(model, "indicator", h, 6).values for h in hs]
    d1 = np.abs(vals[0] - vals[1])[1:]
    d2 = np.abs(vals[1] - vals[2])[1:]
    ratio = d1 / d2
    assert np.all((ratio > 3.5) & (ratio < 4.5))


def test_crossing_junction_is_shared():
    mesh = build_mesh(model_preset("crossing-segments"), 0.05)
    assert len(mesh.junctions) == 1
    degree = np.bincount(np.array([e[:2] for e in mesh.edges]).ravel(), minlength=mesh.size)
    assert degree.max() == 4


def test_spacing_must_resolve_the_shortest_edge():
    with pytest.raises(ResolutionError):
        metric_graph_spectrum_fd(model_preset("crossing-segments"), "indicator", 0.06, 3)


def test_free_end_density_changes_spectrum():
    seg = FlatPiece(np.zeros(1), [[1.0]], [1.0])
    flat = metric_graph_spectrum_fd(MixtureModel((Component(seg, DensitySpec(), 1.0),)), "indicator", 2e-3, 3)
    bumpy = MixtureModel((Component(seg, DensitySpec("cosine", 0.5, (2 * math.pi,)), 1.0),))
    ref = metric_graph_spectrum_fd(bumpy, "indicator", 2e-3, 3)
    assert ref.values[0] == 0.0
    assert not np.allclose(ref.values[1:], flat.values[1:], rtol=1e-3)
