from __future__ import annotations

import math

import numpy as np
import pytest

from unionlap.continuum import (
    SmoothFunctionSpec,
    l2_norm_sq,
    limit_energy,
    log_layer_energy,
    merged_union_spectrum,
    mode_function,
    nonlocal_energy,
    quadrature_nodes,
    sqrt_density_function,
)
from unionlap.graph import build_graph, dirichlet_normalized
from unionlap.harness import named_function
from unionlap.manifolds import Component, DensitySpec, FlatPiece, MixtureModel, model_preset, sample_mixture


@pytest.fixture(scope="module")
def circle():
    return model_preset("unit-circle")


def test_circle_cosine_limit_energy(circle):
    u, limit = named_function(circle, "cos", 0.1)
    assert limit == pytest.approx(1.0 / 6.0, rel=1e-12)
    # u = cos has squared norm 1/2, and the Rayleigh quotient is the eigenvalue 1/3
    assert limit / l2_norm_sq(circle, u) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_circle_nonlocal_energy_approaches_limit(circle):
    u, limit = named_function(circle, "cos", 0.1)
    errs = [abs(nonlocal_energy(circle, u, e).value - limit) for e in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_sqrt_density_has_zero_energy(circle):
    u = sqrt_density_function(circle)
    assert limit_energy(circle, u) == pytest.approx(0.0, abs=1e-14)
    assert nonlocal_energy(circle, u, 0.1).value == pytest.approx(0.0, abs=1e-12)


def test_nonlocal_energy_matches_graph_energy_in_expectation():
    # the graph energy is a Monte-Carlo estimate of the nonlocal one
    seg = MixtureModel((Component(FlatPiece(np.zeros(1), [[1.0]], [1.0]), DensitySpec(), 1.0),))
    u = SmoothFunctionSpec([lambda s: np.cos(math.pi * (s[:, 0] + 0.5))])
    eps = 0.1
    target = nonlocal_energy(seg, u, eps).value
    vals = []
    for seed in range(4):
        cloud = sample_mixture(seg, 4000, seed)
        g = build_graph(cloud, eps)
        vals.append(dirichlet_normalized(g, u.value(0, cloud.coords[:, :1])))
    assert np.mean(vals) == pytest.approx(target, rel=0.03)


def test_rayleigh_quotient_of_segment_mode(paper_model):
    # first segment eigenfunction extended by zero has limit energy equal to its eigenvalue
    ref = merged_union_spectrum(paper_model, "indicator", "normalized", 6)
    mode = next(m for m in ref.modes if m.component == 0 and any(m.index))
    u = SmoothFunctionSpec(
        [lambda s: mode_function(paper_model, mode, 0, s), lambda s: np.zeros(s.shape[0])],
        [
            lambda s: -math.pi / 1.3 * np.sin(math.pi * (s + 0.65) / 1.3) / math.sqrt(paper_model.alphas[0] / 2),
            lambda s: np.zeros_like(s),
        ],
    )
    assert l2_norm_sq(paper_model, u) == pytest.approx(1.0, rel=1e-10)
    assert limit_energy(paper_model, u) == pytest.approx(mode.value, rel=1e-10)


def test_trace_mismatch_in_codim_one_is_infinite():
    model = model_preset("crossing-segments")
    u = SmoothFunctionSpec.constant([0.0, 1.0])
    assert limit_energy(model, u) == math.inf
    assert limit_energy(model, SmoothFunctionSpec.constant([1.0, 1.0])) < math.inf


def test_piecewise_constant_energy_bounded_below_in_codim_one():
    model = model_preset("crossing-segments")
    u = SmoothFunctionSpec.constant([0.0, 1.0])
    vals = [nonlocal_energy(model, u, e).value for e in (0.2, 0.1, 0.05)]
    assert min(vals) > 0.1


@pytest.mark.parametrize("eps", [0.01, 0.001])
def test_log_layer_matches_closed_form(eps):
    layer = log_layer_energy(eps)
    assert layer.closed_form == pytest.approx(4 * math.pi / abs(math.log(eps)), rel=1e-15)
    assert layer.relative_gap < 1e-6


def test_log_layer_decreases_to_zero():
    vals = [log_layer_energy(e, n_radial=50, n_angular=16).quadrature for e in (1e-2, 1e-4, 1e-8, 1e-16)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.4


def test_quadrature_weights_integrate_the_measure(paper_model):
    nodes = quadrature_nodes(paper_model, [0.01, 0.05])
    assert nodes.weights.sum() == pytest.approx(1.0, rel=1e-12)
    for i, a in enumerate(paper_model.alphas):
        assert nodes.weights[nodes.labels == i].sum() == pytest.approx(a, rel=1e-12)


def test_node_budget_coarsens_with_warning(paper_model):
    u = sqrt_density_function(paper_model)
    with pytest.warns(UserWarning):
        res = nonlocal_energy(paper_model, u, 0.05, max_nodes=20_000)
    assert res.warning
    assert res.nodes <= 20_000


def test_invalid_epsilon(circle):
    with pytest.raises(ValueError):
        nonlocal_energy(circle, sqrt_density_function(circle), 1.5)
    with pytest.raises(ValueError):
        log_layer_energy(2.0)
