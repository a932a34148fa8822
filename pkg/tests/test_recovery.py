from __future__ import annotations

import math

import numpy as np
import pytest

from unionlap.continuum import (
    RecoveryError,
    build_recovery,
    interpolation_weight,
    nonlocal_energy,
    piecewise_constant,
)
from unionlap.continuum.recovery import FAR, MID, NEAR
from unionlap.manifolds import Component, DensitySpec, FlatPiece, MixtureModel, model_preset


def test_weight_profile():
    eps = 0.01
    d = np.array([0.001, 0.01, 0.1, 0.5, math.sqrt(0.01) ** 1.5])
    w = interpolation_weight(d, eps)
    assert w[0] == 1.0 and w[1] == 1.0
    assert w[2] == pytest.approx(0.0, abs=1e-15) and w[3] == 0.0
    # midway in log scale between eps and sqrt(eps)
    assert interpolation_weight(eps**0.75, eps) == pytest.approx(0.5)


def test_regions_and_values(paper_model):
    eps = 0.01
    rec = build_recovery(paper_model, 2.0, -1.0, eps)
    pts = np.array([[0.005, 0.0, 0.0], [0.05, 0.0, 0.0], [0.3, 0.0, 0.0]])
    assert rec.region(pts).tolist() == [NEAR, MID, FAR]
    coords = pts[:, :2]
    f = rec.ratio(paper_model, 1, coords, pts, None)
    s1 = 1 / math.sqrt(eps * paper_model.alphas[0] * 2 / 1.3)
    s2 = 1 / math.sqrt(eps**2 * paper_model.alphas[1] * math.pi / 1.4)
    assert f[0] == pytest.approx(2.0 * s1)
    assert f[2] == pytest.approx(-1.0 * s2)
    w = interpolation_weight(0.05, eps)
    assert f[1] == pytest.approx(-s2 + w * (2 * s1 + s2))
    # on the segment the function is the degree-corrected u1
    assert rec.ratio(paper_model, 0, np.array([[0.3]]), None, None)[0] == pytest.approx(2.0 * s1)


def test_recovery_beats_piecewise_constant(paper_model):
    eps = 0.02
    rec = nonlocal_energy(paper_model, build_recovery(paper_model, 1.0, 0.0, eps), eps).value
    pc = nonlocal_energy(paper_model, piecewise_constant(paper_model, [1.0, 0.0], eps), eps).value
    assert 0 < rec < 0.05 * pc


def test_layer_energy_matches_capacity_estimate(paper_model):
    # sigma2 eps^2 (alpha2 rho2)^2 (jump of f)^2 4 pi / |log eps| with f = u1 / sqrt(eps alpha1 beta1 rho1)
    eps = 0.004
    a1, a2 = paper_model.alphas
    jump2 = 1.0 / (eps * a1 * 2 / 1.3)
    predicted = (math.pi / 4) * eps**2 * (a2 / 1.4) ** 2 * jump2 * 4 * math.pi / abs(math.log(eps))
    rec = nonlocal_energy(paper_model, build_recovery(paper_model, 1.0, 0.0, eps), eps).value
    assert rec == pytest.approx(predicted, rel=0.1)


def test_validity_checks(paper_model):
    with pytest.raises(RecoveryError):
        build_recovery(paper_model, 1.0, 0.0, 0.3)
    with pytest.raises(RecoveryError):
        build_recovery(model_preset("crossing-segments"), 1.0, 0.0, 0.01)
    with pytest.raises(RecoveryError):
        build_recovery(model_preset("unit-circle"), 1.0, 0.0, 0.01)
    # a shallow angle widens the interaction band C eps
    t = 0.05
    seg = FlatPiece(np.zeros(3), [[0.0, math.cos(t), math.sin(t)]], [1.3])
    rect = FlatPiece(np.zeros(3), np.eye(3)[[0, 1]], [1.4, 1.0])
    tilted = MixtureModel((Component(seg, DensitySpec(), 0.5), Component(rect, DensitySpec(), 0.5)))
    with pytest.raises(RecoveryError):
        build_recovery(tilted, 1.0, 0.0, 0.01)
    assert build_recovery(tilted, 1.0, 0.0, 1e-4).region_constant == pytest.approx(2 / math.sin(t))
