from __future__ import annotations

import math

import numpy as np
import pytest

from unionlap.continuum import (
    CoupledSpectrumError,
    UnsupportedReference,
    merged_union_spectrum,
    mode_function,
    reference_spectrum_component,
    reference_vectors,
)
from unionlap.manifolds import Circle, DensitySpec, FlatPiece, model_preset, sample_mixture

PI2 = math.pi**2


def test_paper_normalized_union_spectrum_exact(paper_model):
    ref = merged_union_spectrum(paper_model, "indicator", "normalized", 6)
    expect = [0, 0, PI2 / (4 * 1.96), PI2 / (3 * 1.69), PI2 / 4, PI2 / (4 * 1.96) + PI2 / 4]
    assert np.allclose(ref.values, expect, rtol=0, atol=1e-14)
    assert ref.entries[0][:2] == (0.0, 2)
    assert ref.piecewise_constant() == [1]


def test_paper_unnormalized_union_spectrum(paper_model):
    ref = merged_union_spectrum(paper_model, "indicator", "unnormalized", 4)
    alpha2 = paper_model.alphas[1]
    sigma2 = math.pi / 4
    first = sigma2 * alpha2 / 1.4 * PI2 / 1.96
    assert ref.values[:2].tolist() == [0.0, 0.0]
    assert ref.values[2] == pytest.approx(first, rel=1e-14)
    assert ref.values[3] == pytest.approx(sigma2 * alpha2 / 1.4 * PI2, rel=1e-14)


@pytest.mark.parametrize("k", range(1, 30))
def test_flat_levels_return_k_values_in_order(k):
    rect = FlatPiece(np.zeros(2), np.eye(2), [1.4, 1.0])
    vals = reference_spectrum_component(rect, DensitySpec(), "indicator", k).values
    assert vals.size == k
    # brute-force enumeration of the Neumann levels
    m = np.arange(40)
    allv = np.sort(((m[:, None] / 1.4) ** 2 + (m[None, :] / 1.0) ** 2).ravel()) * PI2 / 4
    assert np.allclose(vals, allv[:k], rtol=1e-14, atol=0)


def test_component_spectrum_rectangle_and_circle():
    rect = FlatPiece(np.zeros(2), np.eye(2), [2.0, 1.0])
    ref = reference_spectrum_component(rect, DensitySpec(), "indicator", 4)
    # (sigma/beta) = 1/4 in d=2; wave numbers (0,0),(1,0),(2,0)=(0,1)
    assert np.allclose(ref.values, np.array([0, 0.25, 1, 1]) * PI2 / 4)
    circ = Circle(np.zeros(2), 2.0, np.eye(2))
    ref = reference_spectrum_component(circ, DensitySpec(), "indicator", 5)
    assert np.allclose(ref.values, np.array([0, 0.25, 0.25, 1, 1]) / 3)


def test_non_uniform_density_is_unsupported():
    seg = FlatPiece(np.zeros(1), [[1.0]], [1.0])
    with pytest.raises(UnsupportedReference):
        reference_spectrum_component(seg, DensitySpec("cosine", 0.2, (math.pi,)).bind(seg), "indicator", 3)


def test_codim_one_equal_dims_raise():
    with pytest.raises(CoupledSpectrumError):
        merged_union_spectrum(model_preset("crossing-segments"), "indicator", "normalized", 4)


def test_reference_modes_have_unit_norm(paper_model):
    ref = merged_union_spectrum(paper_model, "indicator", "normalized", 6)
    # Gauss-Legendre on each piece: sum_i alpha_i int f^2 rho_i dVol
    for mode in ref.modes:
        total = 0.0
        for i, c in enumerate(paper_model.components):
            x, w = np.polynomial.legendre.leggauss(40)
            if c.dim == 1:
                L = c.patch.lengths[0]
                s = (x * L / 2)[:, None]
                ww = w * L / 2
            else:
                Lx, Ly = c.patch.lengths
                X, Y = np.meshgrid(x * Lx / 2, x * Ly / 2, indexing="ij")
                s = np.column_stack([X.ravel(), Y.ravel()])
                ww = np.outer(w * Lx / 2, w * Ly / 2).ravel()
            f = mode_function(paper_model, mode, i, s)
            total += c.alpha * np.dot(ww, f**2) / c.patch.volume
        assert total == pytest.approx(1.0, rel=1e-10)


def test_split_mode_is_orthogonal_to_constants(paper_model):
    ref = merged_union_spectrum(paper_model, "indicator", "unnormalized", 2)
    split = ref.modes[1]
    assert split.shape == "split"
    a1, a2 = paper_model.alphas
    c1 = mode_function(paper_model, split, 0, np.zeros((1, 1)))[0]
    c2 = mode_function(paper_model, split, 1, np.zeros((1, 2)))[0]
    assert a1 * c1 + a2 * c2 == pytest.approx(0.0, abs=1e-14)


def test_reference_vectors_on_cloud_are_normalized(paper_model):
    cloud = sample_mixture(paper_model, 2000, 5)
    ref = merged_union_spectrum(paper_model, "indicator", "normalized", 6)
    R = reference_vectors(paper_model, ref, cloud)
    assert np.allclose(np.mean(R**2, axis=0), 1.0)
    G = R.T @ R / cloud.n
    assert np.max(np.abs(G - np.eye(6))) < 0.15
