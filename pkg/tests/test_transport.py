from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unionlap.continuum import SmoothFunctionSpec
from unionlap.manifolds import model_preset, sample_mixture
from unionlap.transport import tl2_brute, tl2_exact, tl2_proxy


@given(m=st.integers(1, 8), seed=st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_exact_matches_permutation_enumeration(m, seed):
    r = np.random.default_rng(seed)
    xa, xb = r.random((m, 2)), r.random((m, 2))
    ua, ub = r.standard_normal(m), r.standard_normal(m)
    assert tl2_exact(xa, ua, xb, ub).distance == pytest.approx(tl2_brute(xa, ua, xb, ub), rel=1e-12, abs=1e-12)


def test_identical_pairs_have_zero_distance(rng):
    x = rng.random((50, 3))
    u = rng.standard_normal(50)
    perm = rng.permutation(50)
    res = tl2_exact(x, u, x[perm], u[perm])
    assert res.distance == pytest.approx(0.0, abs=1e-12)
    assert np.array_equal(perm[res.coupling], np.arange(50))


def test_value_shift_is_the_distance(rng):
    x = rng.random((30, 2))
    u = rng.standard_normal(30)
    assert tl2_exact(x, u, x, u + 0.25).distance == pytest.approx(0.25, rel=1e-12)


def test_exact_rejects_unequal_or_large(rng):
    with pytest.raises(ValueError):
        tl2_exact(rng.random((3, 2)), np.zeros(3), rng.random((4, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        tl2_exact(np.zeros((4097, 1)), np.zeros(4097), np.zeros((4097, 1)), np.zeros(4097))


def test_proxy_with_closed_form_function():
    model = model_preset("unit-circle")
    cloud = sample_mixture(model, 500, 2)
    u = SmoothFunctionSpec([lambda s: np.cos(s[:, 0])])
    vals = np.cos(cloud.coords[:, 0])
    assert tl2_proxy(cloud, vals, u) == pytest.approx(0.0, abs=1e-14)
    assert tl2_proxy(cloud, vals + 0.1, vals) == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(ValueError):
        tl2_proxy(cloud, vals, vals[:10])
