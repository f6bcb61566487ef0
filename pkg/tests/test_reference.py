import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icmtone.reference import (
    TroParams,
    box_mean,
    default_window_radius,
    local_geometric_mean,
    reference_brightness,
    tro_curve,
    tro_map,
)


def brute_box_mean(plane, radius):
    h, w = plane.shape
    out = np.empty_like(plane)
    for y in range(h):
        for x in range(w):
            win = plane[max(0, y - radius):y + radius + 1, max(0, x - radius):x + radius + 1]
            out[y, x] = win.mean()
    return out


def test_constant_plane_geometric_mean():
    y = np.full((5, 6), 0.3)
    for radius in (0, 1, 4, 20):
        np.testing.assert_allclose(local_geometric_mean(y, radius), 0.3, rtol=1e-14)


def test_radius_zero_is_identity(rng):
    y = rng.uniform(0.01, 1, (4, 4))
    np.testing.assert_array_equal(local_geometric_mean(y, 0), y)


def test_two_pixel_geometric_mean():
    np.testing.assert_allclose(local_geometric_mean(np.array([[1.0, 4.0]]), 1), [[2.0, 2.0]], rtol=1e-15)


@pytest.mark.parametrize("shape, radius", [((7, 9), 1), ((7, 9), 3), ((3, 12), 5), ((1, 1), 2)])
def test_box_mean_matches_brute_force(rng, shape, radius):
    plane = rng.normal(size=shape)
    np.testing.assert_allclose(box_mean(plane, radius), brute_box_mean(plane, radius), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_geometric_mean_scale_covariance(s, radius, seed):
    y = np.random.default_rng(seed).uniform(1e-4, 1, (6, 5))
    np.testing.assert_allclose(
        local_geometric_mean(s * y, radius), s * local_geometric_mean(y, radius), rtol=1e-12
    )


def test_tro_endpoints():
    surround = np.array([0.01, 0.3, 1.0])
    for beta, gamma in ((0.1, 0.6), (2.0, 1.5), (1e-3, 0.1)):
        np.testing.assert_allclose(tro_curve(np.ones(3), surround, beta, gamma), 1.0, rtol=1e-14)
        assert np.all(tro_curve(np.full(3, 1e-300), surround, beta, gamma) < 1e-290)


def test_tro_worked_value():
    expected = math.log(2) / math.log(11)
    assert tro_curve(np.array(0.1), np.array(1.0), 0.1, 1.0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.2891, abs=1e-4)


def test_reference_worked_value():
    # surround of exactly 1 needs a uniform plane at y = 1; check the log step directly instead
    g = tro_curve(np.array(0.1), np.array(1.0), 0.1, 1.0)
    assert math.log(g) == pytest.approx(math.log(math.log(2) / math.log(11)), rel=1e-14)
    assert math.log(g) == pytest.approx(-1.241, abs=1e-3)


def test_reference_brightness_peak_is_zero():
    y = np.array([[1.0, 0.5], [0.1, 0.01]])
    r = reference_brightness(y, TroParams(window_radius=1))
    assert r[0, 0] == 0.0
    assert np.all(r <= 0)


def test_reference_brightness_floor():
    params = TroParams(beta=1e6, gamma_exp=1.0, window_radius=0, g_floor=1e-3)
    r = reference_brightness(np.array([[1e-9, 1.0]]), params)
    assert r[0, 0] == pytest.approx(math.log(1e-3))
    assert r[0, 1] == 0.0


def test_default_window_radius():
    assert default_window_radius(100, 100) == 8
    assert default_window_radius(1024, 768) == 24
    assert TroParams().radius_for((512, 1024)) == 16
    assert TroParams(window_radius=3).radius_for((512, 1024)) == 3


@pytest.mark.parametrize("kwargs", [{"beta": 0}, {"gamma_exp": -1}, {"window_radius": -1}, {"g_floor": 1.0}])
def test_tro_params_validation(kwargs):
    with pytest.raises(ValueError):
        TroParams(**kwargs)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 10), st.floats(0.05, 3), st.floats(1e-4, 1))
def test_tro_monotone_in_luminance(beta, gamma, surround):
    y = np.geomspace(1e-6, 1, 200)
    g = tro_curve(y, np.full_like(y, surround), beta, gamma)
    assert np.all(np.diff(g) > 0)
    assert np.all((g >= 0) & (g <= 1 + 1e-15))


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 10), st.floats(0.05, 3), st.floats(1e-6, 1))
def test_darker_surround_gives_larger_output(beta, gamma, y):
    surround = np.geomspace(1e-6, 1, 100)
    g = tro_curve(np.full_like(surround, y), surround, beta, gamma)
    assert np.all(np.diff(g) <= 1e-15)


def test_tro_map_uses_local_surround():
    # same pixel value, darker neighborhood -> brighter mapping
    y = np.full((9, 18), 0.5)
    y[:, :9] = 0.01
    y[4, 4] = y[4, 13] = 0.1
    g = tro_map(y, TroParams(window_radius=3))
    assert g[4, 4] > g[4, 13]
