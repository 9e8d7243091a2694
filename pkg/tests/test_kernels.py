import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetnet_ee import _kernels as k

needs_numba = pytest.mark.skipif(not k.HAVE_NUMBA, reason="numba unavailable or disabled")


def _brute_nearest(qx, qy, bx, by):
    d = (qx[:, None] - bx[None, :]) ** 2 + (qy[:, None] - by[None, :]) ** 2
    return np.argmin(d, axis=1), d.min(axis=1)


def _brute_covered(dx, dy, radius, n=20000):
    # every sampled circle point must be strictly closer to some neighbour than to the origin
    th = np.linspace(0, 2 * math.pi, n, endpoint=False)
    px, py = radius * np.cos(th), radius * np.sin(th)
    d_nb = np.min((px[:, None] - dx[None, :]) ** 2 + (py[:, None] - dy[None, :]) ** 2, axis=1)
    return bool(np.all(d_nb < radius * radius))


def test_nearest_numpy_matches_brute(rng):
    qx, qy = rng.uniform(-10, 10, (2, 700))
    bx, by = rng.uniform(-10, 10, (2, 50))
    idx, d2 = k.nearest_numpy(qx, qy, bx, by)
    ref_idx, ref_d2 = _brute_nearest(qx, qy, bx, by)
    assert np.array_equal(idx, ref_idx)
    assert np.allclose(d2, ref_d2, rtol=0, atol=0)


def test_nearest_empty():
    q = np.zeros(3)
    idx, d2 = k.nearest_numpy(q, q, np.zeros(0), np.zeros(0))
    assert np.all(idx == -1) and np.all(np.isinf(d2))


def test_path_gain_sum_numpy():
    bx = np.array([1.0, 0.0, 3.0])
    by = np.array([0.0, 2.0, 4.0])
    h = np.array([1.0, 2.0, 0.5])
    expected = 1.0 + 2.0 * 2.0 ** -4 + 0.5 * 5.0 ** -4
    assert k.path_gain_sum_numpy(bx, by, h, 4.0, -1) == pytest.approx(expected, rel=1e-15)
    assert k.path_gain_sum_numpy(bx, by, h, 4.0, 0) == pytest.approx(expected - 1.0, rel=1e-14)


def test_circle_covered_hexagon():
    # six neighbours at distance 2: cell is a hexagon of inradius 1, circumradius 2/sqrt(3)
    ang = np.arange(6) * math.pi / 3
    dx, dy = 2 * np.cos(ang), 2 * np.sin(ang)
    assert not k.circle_covered_numpy(dx, dy, 1.1)
    assert k.circle_covered_numpy(dx, dy, 1.2)


def test_circle_covered_one_sided():
    assert not k.circle_covered_numpy(np.array([1.0]), np.array([0.0]), 5.0)
    assert not k.circle_covered_numpy(np.zeros(0), np.zeros(0), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(3, 40), st.floats(0.3, 3.0))
def test_circle_covered_against_sampling(seed, n, radius):
    r = np.random.default_rng(seed)
    dx, dy = r.uniform(-3, 3, (2, n))
    got = k.circle_covered_numpy(dx, dy, radius)
    # the sampled check can only miss tiny gaps, so a positive answer must agree
    if got:
        assert _brute_covered(dx, dy, radius)


@needs_numba
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 60), st.integers(1, 80))
def test_nearest_backends_agree(seed, n_bs, n_q):
    r = np.random.default_rng(seed)
    bx, by = r.uniform(-100, 100, (2, n_bs))
    qx, qy = r.uniform(-100, 100, (2, n_q))
    i1, d1 = k.nearest_numpy(qx, qy, bx, by)
    i2, d2 = k.nearest_numba(qx, qy, bx, by)
    assert np.array_equal(i1, i2)
    assert np.array_equal(d1, d2)


@needs_numba
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 200), st.floats(2.1, 5.0))
def test_path_gain_backends_agree(seed, n, alpha):
    r = np.random.default_rng(seed)
    bx, by = r.uniform(-1e4, 1e4, (2, n))
    h = r.exponential(size=n)
    skip = int(r.integers(-1, n))
    a = k.path_gain_sum_numpy(bx, by, h, alpha, skip)
    b = k.path_gain_sum_numba(bx, by, h, alpha, skip)
    assert b == pytest.approx(a, rel=1e-12, abs=1e-300)


@needs_numba
@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 40), st.floats(0.2, 4.0))
def test_circle_covered_backends_agree(seed, n, radius):
    r = np.random.default_rng(seed)
    dx, dy = r.uniform(-3, 3, (2, n))
    assert k.circle_covered_numpy(dx, dy, radius) == k.circle_covered_numba(dx, dy, radius)


def test_backend_name():
    assert k.backend() in ("numba", "numpy")
    assert (k.backend() == "numba") == k.HAVE_NUMBA
