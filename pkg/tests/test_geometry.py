import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import image_oracle
from swa_ltv.geometry import (GeometryError, Position, Trajectory, Waveguide, enumerate_eigenpaths,
                              position_at)


def test_position_at_origin_and_zero_velocity():
    traj = Trajectory(Position(100.0, 12.0), 51.2, 1 / 256e3, 256000)
    assert position_at(traj, 0) == Position(100.0, 12.0)
    still = Trajectory(Position(0.0, 5.0), 0.0, 1e-3, 10)
    assert all(position_at(still, n).x == 0.0 for n in range(11))


def test_position_at_one_second():
    traj = Trajectory(Position(100.0, 12.0), 51.2, 1 / 256e3, 256000)
    p = position_at(traj, 256000)
    assert p.x == pytest.approx(151.2, abs=1e-9)
    assert p.height_above_bottom == 12.0


@pytest.mark.parametrize("n", [-1, 11])
def test_position_at_out_of_range(n):
    traj = Trajectory(Position(0.0, 5.0), 1.0, 1e-3, 10)
    with pytest.raises(IndexError):
        position_at(traj, n)


def test_waveguide_invariants():
    with pytest.raises(GeometryError):
        Waveguide(depth_w=0)
    with pytest.raises(GeometryError):
        Waveguide(spreading_exponent_k=0.5)
    with pytest.raises(GeometryError):
        Waveguide(max_reflections_pmax=-1)


def test_default_geometry_first_paths(wg):
    paths = enumerate_eigenpaths(wg, Position(0, 12), Position(100, 12))
    direct, surf, bott = paths[:3]
    assert (direct.n_surface, direct.n_bottom) == (0, 0)
    assert direct.length_lp == 100.0
    assert direct.delay_tau_p == pytest.approx(0.0666667, abs=1e-7)
    assert (surf.n_surface, surf.n_bottom) == (1, 0)
    assert surf.length_lp == pytest.approx(100.7175, abs=1e-4)
    assert (bott.n_surface, bott.n_bottom) == (0, 1)
    assert bott.length_lp == pytest.approx(102.8397, abs=1e-4)


def test_zero_separation_is_degenerate(wg):
    with pytest.raises(GeometryError):
        enumerate_eigenpaths(wg, Position(3, 12), Position(3, 10))


def test_heights_checked(wg):
    with pytest.raises(GeometryError):
        enumerate_eigenpaths(wg, Position(0, 19), Position(10, 10))


@pytest.mark.parametrize("pmax", [0, 1, 2, 3])
@pytest.mark.parametrize("h_tx,h_rx,d", [(12, 12, 100), (3, 15.5, 40), (17, 0.5, 250), (9, 9, 1)])
def test_image_method_matches_brute_force_listing(pmax, h_tx, h_rx, d):
    wg = Waveguide(max_reflections_pmax=pmax)
    paths = enumerate_eigenpaths(wg, Position(0, h_tx), Position(d, h_rx))
    got = Counter((p.n_surface, p.n_bottom, p.length_lp) for p in paths)
    assert got == image_oracle(18.0, h_tx, h_rx, d, pmax)


heights = st.floats(0.5, 17.5)
dists = st.floats(0.5, 500)


@settings(max_examples=60, deadline=None)
@given(heights, heights, dists, st.integers(0, 4))
def test_endpoint_exchange_symmetry(h1, h2, d, pmax):
    wg = Waveguide(max_reflections_pmax=pmax)
    a = enumerate_eigenpaths(wg, Position(0, h1), Position(d, h2))
    b = enumerate_eigenpaths(wg, Position(d, h2), Position(0, h1))
    key = lambda ps: sorted((p.n_surface, p.n_bottom, round(p.length_lp, 9)) for p in ps)
    assert key(a) == key(b)


@settings(max_examples=60, deadline=None)
@given(heights, heights, dists)
def test_direct_path_is_euclidean_and_paths_are_sorted(h1, h2, d):
    wg = Waveguide(max_reflections_pmax=3)
    paths = enumerate_eigenpaths(wg, Position(0, h1), Position(d, h2))
    direct = next(p for p in paths if p.n_surface == p.n_bottom == 0)
    assert direct.length_lp == pytest.approx(math.dist((0, h1), (d, h2)), rel=1e-12)
    delays = [p.delay_tau_p for p in paths]
    assert delays == sorted(delays)
    for p in paths:
        assert abs(p.n_surface - p.n_bottom) <= 1
        assert p.length_lp >= d
        assert p.delay_tau_p == p.length_lp / wg.sound_speed_c
        assert -1 <= p.cum_reflection <= 1
    if h1 == h2:
        assert paths[0] is direct


@settings(max_examples=40, deadline=None)
@given(heights, heights, dists, st.floats(0.01, 50))
def test_length_increases_with_distance(h1, h2, d, dd):
    wg = Waveguide(max_reflections_pmax=2)
    a = enumerate_eigenpaths(wg, Position(0, h1), Position(d, h2))
    b = enumerate_eigenpaths(wg, Position(0, h1), Position(d + dd, h2))
    la = sorted((p.n_surface, p.n_bottom, p.image_offset, p.length_lp) for p in a)
    lb = sorted((p.n_surface, p.n_bottom, p.image_offset, p.length_lp) for p in b)
    assert all(y[3] > x[3] for x, y in zip(la, lb))
