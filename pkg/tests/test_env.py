import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rwre.env import (BLOCK_CAP, CANONICAL_2PT, CANONICAL_3PT, EnvDistribution, EnvironmentWindow,
                      LatticeWarning, ladder_points, named_distribution, potential, sample_alpha_window,
                      sample_q_blocks, sample_q_window, solve_s, speed)
from rwre.errors import BlockOverflow, NoRoot, OutOfWindow, ValidationError

from conftest import LAWS


# --- laws ------------------------------------------------------------------------

def test_canonical_two_point_exponent_is_two():
    # 0.2 * 2^s + 0.8 * 2^-s = 1 has the root 2^s = 4
    assert abs(solve_s(CANONICAL_2PT) - 2.0) <= 1e-12


def test_canonical_two_point_speed():
    assert abs(speed(CANONICAL_2PT) - 1.0 / 9.0) <= 1e-15


def test_canonical_three_point_frozen_values():
    s = solve_s(CANONICAL_3PT)
    assert s == pytest.approx(1.516730904821831, rel=1e-12)
    assert speed(CANONICAL_3PT) == pytest.approx((1 - 0.775) / (1 + 0.775), rel=1e-14)


def test_no_root_when_rho_never_exceeds_one():
    d = EnvDistribution.from_rho((1.0, 0.5), (0.5, 0.5))
    with pytest.raises(NoRoot):
        solve_s(d)


def test_deterministic_right_walk_has_speed_one():
    assert speed(EnvDistribution((1.0,), (1.0,))) == 1.0


def test_recurrent_law_rejected():
    with pytest.raises(ValidationError):
        EnvDistribution((0.5,), (1.0,)).validate()


def test_bad_weights_rejected():
    with pytest.raises(ValidationError):
        EnvDistribution((0.3, 0.7), (0.5, 0.6))
    with pytest.raises(ValidationError):
        EnvDistribution((0.0, 0.7), (0.5, 0.5))


def test_lattice_warning_only_for_lattice_laws():
    with pytest.warns(LatticeWarning):
        chk = CANONICAL_2PT.validate()
    assert chk.lattice and chk.lattice_step == pytest.approx(math.log(2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not CANONICAL_3PT.validate().lattice


def test_named_lookup():
    assert named_distribution("canonical3pt") is CANONICAL_3PT
    with pytest.raises(ValidationError):
        named_distribution("nope")


@given(st.lists(st.floats(0.05, 0.95), min_size=2, max_size=5), st.data())
def test_root_solves_moment_equation(omegas, data):
    w = np.array(data.draw(st.lists(st.floats(0.05, 1.0), min_size=len(omegas), max_size=len(omegas))))
    d = EnvDistribution(tuple(omegas), tuple(w / w.sum()))
    if not (d.mean_log_rho() < 0 and np.any(d.rhos > 1)):
        return
    s = solve_s(d)
    assert abs(np.dot(d.weights, d.rhos ** s) - 1.0) <= 1e-12


# --- windows and potential -------------------------------------------------------

def test_constant_window_potential():
    w = EnvironmentWindow(0, np.full(10, 2 / 3))
    xs = np.arange(11)
    assert np.allclose(potential(w, xs), -xs * math.log(2), rtol=0, atol=1e-12)
    assert potential(w, 0) == 0.0


def test_potential_left_of_reflection_is_infinite():
    w = EnvironmentWindow(-3, np.array([1.0, 0.4, 0.6, 0.5, 0.5]), -3)
    assert potential(w, -5) == math.inf
    assert potential(w, 0) == 0.0


def test_potential_outside_window():
    w = EnvironmentWindow(0, np.full(3, 0.6))
    with pytest.raises(OutOfWindow):
        potential(w, 7)


def test_window_is_read_only():
    w = EnvironmentWindow(0, np.full(3, 0.6))
    with pytest.raises(ValueError):
        w.omegas[0] = 0.1


def test_reflection_must_have_omega_one():
    with pytest.raises(ValidationError):
        EnvironmentWindow(0, np.full(3, 0.6), 0)


def test_single_atom_law_gives_constant_window(rng):
    w = sample_alpha_window(EnvDistribution((0.7,), (1.0,)), -5, 5, rng)
    assert np.all(w.omegas == 0.7)


def test_alpha_window_deterministic():
    a = sample_alpha_window(CANONICAL_3PT, 0, 99, np.random.default_rng(5))
    b = sample_alpha_window(CANONICAL_3PT, 0, 99, np.random.default_rng(5))
    assert np.array_equal(a.omegas, b.omegas)


# --- ladder points ---------------------------------------------------------------

def test_constant_downhill_every_site_is_a_ladder_point():
    d = ladder_points(EnvironmentWindow(0, np.full(8, 2 / 3)))
    assert np.all(d.lengths == 1)
    assert np.allclose(d.heights, 0.5)


def test_all_reflecting_sites_are_ladder_points():
    d = ladder_points(EnvironmentWindow(0, np.ones(6)))
    assert np.all(d.lengths == 1)
    assert np.all(d.heights == 0.0)


def test_ladder_points_of_a_small_window():
    # rho = 1/2, 2, 2, 1/2, 1/2, 1/2, 1/2: V = 0, -l, 0, l, 0, -l, -2l, -3l
    om = np.array([2 / 3, 1 / 3, 1 / 3, 2 / 3, 2 / 3, 2 / 3, 2 / 3])
    d = ladder_points(EnvironmentWindow(0, om))
    assert d.nus.tolist() == [0, 1, 6, 7]
    assert np.allclose(d.heights, [0.5, 4.0, 0.5])


def _check_ladder(win, dec):
    v = potential(win, np.arange(dec.nus[0], dec.nus[-1] + 1))
    base = dec.nus[0]
    lv = v[dec.nus - base]
    assert np.all(np.diff(lv) < 0)
    for i in range(dec.n_blocks):
        inner = v[dec.nus[i] - base: dec.nus[i + 1] - base]
        assert np.all(inner >= lv[i] - 1e-9)
        assert dec.log_heights[i] == pytest.approx(np.max(inner[1:] - lv[i]) if inner.size > 1
                                                   else win.log_rho[dec.nus[i] - win.lo], abs=1e-9)


@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(LAWS)))
def test_q_window_ladder_structure(seed, law):
    win, dec = sample_q_window(LAWS[law], 5, 40, np.random.default_rng(seed))
    assert dec.nu(0) == 0 and dec.origin_block == 5
    _check_ladder(win, dec)
    again = ladder_points(win, int(dec.nus[0]), int(dec.nus[-1]))
    assert np.array_equal(again.nus, dec.nus)
    assert np.allclose(again.log_heights, dec.log_heights, atol=1e-9)


def test_q_window_deterministic():
    a = sample_q_window(CANONICAL_2PT, 3, 30, np.random.default_rng(9))
    b = sample_q_window(CANONICAL_2PT, 3, 30, np.random.default_rng(9))
    assert np.array_equal(a[0].omegas, b[0].omegas) and np.array_equal(a[1].nus, b[1].nus)


def test_reflecting_law_blocks_have_length_one(rng):
    qb = sample_q_blocks(EnvDistribution((1.0,), (1.0,)), 50, rng)
    assert np.all(qb.lengths == 1)


def test_block_cap_raises(rng):
    # nearly recurrent law: blocks are long, so a tiny cap trips
    d = EnvDistribution((0.49, 0.9), (0.99, 0.01))
    with pytest.raises(BlockOverflow):
        sample_q_blocks(d, 200, rng, cap=3)
    assert BLOCK_CAP == 10**6


def test_block_lengths_are_stable_across_halves(rng):
    qb = sample_q_blocks(CANONICAL_2PT, 10**5, rng)
    a, b = qb.lengths[: 5 * 10**4], qb.lengths[5 * 10**4:]
    se = math.sqrt(a.var() / a.size + b.var() / b.size)
    assert abs(a.mean() - b.mean()) < 4 * se
