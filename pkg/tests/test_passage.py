import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rwre.env import CANONICAL_2PT, EnvironmentWindow, sample_alpha_window
from rwre.errors import NoBoundedSolution, WindowEscape
from rwre.passage import (estimate_hitting_tail_mc, estimate_slowdown_mc, hitting_tail_exact, mgf_linear_oracle,
                          simulate_walk, slowdown_exact)
from rwre.quenched import expected_hitting, lambda_max, mgf_exact

from conftest import reflected_window, windows


def spectral_threshold(win, k1):
    """-log of the spectral radius of the walk killed at k1 (numpy eigenvalues)."""
    m = win.reflection
    om = win.omegas[m - win.lo: k1 - win.lo]
    n = om.size
    P = np.zeros((n, n))
    for x in range(n):
        if x + 1 < n:
            P[x, x + 1] = om[x]
        if x > 0:
            P[x, x - 1] = 1 - om[x]
    return -math.log(max(abs(np.linalg.eigvals(P))))


# --- exact passage tables ----------------------------------------------------------

def test_survival_before_minimum_travel_time():
    win = reflected_window([0.3, 0.6, 0.7, 0.4])
    tab = hitting_tail_exact(win, 1, 5, horizon=50)
    assert np.all(tab.survival[:4] == 1.0)
    assert tab.survival[4] < 1.0


def test_deterministic_walk_survival():
    win = EnvironmentWindow(0, np.ones(6), 0)
    tab = hitting_tail_exact(win, 0, 6, horizon=10)
    assert np.all(tab.survival[:6] == 1.0) and np.all(tab.survival[6:] == 0.0)


@given(windows(max_len=12, min_omega=0.3))
def test_tail_sum_is_the_mean(win):
    k1 = win.hi + 1
    tab = hitting_tail_exact(win, 0, k1)
    assert not tab.truncated
    assert tab.mean_from_tail() == pytest.approx(expected_hitting(win, 0, k1), rel=1e-8)


def test_survival_is_nonincreasing():
    win = sample_alpha_window(CANONICAL_2PT, 0, 20, np.random.default_rng(3), reflection=0)
    tab = hitting_tail_exact(win, 0, 21, horizon=3000)
    assert np.all(np.diff(tab.log_survival) <= 1e-12)


def test_snapshots_hold_the_distribution():
    win = reflected_window([0.5, 0.5, 0.5])
    tab = hitting_tail_exact(win, 0, 4, horizon=3, snapshot_times=(2,))
    # from 0: forced right, then 1/2 each way
    assert np.allclose(tab.snapshots[2], [0.5, 0.0, 0.5, 0.0])


def test_rescaling_keeps_tiny_tails():
    win = reflected_window(np.full(12, 0.8))
    tab = hitting_tail_exact(win, 0, 13, horizon=10**5)
    assert tab.rescaled
    assert np.isfinite(tab.log_survival[-1]) and tab.log_survival[-1] < -700


# --- linear oracle ------------------------------------------------------------------

def test_oracle_at_zero():
    win = reflected_window([0.3, 0.6, 0.7])
    assert mgf_linear_oracle(win, 1, 4, 0.0) == pytest.approx(1.0, rel=1e-14)


@given(windows(max_len=25), st.floats(0.0, 0.9), st.data())
def test_oracle_matches_recursion(win, frac, data):
    k1 = win.hi + 1
    k0 = data.draw(st.integers(0, k1 - 1))
    lam = frac * lambda_max(win, k1)
    want = mgf_exact(win, k0, k1, lam)
    assert mgf_linear_oracle(win, k0, k1, lam) == pytest.approx(want, rel=1e-10)
    # a general LU solve loses digits in proportion to the condition number, which grows like E[T]
    tol = max(1e-10, 1e-15 * expected_hitting(win, 0, k1))
    assert mgf_linear_oracle(win, k0, k1, lam, solver="banded") == pytest.approx(want, rel=tol)


@given(windows(max_len=25))
def test_oracle_and_recursion_agree_on_divergence(win):
    k1 = win.hi + 1
    lc = spectral_threshold(win, k1)
    # the eigenvalue route resolves lc only to about 1e-16 E[T] relative
    margin = max(1e-6, 1e-12 * expected_hitting(win, 0, k1))
    assert lc >= lambda_max(win, k1) * (1 - margin)
    below, above = lc * (1 - margin), lc * (1 + margin)
    assert math.isfinite(mgf_exact(win, 0, k1, below))
    mgf_linear_oracle(win, 0, k1, below)
    assert mgf_exact(win, 0, k1, above) == math.inf
    with pytest.raises(NoBoundedSolution):
        mgf_linear_oracle(win, 0, k1, above)


def test_oracle_drops_sites_behind_a_wall():
    om = [0.2, 0.2, 1.0, 0.7, 0.6]
    win = reflected_window(om)
    # the start sits right of the wall at site 3, so the uphill sites never matter
    assert mgf_linear_oracle(win, 4, 6, 0.05) == pytest.approx(mgf_exact(win, 4, 6, 0.05), rel=1e-12)


# --- slowdown -------------------------------------------------------------------------

def test_deterministic_walk_never_slow():
    win = EnvironmentWindow(-10, np.ones(21))
    assert slowdown_exact(win, 10, 1.0) == 0.0


def test_slowdown_small_case():
    # two steps in omega = 1/2: X_2 in {-2, 0, 2} with probs 1/4, 1/2, 1/4
    win = EnvironmentWindow(-3, np.full(7, 0.5))
    assert slowdown_exact(win, 2, 0.5) == pytest.approx(0.75, rel=1e-15)


def test_slowdown_needs_room():
    win = EnvironmentWindow(-2, np.full(8, 0.5))
    with pytest.raises(WindowEscape):
        slowdown_exact(win, 5, 0.1)


# --- simulation -----------------------------------------------------------------------

def test_deterministic_walk_endpoint(rng):
    win = EnvironmentWindow(0, np.ones(30))
    st_ = simulate_walk(win, 3, 20, rng)
    assert st_.position == 23 and st_.time == 20


def test_walk_stops_and_records(rng):
    win = EnvironmentWindow(0, np.ones(30))
    st_ = simulate_walk(win, 0, 100, rng, stop_at=12, marks=[4, 8, 12])
    assert st_.stopped and st_.position == 12
    assert st_.marks.tolist() == [[4, 4], [8, 8], [12, 12]]


def test_walk_escape(rng):
    win = EnvironmentWindow(0, np.full(5, 0.5))
    with pytest.raises(WindowEscape):
        simulate_walk(win, 2, 10**4, rng)


def test_mc_below_minimum_travel_time():
    win = reflected_window([0.5] * 6)
    est = estimate_hitting_tail_mc(win, 0, 7, 5, 1000, seed=1)
    assert est.p == 1.0 and est.hits == 1000


def test_mc_zero_hits_reports_upper_limit():
    win = EnvironmentWindow(0, np.ones(10), 0)
    est = estimate_hitting_tail_mc(win, 0, 5, 5, 1000, seed=1)
    assert est.hits == 0 and est.p == 0.0
    assert est.upper == pytest.approx(1 - 0.05 ** (1 / 1000), rel=1e-9)


def test_mc_independent_of_worker_count():
    win = sample_alpha_window(CANONICAL_2PT, 0, 30, np.random.default_rng(1), reflection=0)
    a = estimate_hitting_tail_mc(win, 0, 31, 200, 30000, seed=11, workers=1)
    b = estimate_hitting_tail_mc(win, 0, 31, 200, 30000, seed=11, workers=3)
    assert a == b
    w2 = sample_alpha_window(CANONICAL_2PT, -60, 60, np.random.default_rng(2), reflection=-60)
    assert estimate_slowdown_mc(w2, 0, 60, 0.05, 20000, 5, 1) == estimate_slowdown_mc(w2, 0, 60, 0.05, 20000, 5, 4)


def test_mc_agrees_with_exact():
    win = sample_alpha_window(CANONICAL_2PT, -80, 80, np.random.default_rng(4), reflection=-80)
    p = slowdown_exact(win, 80, 0.1)
    est = estimate_slowdown_mc(win, 0, 80, 0.1, 20000, seed=3)
    assert abs(est.p - p) <= 4 * math.sqrt(p * (1 - p) / 20000) + 1e-12
