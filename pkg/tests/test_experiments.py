import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rwre.env import (CANONICAL_2PT, CANONICAL_3PT, EnvDistribution, EnvironmentWindow, ladder_points,
                      sample_q_window, solve_s)
from rwre.errors import InsufficientBlocks, TooFewExceedances
from rwre.experiments import (Scale, birth_death_trace, chebyshev_bound, classify_hills, coarse_grain,
                              condition_check, estimate_q_means, hill_tail_estimate, multi_hill_fraction,
                              second_moment_shape, truncated_sum_stats)
from rwre.passage import hitting_tail_exact
from rwre.quenched import exit_prob

RIGHT = EnvDistribution((1.0,), (1.0,), "right")


def _q(dist, left, right, seed):
    return sample_q_window(dist, left, right, np.random.default_rng(seed))


# --- coarse graining and hills ----------------------------------------------------

def test_unit_super_blocks_are_ladder_points():
    win, dec = _q(CANONICAL_3PT, 5, 20, 1)
    g = coarse_grain(dec, 1)
    assert np.array_equal(g.sites, dec.nus)


def test_constant_downhill_super_blocks():
    dec = ladder_points(EnvironmentWindow(0, np.full(40, 2 / 3)))
    g = coarse_grain(dec, 5)
    assert g.sites.tolist() == list(range(0, 41, 5))


@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_super_blocks_telescope(seed, a):
    _, dec = _q(CANONICAL_2PT, 14, 30, seed)
    g = coarse_grain(dec, a)
    assert np.diff(g.sites).sum() == g.sites[-1] - g.sites[0]
    assert g.site(0) == 0


def test_coarse_grain_range_check():
    _, dec = _q(CANONICAL_2PT, 2, 10, 0)
    with pytest.raises(InsufficientBlocks):
        coarse_grain(dec, 3, -4, 0)


def test_reflecting_environment_has_only_small_hills():
    _, dec = _q(RIGHT, 0, 50, 0)
    assert not classify_hills(dec, 1000, 2.0, 0.2).any()


def test_multi_hill_fraction():
    big = np.array([1, 1, 0, 0, 1, 0, 0, 0, 1], bool)
    assert multi_hill_fraction(big, 3) == pytest.approx(1 / 3)


# --- conditions and bounds ------------------------------------------------------------

def test_reflecting_environment_condition():
    sc = Scale.make(100, 2.0, 1.2, 0.01, 0.05)
    win, dec = _q(RIGHT, 3 * sc.a * sc.J, 3 * sc.a * sc.J, 0)
    rep = condition_check(win, dec, sc, 1.0, 0.1)
    assert np.all(rep.e_full == 2 * sc.a)
    assert rep.condition and rep.ex1


def test_threshold_first_order():
    s = solve_s(CANONICAL_2PT)
    for n in (10, 100, 1000):
        sc = Scale.make(n, s, 1.2, 0.05, 0.05)
        assert abs(sc.lam * (math.exp(-sc.lam) / math.sinh(sc.lam)) - 1) < sc.lam
        assert 1 / sc.lam == pytest.approx(n ** (1 / s) / 0.05, rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([30, 60, 120]))
def test_ex1_implies_condition(seed, n):
    s = solve_s(CANONICAL_2PT)
    beta, eps1, D = 14.4, 3.6, 1.2
    D0 = D / (10 * (beta + eps1))
    sc = Scale.make(n, s, D, D0, 0.05)
    reach = (sc.J + 2) * sc.a + 1
    win, dec = _q(CANONICAL_2PT, reach, reach, seed)
    rep = condition_check(win, dec, sc, beta, eps1)
    assert D > 2 * (beta + eps1) * D0
    if rep.ex1:
        assert rep.condition
    b = chebyshev_bound(win, dec, rep, 18.0)
    assert b.log_main_exact <= b.log_main + 1e-9


def test_bound_dominates_exact_tail():
    s = solve_s(CANONICAL_2PT)
    sc = Scale.make(40, s, 1.2, 0.005, 0.05)
    reach = (sc.J + 2) * sc.a + 1
    win, dec = _q(CANONICAL_2PT, reach, reach, 8)
    rep = condition_check(win, dec, sc, 14.4, 3.6)
    u = 18.0
    b = chebyshev_bound(win, dec, rep, u)
    nu = dec.nu(sc.n)
    tab = hitting_tail_exact(win, 0, nu, horizon=int(u * nu))
    assert tab.log_survival[-1] <= b.log_total_exact + 1e-12
    assert b.log_total_exact <= b.log_total + 1e-12


# --- birth-death trace ---------------------------------------------------------------

def test_reflecting_environment_trace(rng):
    win, dec = _q(RIGHT, 5, 60, 0)
    tr = birth_death_trace(win, dec, 4, 30, rng)
    assert np.all(np.diff(tr.z) == 1)
    assert np.all(tr.theta == 4)
    assert tr.n_exit == tr.n_tilde


@given(st.integers(0, 2**32 - 1))
def test_hitting_time_below_coarse_sum(seed):
    win, dec = _q(CANONICAL_2PT, 40, 40, seed)
    tr = birth_death_trace(win, dec, 3, 20, np.random.default_rng(seed + 1))
    assert tr.t_target <= tr.theta[: tr.n_exit].sum()


def test_left_step_frequency_matches_exit_probability():
    win, dec = _q(CANONICAL_2PT, 40, 40, 5)
    a = 2
    g = coarse_grain(dec, a, -1, 1)
    q = 1 - exit_prob(win, g.site(-1), 0, g.site(1))
    rng = np.random.default_rng(7)
    reps = 2000
    left = sum(birth_death_trace(win, dec, a, 4, rng).z[1] < 0 for _ in range(reps))
    assert abs(left / reps - q) <= 4 * math.sqrt(q * (1 - q) / reps)


# --- truncated sums -------------------------------------------------------------------

def test_threshold_below_all_heights():
    win, dec = _q(CANONICAL_2PT, 10, 50, 3)
    t = truncated_sum_stats(win, dec, 50.0, 30, 1e-3, 4, 14.0, 2.0)
    assert t.centered == -30 * 14.0
    assert t.trunc_diff == 0.0


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_truncation_difference_closed_form(seed, c):
    win, dec = _q(CANONICAL_3PT, 12, 40, seed)
    t = truncated_sum_stats(win, dec, 40.0, 30, 5.0, c, 10.0, 1.5)
    assert t.trunc_diff == pytest.approx(t.trunc_diff_closed, rel=1e-10, abs=1e-12)
    assert t.trunc_diff >= -1e-12


def test_second_moment_regimes():
    assert second_moment_shape(100.0, 1.5) == ("s<2", pytest.approx(10.0))
    assert second_moment_shape(100.0, 2.0) == ("s=2", pytest.approx(math.log(100)))
    assert second_moment_shape(100.0, 3.0) == ("s>2", 1.0)


# --- tails and Q-means -----------------------------------------------------------------

def test_equal_samples_have_no_tail():
    with pytest.raises(TooFewExceedances):
        hill_tail_estimate(np.full(10**5, 3.0))


def test_hill_on_pareto(rng):
    x = rng.pareto(1.5, 10**6) + 1.0
    est = hill_tail_estimate(x, 0.01)
    assert est.ci_low <= 1.5 <= est.ci_high


def test_lattice_hill_on_geometric_levels(rng):
    h = math.log(2)
    k = rng.geometric(1 - 2 ** -2.0, 10**6) - 1  # P(K >= j) = 4^-j: index 2 on the lattice 2^K
    est = hill_tail_estimate(np.exp(h * k), 0.01, lattice_step=h)
    assert est.ci_low <= 2.0 <= est.ci_high


def test_q_means_reflecting_environment(rng):
    q = estimate_q_means(RIGHT, 1000, rng)
    assert q.beta == 1.0 and q.length == 1.0
