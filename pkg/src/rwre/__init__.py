"""Quenched slowdown analysis for one-dimensional random walks in i.i.d. random environment."""

from .env import (CANONICAL_2PT, CANONICAL_3PT, EnvDistribution, EnvironmentWindow, LadderDecomposition,
                  ladder_points, named_distribution, potential, sample_alpha_window, sample_q_blocks,
                  sample_q_window, solve_s, speed)
from .errors import (BlockOverflow, ConditionViolated, InsufficientBlocks, NoBoundedSolution, NoRoot,
                     OutOfWindow, QuenchedOverflow, RWREError, TooFewExceedances, ValidationError,
                     WindowEscape)
from .passage import (estimate_hitting_tail_mc, estimate_slowdown_mc, hitting_tail_exact, mgf_linear_oracle,
                      simulate_walk, slowdown_exact)
from .quenched import (beta_block, exit_prob, expected_hitting, expected_tau, lambda_max, mgf_exact,
                       mgf_per_step_bound, mgf_upper_bound, r_right, w_left)
from .scan import ScanConfig, oscillation_scan

__version__ = "0.1.0"
