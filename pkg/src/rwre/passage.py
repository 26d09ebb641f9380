"""Exact distributions of passage times by dynamic programming, and Monte Carlo.

The exact routines evolve the full position distribution of the walk in a
fixed window. Monte Carlo routines split the replicas into fixed-size chunks,
each with its own generator derived from (seed, chunk index), so the result
does not depend on how many workers process the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.stats import beta as beta_dist

from . import _kernels as K
from .env import EnvironmentWindow
from .errors import NoBoundedSolution, OutOfWindow, ValidationError, WindowEscape

MASS_TOL = 1e-12
HORIZON_CAP = 10**7
_BLOCK = 4096


@dataclass
class WalkState:
    """A single simulated trajectory endpoint and its recorded marks."""

    position: int
    time: int
    stopped: bool
    marks: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))


@dataclass
class PassageTable:
    """Survival function of T_target from ``start`` under a reflection.

    ``log_survival[t]`` is log P(T > t) for t = 0..horizon. ``rescaled`` is
    True when the retained mass fell below 1e-250 and the vector had to be
    renormalised; ``absorbed`` is then only approximate. ``truncated`` is
    True when automatic extension stopped at the step cap.
    """

    start: int
    target: int
    reflection: int
    log_survival: np.ndarray
    absorbed: float
    rescaled: bool
    truncated: bool
    snapshots: Dict[int, np.ndarray]

    @property
    def horizon(self) -> int:
        return self.log_survival.size - 1

    @property
    def survival(self) -> np.ndarray:
        return np.exp(self.log_survival)

    def tail(self, t: int) -> float:
        """P(T > t); 0 beyond an automatically extended table."""
        if t < 0:
            return 1.0
        if t > self.horizon:
            if self.truncated:
                raise ValidationError("survival beyond a truncated table")
            return 0.0
        return float(math.exp(self.log_survival[t]))

    def mean_from_tail(self) -> float:
        """E[T] = sum_t P(T > t) over the table."""
        return float(np.sum(self.survival))


def _reflected_span(window, start, target):
    if window.reflection is None:
        raise ValidationError("exact passage tables need a reflecting left edge")
    m = window.reflection
    if not (m <= start <= target):
        raise ValidationError(f"need reflection {m} <= start {start} <= target {target}")
    if target - 1 > window.hi:
        raise OutOfWindow(f"target {target} needs omega up to {target - 1}")
    return m


def hitting_tail_exact(window: EnvironmentWindow, start: int, target: int,
                       horizon: Optional[int] = None, mass_tol: float = MASS_TOL,
                       cap: int = HORIZON_CAP, snapshot_times: Sequence[int] = ()) -> PassageTable:
    """P(T_target > t) for t = 0..horizon by forward evolution with absorption.

    The window must carry a reflection m <= start; mass at m always steps
    right. With ``horizon=None`` the table is extended until the retained
    mass drops below ``mass_tol`` or ``cap`` steps are reached.
    Probabilities are tracked in linear space and renormalised (with a log
    factor) whenever the largest entry falls below 1e-250.
    """
    m = _reflected_span(window, start, target)
    if start == target:
        return PassageTable(start, target, m, np.array([-np.inf]), 1.0, False, False, {})
    om = np.ascontiguousarray(window.omegas[m - window.lo: target - window.lo])
    p = np.zeros(om.size)
    p[start - m] = 1.0
    snaps = sorted(set(int(s) for s in snapshot_times))
    out = {}
    if 0 in snaps:
        out[0] = p.copy()
    log_scale, absorbed = 0.0, 0.0
    lo_s = hi_s = start - m
    chunks = [np.array([0.0])]
    t = 0
    limit = cap if horizon is None else int(horizon)
    truncated = False
    while t < limit:
        step = min(_BLOCK if horizon is None else limit - t, limit - t)
        pending = [s for s in snaps if t < s <= t + step]
        if pending:
            step = pending[0] - t
        buf = np.empty(step)
        log_scale, absorbed, _, lo_s, hi_s = K.absorb_run(p, om, step, log_scale, buf, absorbed, lo_s, hi_s)
        chunks.append(buf)
        t += step
        if pending:
            out[t] = p * math.exp(log_scale)
        if horizon is None and buf[-1] < math.log(mass_tol):
            break
    else:
        truncated = horizon is None
    logs = np.concatenate(chunks)
    # the target cannot be reached before target - start steps
    logs[: min(logs.size, target - start)] = 0.0
    return PassageTable(start, target, m, logs, absorbed, bool(log_scale != 0.0), truncated, out)


def mgf_linear_oracle(window: EnvironmentWindow, k0: int, k1: int, lam: float, solver: str = "elimination") -> float:
    """E^{k0}[exp(lam T_{k1})] from the linear equations of the walk.

    h(x) = e^lam (omega_x h(x+1) + (1-omega_x) h(x-1)) for m <= x < k1 with
    h(k1) = 1. Elimination runs from the absorbing end towards the
    reflection. The system is a Z-matrix, and the MGF is finite exactly when
    it is a nonsingular M-matrix, i.e. when every pivot is positive, so a
    nonpositive pivot raises NoBoundedSolution. Sites left of the last wall
    (omega = 1) at or before k0 are unreachable and are dropped.
    ``solver="banded"`` solves the same system with LAPACK instead and checks
    positivity of the solution; its accuracy degrades with the condition
    number, which grows like the mean hitting time on uphill stretches.
    """
    m = _reflected_span(window, k0, k1)
    if k0 == k1:
        return 1.0
    om = window.omegas[m - window.lo: k1 - window.lo]
    walls = np.nonzero(om[: k0 - m + 1] == 1.0)[0]
    first = int(walls[-1]) if walls.size else 0
    om = om[first:]
    n = om.size
    el, em1 = math.exp(lam), math.expm1(lam)
    q = 1.0 - om
    i0 = k0 - m - first
    if solver == "banded":
        # u = h - 1 solves (I - e^lam P) u = e^lam - 1, which keeps digits when h is close to 1
        ab = np.zeros((3, n))
        ab[1, :] = 1.0
        ab[0, 1:] = -el * om[:-1]
        ab[2, :-1] = -el * q[1:]
        u = solve_banded((1, 1), ab, np.full(n, em1))
        if not np.all(u >= 0):
            raise NoBoundedSolution("linear system has a solution below 1")
        return float(1.0 + u[i0])
    # h(x) = A[x] + (1 - C[x]) h(x-1), sweeping from x = n-1 down to 0. Carrying
    # C = 1 - B instead of B turns the pivot 1 - e^lam omega_x B[x+1] into
    # q_x - omega_x (e^lam - 1) + e^lam omega_x C[x+1], free of cancellation at small lam.
    A = np.empty(n)
    C = np.empty(n)
    a_next, c_next = 1.0, 1.0
    for x in range(n - 1, -1, -1):
        piv = q[x] - om[x] * em1 + el * om[x] * c_next
        if not piv > 0:
            raise NoBoundedSolution(f"nonpositive pivot {piv!r} at site {m + first + x}")
        A[x] = el * om[x] * a_next / piv
        C[x] = (el * om[x] * c_next - em1) / piv
        a_next, c_next = A[x], C[x]
    h = A[0]
    for x in range(1, i0 + 1):
        h = A[x] + (1.0 - C[x]) * h
    return float(h)


def slowdown_exact(window: EnvironmentWindow, n: int, v: float, start: int = 0) -> float:
    """P(X_n - start < v n) by evolving the distribution n steps.

    The window must contain every site the walk can reach in n steps, or
    reflect at its left edge; otherwise WindowEscape is raised.
    """
    if not (window.lo <= start <= window.hi):
        raise OutOfWindow(f"start {start} outside the window")
    if window.hi + 1 - start < n:
        raise WindowEscape("window too short on the right for n steps")
    size = len(window) + 1
    p = np.zeros(size)
    p[start - window.lo] = 1.0
    # the extra site hi+1 can only be reached on the last step, so its omega is never used
    ext = np.concatenate((window.omegas, [0.5]))
    lost = K.free_run(p, ext, int(n))
    if lost > 0:
        raise WindowEscape(f"mass {lost!r} left the window")
    sites = np.arange(size) + window.lo - start
    return float(min(1.0, p[sites < v * n].sum()))


def simulate_walk(window: EnvironmentWindow, start: int, n_steps: int, rng: np.random.Generator,
                  stop_at: Optional[int] = None, marks: Optional[Sequence[int]] = None,
                  max_records: int = 1 << 20) -> WalkState:
    """Run one walk for up to ``n_steps`` steps.

    Stops early on reaching ``stop_at``. If ``marks`` is given, every visit
    to a marked site other than the last recorded one is logged as
    (time, site). Raises WindowEscape if the walk needs omega outside the
    window.
    """
    om = np.ascontiguousarray(window.omegas)
    pos = start - window.lo
    if not (0 <= pos < om.size):
        raise OutOfWindow(f"start {start} outside the window")
    stop_hi = (stop_at - window.lo) if stop_at is not None else om.size + 10
    mk = np.zeros(om.size + 1, np.bool_)
    if marks is not None:
        idx = np.asarray(marks, np.int64) - window.lo
        mk[idx[(idx >= 0) & (idx <= om.size)]] = True
    rec_t = np.empty(max_records, np.int64)
    rec_x = np.empty(max_records, np.int64)
    nrec = 0
    last = -1
    if mk[pos]:
        rec_t[0], rec_x[0], nrec, last = 0, pos, 1, pos
    t = 0
    while True:
        u = rng.random(min(1 << 16, max(1, n_steps - t)))
        pos, t, _, nrec, last, code = K.walk_path(om, pos, t, u, -(1 << 62), stop_hi, n_steps, mk, rec_t, rec_x, nrec, last)
        if code == 3 or (code == 1 and pos != stop_hi):
            raise WindowEscape(f"walk left the window at time {t}")
        if code in (1, 2):
            break
    if nrec > max_records:
        raise ValidationError("too many recorded marks; raise max_records")
    recs = np.stack((rec_t[:nrec], rec_x[:nrec] + window.lo), axis=1)
    return WalkState(int(pos + window.lo), int(t), code == 1, recs)


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo probability with its standard error.

    ``upper`` is a one-sided 95% Clopper-Pearson upper limit, reported so
    that a zero count never turns into a point estimate of 0.
    """

    p: float
    se: float
    hits: int
    reps: int
    upper: float

    def __iter__(self):
        return iter((self.p, self.se))


def _estimate(hits, reps):
    p = hits / reps
    se = math.sqrt(max(p * (1 - p), 0.0) / reps)
    upper = 1.0 if hits == reps else float(beta_dist.ppf(0.95, hits + 1, reps - hits))
    return MCEstimate(p, se, int(hits), int(reps), upper)


def _chunks(reps, steps):
    size = int(max(1, min(8192, (1 << 22) // max(1, steps))))
    return [(c, min(size, reps - c * size)) for c in range((reps + size - 1) // size)]


def _run_chunks(work, reps, steps, workers):
    jobs = _chunks(reps, steps)
    if workers <= 1:
        return [work(c, k) for c, k in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda ck: work(*ck), jobs))


def _chunk_rng(seed, c):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(c,)))


def estimate_hitting_tail_mc(window: EnvironmentWindow, start: int, target: int, threshold_time: int,
                             reps: int, seed: int, workers: int = 1) -> MCEstimate:
    """Fraction of walks from ``start`` that have not hit ``target`` by ``threshold_time``.

    Replicas are split into chunks with generators keyed by (seed, chunk),
    so any ``workers`` value gives the same answer.
    """
    if not (window.lo <= start <= target <= window.hi + 1):
        raise OutOfWindow("start and target must lie in the window")
    om = np.ascontiguousarray(window.omegas)
    t_max = int(max(0, threshold_time))
    s0, tg = start - window.lo, target - window.lo

    def work(c, k):
        u = _chunk_rng(seed, c).random((k, max(1, t_max)))
        return K.batch_hitting(om, s0, tg, t_max, u)

    res = _run_chunks(work, reps, t_max, workers)
    if sum(e for _, e in res):
        raise WindowEscape("a simulated walk left the window on the left")
    return _estimate(sum(s for s, _ in res), reps)


def estimate_slowdown_mc(window: EnvironmentWindow, start: int, n: int, v: float,
                         reps: int, seed: int, workers: int = 1) -> MCEstimate:
    """Monte Carlo estimate of P(X_n - start < v n)."""
    om = np.ascontiguousarray(window.omegas)
    s0 = start - window.lo

    def work(c, k):
        u = _chunk_rng(seed, c).random((k, max(1, n)))
        return K.batch_endpoints(om, s0, n, u)

    ends = np.concatenate(_run_chunks(work, reps, n, workers))
    if np.any(ends < 0):
        raise WindowEscape("a simulated walk left the window")
    return _estimate(int(np.sum(ends - s0 < v * n)), reps)
