"""Block-level experiments: coarse-graining, hill classes, MGF conditions and tails.

A scale is described by n (a ladder index), the super-block size a (in
ladder blocks) and lam. Super-block boundaries are nu(j) = nu_{j a}, and
the walk observed on these boundaries is a birth-death chain Z whose
holding times Theta_i add up to the hitting time of the right boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from . import _kernels as K
from .env import EnvDistribution, EnvironmentWindow, LadderDecomposition, sample_q_window
from .errors import InsufficientBlocks, TooFewExceedances, ValidationError
from .passage import simulate_walk
from .quenched import block_betas, block_betas_truncated, exit_prob, threshold


@dataclass(frozen=True)
class CoarseGrid:
    """Super-block boundaries nu(j) = nu_{j a} for j = j_lo .. j_lo + len(sites) - 1."""

    a: int
    j_lo: int
    sites: np.ndarray

    @property
    def j_hi(self) -> int:
        return self.j_lo + self.sites.size - 1

    def site(self, j: int) -> int:
        if not (self.j_lo <= j <= self.j_hi):
            raise InsufficientBlocks(f"super-block boundary {j} not available")
        return int(self.sites[j - self.j_lo])


def coarse_grain(decomp: LadderDecomposition, a: int, j_lo: Optional[int] = None,
                 j_hi: Optional[int] = None) -> CoarseGrid:
    """Group ladder blocks into super-blocks of ``a`` blocks around the origin."""
    if a < 1:
        raise ValidationError("super-block size must be at least 1")
    o = decomp.origin_block or 0
    avail_lo = -(o // a)
    avail_hi = (decomp.nus.size - 1 - o) // a
    j_lo = avail_lo if j_lo is None else j_lo
    j_hi = avail_hi if j_hi is None else j_hi
    if j_lo < avail_lo or j_hi > avail_hi:
        raise InsufficientBlocks(f"need super-blocks {j_lo}..{j_hi}, have {avail_lo}..{avail_hi}")
    idx = o + a * np.arange(j_lo, j_hi + 1)
    return CoarseGrid(a, j_lo, decomp.nus[idx].copy())


def classify_hills(decomp: LadderDecomposition, n: float, s: float, eps: float) -> np.ndarray:
    """True for blocks with M_i > n^{(1-eps)/s} (big hills)."""
    return decomp.log_heights > (1.0 - eps) / s * math.log(n)


def multi_hill_fraction(big: np.ndarray, a: int) -> float:
    """Fraction of complete super-blocks of ``a`` blocks holding two or more big hills."""
    m = big.size // a
    if m == 0:
        return 0.0
    counts = big[: m * a].reshape(m, a).sum(axis=1)
    return float(np.mean(counts >= 2))


@dataclass(frozen=True)
class Scale:
    """Parameters of one scale: super-block size, lam and the step budget L."""

    n: int
    a: int
    lam: float
    L: int
    s: float

    @property
    def J(self) -> int:
        return self.n // self.a

    @property
    def K(self) -> int:
        return -(-self.n // self.a)

    @property
    def norm(self) -> float:
        return self.n ** (1.0 - 1.0 / self.s)

    @classmethod
    def make(cls, n: int, s: float, D: float, D0: float, delta: float) -> "Scale":
        a = int(math.floor(n ** (1.0 / s) / D))
        if a < 1:
            raise InsufficientBlocks(f"n = {n} gives an empty super-block (floor(n^(1/s)/D) = 0)")
        lam = D0 * n ** (-1.0 / s)
        return cls(int(n), a, lam, int(math.floor(n / (a * (1.0 - delta)))), s)


@dataclass(frozen=True)
class ConditionReport:
    """Per-super-block crossing data at one scale, for j = -J .. J.

    ``e_full[j]`` is E^{nu(j-1)}_{omega(nu(j-1))}[T_{nu(j+1)}], ``e_start[j]``
    the same from nu(j); ``log_mgf`` and ``log_mgf_bound`` are the exact log
    MGF of the latter and its upper bound (+inf when the bound's condition
    fails); ``q_left[j]`` = P^{nu(j)}(T_{nu(j-1)} < T_{nu(j+1)}).
    """

    scale: Scale
    js: np.ndarray
    e_full: np.ndarray
    e_start: np.ndarray
    log_mgf: np.ndarray
    log_mgf_bound: np.ndarray
    q_left: np.ndarray
    threshold: float
    ex1_level: Optional[float]

    @property
    def max_e(self) -> float:
        return float(self.e_full.max())

    @property
    def condition(self) -> bool:
        return self.max_e < self.threshold

    @property
    def ex1(self) -> Optional[bool]:
        return None if self.ex1_level is None else self.max_e < self.ex1_level


def condition_check(window: EnvironmentWindow, decomp: LadderDecomposition, scale: Scale,
                    beta_mean: Optional[float] = None, eps1: Optional[float] = None) -> ConditionReport:
    """Evaluate the per-super-block crossing means and MGFs at one scale.

    ``beta_mean`` and ``eps1`` set the level 2 (E_Q beta + eps1) a used by
    the block-sum criterion; without them ``ex1`` is None.
    """
    J = scale.J
    grid = coarse_grain(decomp, scale.a, -J - 1, J + 1)
    if grid.site(-J - 1) < window.reflected().reflection:
        raise InsufficientBlocks("window reflection lies inside the super-block range")
    lam = scale.lam
    sh, em = math.sinh(lam), math.exp(-lam)
    js = np.arange(-J, J + 1)
    e_full = np.empty(js.size)
    e_start = np.empty(js.size)
    lm = np.empty(js.size)
    lb = np.empty(js.size)
    q = np.empty(js.size)
    rho, om, lo = window.rho, window.omegas, window.lo
    for n, j in enumerate(js):
        left, mid, right = grid.site(j - 1) - lo, grid.site(j) - lo, grid.site(j + 1) - lo
        seg = rho[left:right].copy()
        seg[0] = 0.0
        taus = 1.0 + 2.0 * K.w_forward(seg)
        e_full[n] = taus.sum()
        e_start[n] = taus[mid - left:].sum()
        seg_om = om[left:right].copy()
        seg_om[0] = 1.0
        lm[n] = K.mgf_log_product(seg_om, lam, mid - left)
        gap = em - sh * e_full[n]
        lb[n] = sh * e_start[n] / gap if gap > 0 else np.inf
        q[n] = 1.0 - exit_prob(window, left + lo, mid + lo, right + lo)
    level = None
    if beta_mean is not None and eps1 is not None:
        level = 2.0 * (beta_mean + eps1) * scale.a
    return ConditionReport(scale, js, e_full, e_start, lm, lb, q, threshold(lam), level)


@dataclass(frozen=True)
class ChebyshevBound:
    """Upper bounds on log P(T_{nu_n} > u nu_n) at one scale.

    ``log_main`` and ``log_main_exact`` are L log max_j MGF - lam u nu_n with
    the MGF bound and with the exact MGFs. ``log_wrong_side`` bounds the
    chance that the coarse walk exits on the left, ``log_slow_chain`` the
    chance that it needs more than L steps; ``log_total`` adds all three and
    is a rigorous bound at every finite n.
    """

    log_main: float
    log_main_exact: float
    log_wrong_side: float
    log_slow_chain: float
    norm: float

    @property
    def log_total(self) -> float:
        return float(logsumexp([self.log_main, self.log_wrong_side, self.log_slow_chain]))

    @property
    def log_total_exact(self) -> float:
        return float(logsumexp([self.log_main_exact, self.log_wrong_side, self.log_slow_chain]))

    @property
    def main_norm(self) -> float:
        return self.log_main / self.norm

    @property
    def total_norm(self) -> float:
        return self.log_total / self.norm


def chebyshev_bound(window: EnvironmentWindow, decomp: LadderDecomposition, report: ConditionReport,
                    u: float, n_target: Optional[int] = None) -> ChebyshevBound:
    """Bound the slowdown probability at the scale of ``report``.

    With N the number of coarse steps to reach nu(K), K = ceil(n/a), the
    hitting time of nu_n is at most Theta_1 + ... + Theta_N, and each
    Theta from nu(j) is dominated by the crossing time with a reflection at
    nu(j-1). Markov's inequality on exp(lam sum Theta) gives the main term.
    """
    sc = report.scale
    n = sc.n if n_target is None else n_target
    nu_n = decomp.nu(n)
    drift = sc.lam * u * nu_n
    main = sc.L * float(np.max(report.log_mgf_bound)) - drift
    main_exact = sc.L * float(np.max(report.log_mgf)) - drift
    Kc = sc.K
    grid = coarse_grain(decomp, sc.a, -Kc, Kc)
    p_wrong = 1.0 - exit_prob(window, grid.site(-Kc), 0, grid.site(Kc))
    wrong = math.log(p_wrong) if p_wrong > 0 else -math.inf
    inner = np.abs(report.js) < Kc
    p = float(np.max(report.q_left[inner]))
    if sc.L < Kc:
        slow = 0.0
    else:
        slow = float(binom.logsf(math.floor((sc.L - Kc) / 2), sc.L, p)) if p > 0 else -math.inf
    return ChebyshevBound(main, main_exact, wrong, slow, sc.norm)


@dataclass(frozen=True)
class BirthDeathTrace:
    """Coarse walk on super-block boundaries for one trajectory.

    ``z[i]`` is the i-th visited boundary index and ``times[i]`` its
    arrival time; ``theta[i-1] = times[i] - times[i-1]``. ``n_exit`` is N
    (first z >= K), ``n_tilde`` is the first i with |z_i| >= K, and
    ``t_target`` the hitting time of nu_n.
    """

    z: np.ndarray
    times: np.ndarray
    n_exit: int
    n_tilde: int
    t_target: int

    @property
    def theta(self) -> np.ndarray:
        return np.diff(self.times)


def birth_death_trace(window: EnvironmentWindow, decomp: LadderDecomposition, a: int, n: int,
                      rng: np.random.Generator, max_steps: int = 10**8) -> BirthDeathTrace:
    """Simulate the walk from 0 until it reaches nu(K) and read off Z and Theta."""
    Kc = -(-n // a)
    grid = coarse_grain(decomp, a, None, Kc)
    target = grid.site(Kc)
    st = simulate_walk(window, 0, max_steps, rng, stop_at=target, marks=grid.sites)
    if not st.stopped:
        raise ValidationError("walk did not reach the right boundary within max_steps")
    times, sites = st.marks[:, 0], st.marks[:, 1]
    z = np.searchsorted(grid.sites, sites) + grid.j_lo
    n_exit = int(np.argmax(z >= Kc))
    n_tilde = int(np.argmax(np.abs(z) >= Kc))
    hit = np.nonzero(sites >= decomp.nu(n))[0]
    return BirthDeathTrace(z, times, n_exit, n_tilde, int(times[hit[0]]) if hit.size else int(st.time))


@dataclass(frozen=True)
class TruncatedSums:
    """Sums over blocks 0..a_n-1 that control the truncated block means."""

    centered: float
    trunc_diff: float
    trunc_diff_closed: float
    zeta_sum: float
    psi_sum: float
    second_moment: float
    regime: str
    predicted_growth: float


def second_moment_shape(x: float, s: float) -> tuple[str, float]:
    """Growth of E[M^2; M <= x] up to a constant: x^(2-s), log x, or 1."""
    if s < 2 - 1e-9:
        return "s<2", x ** (2.0 - s)
    if s > 2 + 1e-9:
        return "s>2", 1.0
    return "s=2", math.log(x)


def truncated_sum_stats(window: EnvironmentWindow, decomp: LadderDecomposition, n: float,
                        a_n: int, b_n: float, c_n: int, beta_bar: float, s: float) -> TruncatedSums:
    """Truncated block sums for blocks 0..a_n-1 of ``decomp``.

    ``centered`` = sum (beta_i 1{M_i <= b_n} - beta_bar) with beta_i under
    the window's reflection; ``trunc_diff`` = sum (beta_i - beta_i^(c_n))
    1{M_i <= b_n}, computed both from the two betas and from the closed
    form; ``zeta_sum`` and ``psi_sum`` are the sums of the two pieces that
    split beta_i^(c_n) (with the (log n)^2 length and size cut-offs).
    """
    o = decomp.origin_block or 0
    if o < c_n - 1 or o + a_n > decomp.n_blocks:
        raise InsufficientBlocks(f"need {c_n - 1} blocks left of the origin and {a_n} to the right")
    sel = slice(o, o + a_n)
    beta = block_betas(window, decomp)[sel]
    trunc = block_betas_truncated(window, decomp, c_n)[sel]
    heights = decomp.heights[sel]
    small = heights <= b_n
    lengths = decomp.lengths[sel]
    cut = math.log(n) ** 2
    rho, lo = window.rho, window.lo
    refl = window.reflected().reflection
    closed = np.empty(a_n)
    zeta = np.empty(a_n)
    psi = np.empty(a_n)
    w_edge = K.w_forward(rho[refl + 1 - lo: decomp.nus[-1] - lo])
    for t, i in enumerate(range(o, o + a_n)):
        nu, nxt, r = decomp.nus[i], decomp.nus[i + 1], decomp.nus[i - (c_n - 1)]
        blk = rho[nu - lo: nxt - lo]
        w_in = K.w_forward(blk)
        rr = K.r_backward(blk)[0]
        wb = K.w_forward(rho[r + 1 - lo: nu - lo])
        wb = wb[-1] if wb.size else 0.0
        if r == refl:
            closed[t] = 0.0
        else:
            w_r = w_edge[r - 1 - (refl + 1)] if r - 1 >= refl + 1 else 0.0
            with np.errstate(divide="ignore"):
                pi = math.exp(np.sum(np.log(rho[r - lo: nu - lo])))
            closed[t] = 2.0 * (1.0 + w_r) * pi * rr
        ok_len = lengths[t] < cut
        zeta[t] = w_in.sum() if (heights[t] < b_n and ok_len) else 0.0
        psi[t] = rr * wb if (small[t] and lengths[t] <= cut and wb < cut) else 0.0
    regime, growth = second_moment_shape(b_n, s)
    m = decomp.heights[sel]
    return TruncatedSums(
        centered=float(np.sum(beta * small) - a_n * beta_bar),
        trunc_diff=float(np.sum((beta - trunc) * small)),
        trunc_diff_closed=float(np.sum(closed * small)),
        zeta_sum=float(zeta.sum()),
        psi_sum=float(psi.sum()),
        second_moment=float(np.mean(np.where(small, m, 0.0) ** 2)),
        regime=regime,
        predicted_growth=growth,
    )


@dataclass(frozen=True)
class TailEstimate:
    """Tail index estimate from the top order statistics."""

    index: float
    ci_low: float
    ci_high: float
    k: int
    threshold: float
    lattice_step: Optional[float]


def hill_tail_estimate(samples, top_fraction: float = 0.01, lattice_step: Optional[float] = None,
                       min_exceedances: int = 100) -> TailEstimate:
    """Hill estimate of the tail index from the top ``top_fraction`` of samples.

    For continuous data this is k / sum log(X_(i) / X_(k+1)) with a normal
    interval index +- 1.96 index / sqrt(k). When log X lives on a lattice
    h Z (``lattice_step=h``) the plain Hill estimator is biased by ties, so
    the threshold is moved to a lattice level u and the log-excesses
    log(X/u)/h, which are geometric under a power tail, give the maximum
    likelihood estimate log(1 + 1/mean)/h; this reduces to Hill as h -> 0.
    """
    x = np.asarray(samples, dtype=np.float64)
    x = x[np.isfinite(x) & (x > 0)]
    n = x.size
    k = int(math.ceil(top_fraction * n))
    if k < min_exceedances or k >= n:
        raise TooFewExceedances(f"{k} exceedances, need at least {min_exceedances}")
    srt = np.sort(x)[::-1]
    if lattice_step is None:
        thr = srt[k]
        logs = np.log(srt[:k] / thr)
        h_mean = logs.mean()
        if not h_mean > 0:
            raise TooFewExceedances("top order statistics are all tied")
        idx = 1.0 / h_mean
        se = idx / math.sqrt(k)
    else:
        h = float(lattice_step)
        level = np.round(np.log(x) / h)
        cut = np.round(math.log(srt[k - 1]) / h)
        exc = level[level >= cut] - cut
        k = exc.size
        m = exc.mean()
        if not m > 0:
            raise TooFewExceedances("top order statistics are all tied")
        idx = math.log1p(1.0 / m) / h
        se = 1.0 / (h * math.sqrt(k * m * (1.0 + m)))
        thr = math.exp(cut * h)
    return TailEstimate(idx, idx - 1.96 * se, idx + 1.96 * se, k, float(thr), lattice_step)


@dataclass(frozen=True)
class QMeans:
    """Block means under Q with standard errors."""

    beta: float
    beta_se: float
    length: float
    length_se: float
    n: int


def estimate_q_means(dist: EnvDistribution, nblocks: int, rng: np.random.Generator, burn: int = 64) -> QMeans:
    """E_Q[beta_0] and E_Q[nu_1] from one long Q-window.

    beta is computed with a reflection ``burn`` blocks to the left, which
    changes it only by a factor of order prod of that many block products.
    """
    win, dec = sample_q_window(dist, burn, nblocks, rng)
    b = block_betas(win, dec)[burn:]
    ln = dec.lengths[burn:].astype(np.float64)
    return QMeans(float(b.mean()), float(b.std(ddof=1) / math.sqrt(b.size)),
                  float(ln.mean()), float(ln.std(ddof=1) / math.sqrt(ln.size)), int(b.size))
