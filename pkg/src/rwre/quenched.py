"""Closed-form quenched quantities for a fixed environment window.

Notation: Pi_{i,j} = prod_{k=i}^j rho_k, W_{i,j} = sum_{k=i}^j Pi_{k,j},
R_{i,j} = sum_{k=i}^j Pi_{i,k}. With a reflection at m the single-level
crossing time tau_k (from k to k+1) has mean 1 + 2 W_{m+1,k}, and the
hitting time T_{k1} from k0 is the sum of independent tau_k, k0 <= k < k1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels as K
from .env import EnvironmentWindow, LadderDecomposition
from .errors import ConditionViolated, OutOfWindow, QuenchedOverflow, ValidationError

OVERFLOW = 1e300
DIVERGED = math.inf


def _check(value: float) -> float:
    if not value <= OVERFLOW:
        raise QuenchedOverflow(f"value {value!r} exceeds {OVERFLOW:g}")
    return value


def _span(window: EnvironmentWindow, i: int, j: int) -> np.ndarray:
    """rho on sites i..j (empty when i = j + 1)."""
    if j < i - 1:
        raise ValidationError(f"need i <= j + 1, got i={i}, j={j}")
    if i == j + 1:
        return np.empty(0)
    if i < window.lo or j > window.hi:
        raise OutOfWindow(f"sites {i}..{j} not inside [{window.lo}, {window.hi}]")
    return window.rho[i - window.lo: j - window.lo + 1]


def _reflection(window: EnvironmentWindow) -> int:
    if window.reflection is None:
        raise ValidationError("this quantity needs a window with a reflection")
    return window.reflection


def w_left(window: EnvironmentWindow, i: int, j: int) -> float:
    """W_{i,j} by the forward recursion W_{i,j} = rho_j (1 + W_{i,j-1})."""
    r = _span(window, i, j)
    return _check(float(K.w_forward(r)[-1])) if r.size else 0.0


def r_right(window: EnvironmentWindow, i: int, j: int) -> float:
    """R_{i,j} by the backward recursion R_{i,j} = rho_i (1 + R_{i+1,j})."""
    r = _span(window, i, j)
    return _check(float(K.r_backward(r)[0])) if r.size else 0.0


def pi_prod(window: EnvironmentWindow, i: int, j: int) -> float:
    """Pi_{i,j}; the empty product (i = j + 1) is 1."""
    r = _span(window, i, j)
    with np.errstate(divide="ignore"):
        return _check(float(np.exp(np.sum(np.log(r))))) if r.size else 1.0


def tau_means(window: EnvironmentWindow, k0: int, k1: int) -> np.ndarray:
    """E[tau_k] for k = k0..k1-1 under the window's reflection."""
    m = _reflection(window)
    if not (m <= k0 <= k1):
        raise ValidationError(f"need reflection {m} <= k0 {k0} <= k1 {k1}")
    if k1 - 1 > window.hi:
        raise OutOfWindow(f"site {k1 - 1} outside the window")
    w = K.w_forward(window.rho[m + 1 - window.lo: k1 - window.lo])
    out = 1.0 + 2.0 * np.concatenate(([0.0], w))[k0 - m:]
    if out.size and not np.all(out <= OVERFLOW):
        raise QuenchedOverflow("crossing-time mean exceeds 1e300")
    return out


def expected_tau(window: EnvironmentWindow, k: int) -> float:
    """E_{omega(m)}[tau_k] = 1 + 2 W_{m+1,k}, and 1 when k = m."""
    return float(tau_means(window, k, k + 1)[0])


def expected_hitting(window: EnvironmentWindow, k0: int, k1: int) -> float:
    """E^{k0}_{omega(m)}[T_{k1}] as a sum of single-level crossing means."""
    return _check(float(np.sum(tau_means(window, k0, k1))))


def expected_hitting_double_sum(window: EnvironmentWindow, k0: int, k1: int) -> float:
    """(k1 - k0) + 2 sum_{j=k0}^{k1-1} sum_{i=m+1}^{j} Pi_{i,j}, term by term.

    Quadratic-cost reference used to cross-check ``expected_hitting``.
    """
    m = _reflection(window)
    if not (m <= k0 <= k1):
        raise ValidationError(f"need reflection {m} <= k0 {k0} <= k1 {k1}")
    total = float(k1 - k0)
    for j in range(k0, k1):
        for i in range(m + 1, j + 1):
            total += 2.0 * float(np.prod(window.rho[i - window.lo: j - window.lo + 1]))
    return _check(total)


def mgf_log_exact(window: EnvironmentWindow, k0: int, k1: int, lam: float) -> float:
    """log E^{k0}_{omega(m)}[exp(lam T_{k1})]; +inf when the MGF diverges."""
    m = _reflection(window)
    if not (m <= k0 <= k1):
        raise ValidationError(f"need reflection {m} <= k0 {k0} <= k1 {k1}")
    if k1 - 1 > window.hi:
        raise OutOfWindow(f"site {k1 - 1} outside the window")
    if k1 == k0 or lam == 0:
        return 0.0
    om = np.ascontiguousarray(window.omegas[m - window.lo: k1 - window.lo])
    return float(K.mgf_log_product(om, float(lam), k0 - m))


def mgf_exact(window: EnvironmentWindow, k0: int, k1: int, lam: float) -> float:
    """E^{k0}_{omega(m)}[exp(lam T_{k1})] through the continued-fraction recursion.

    g(m) = e^lam and g(k) = omega_k e^lam / (1 - (1 - omega_k) e^lam g(k-1));
    the MGF is prod_{k=k0}^{k1-1} g(k). Divergence, detected the moment
    (1 - omega_k) e^lam g(k-1) >= 1, is reported as ``DIVERGED`` (+inf)
    rather than raised.
    """
    lv = mgf_log_exact(window, k0, k1, lam)
    if lv == math.inf:
        return DIVERGED
    return _check(math.exp(lv)) if lv < 700 else _check(math.inf)


def _threshold_gap(lam: float, e: float) -> float:
    """e^{-lam} - sinh(lam) e, the positivity margin of the MGF bounds."""
    return math.exp(-lam) - math.sinh(lam) * e


def mgf_upper_bound(window: EnvironmentWindow, k0: int, k1: int, lam: float) -> float:
    """exp(sinh(lam) E^{k0}[T_{k1}] / (e^{-lam} - sinh(lam) E^m[T_{k1}])).

    Valid for lam >= 0 whenever the denominator is positive; otherwise
    raises ConditionViolated.
    """
    m = _reflection(window)
    if lam < 0:
        raise ValidationError("the bound is stated for lam >= 0")
    e_m = expected_hitting(window, m, k1)
    e_0 = expected_hitting(window, k0, k1)
    gap = _threshold_gap(lam, e_m)
    if not gap > 0:
        raise ConditionViolated(f"e^-lam - sinh(lam) E^m[T] = {gap!r} <= 0")
    expo = math.sinh(lam) * e_0 / gap
    if expo > 690.0:
        raise QuenchedOverflow(f"bound exp({expo!r}) exceeds {OVERFLOW:g}")
    return _check(math.exp(expo))


def mgf_log_upper_bound(window: EnvironmentWindow, k0: int, k1: int, lam: float) -> float:
    m = _reflection(window)
    e_m = expected_hitting(window, m, k1)
    gap = _threshold_gap(lam, e_m)
    if not gap > 0:
        raise ConditionViolated(f"e^-lam - sinh(lam) E^m[T] = {gap!r} <= 0")
    return math.sinh(lam) * expected_hitting(window, k0, k1) / gap


def mgf_per_step_bound(window: EnvironmentWindow, k: int, n: int, lam: float) -> float:
    """Upper bound on E_{omega(m)}[exp(lam tau_k)] for m <= k <= n.

    e^lam (e^{-lam} - sinh(lam)(E^m[T_k] - (k-m)))
        / (e^{-lam} - sinh(lam)(E^m[T_{k+1}] - (k+1-m))),
    valid when e^{-lam} - sinh(lam)(E^m[T_{n+1}] - (n+1-m)) > 0.
    Products over k telescope to the bound on the hitting-time MGF.
    """
    m = _reflection(window)
    if not (m <= k <= n):
        raise ValidationError(f"need m <= k <= n, got {m}, {k}, {n}")
    taus = tau_means(window, m, n + 1)
    excess = np.concatenate(([0.0], np.cumsum(taus - 1.0)))
    sh = math.sinh(lam)
    if not math.exp(-lam) - sh * excess[n + 1 - m] > 0:
        raise ConditionViolated("per-step positivity condition fails at n + 1")
    num = math.exp(-lam) - sh * excess[k - m]
    den = math.exp(-lam) - sh * excess[k + 1 - m]
    return _check(math.exp(lam) * num / den)


def threshold(lam: float) -> float:
    """e^{-lam} / sinh(lam) = 2 / (e^{2 lam} - 1)."""
    if lam <= 0:
        return math.inf
    return 2.0 / math.expm1(2.0 * lam)


def lambda_for_mean(e: float) -> float:
    """Root of e^{-lam}/sinh(lam) = e, i.e. log(1 + 2/e) / 2."""
    if not e > 0:
        raise ValidationError("mean hitting time must be positive")
    return 0.5 * math.log1p(2.0 / e)


def lambda_max(window: EnvironmentWindow, k1: int) -> float:
    """Largest lam for which the hitting-time MGF bound applies.

    The positivity condition e^{-lam} - sinh(lam) E^m[T_{k1}] > 0 is
    equivalent to e^{2 lam} < 1 + 2 / E^m[T_{k1}], so the root has a
    closed form.
    """
    m = _reflection(window)
    return lambda_for_mean(expected_hitting(window, m, k1))


def exit_prob(window: EnvironmentWindow, a: int, x: int, b: int) -> float:
    """P^x(T_b < T_a) for a <= x <= b, by the gambler's-ruin formula.

    Uses sum_{j=a}^{x-1} Pi_{a+1,j} / sum_{j=a}^{b-1} Pi_{a+1,j}
    (Pi_{a+1,a} = 1) evaluated in log space.
    """
    if not (a <= x <= b) or a == b:
        raise ValidationError(f"need a <= x <= b and a < b, got {a}, {x}, {b}")
    if x == a:
        return 0.0
    if x == b:
        return 1.0
    lr = window.log_rho[_site_slice(window, a + 1, b - 1)]
    logpi = np.concatenate(([0.0], np.cumsum(lr)))
    top = np.max(logpi)
    terms = np.exp(logpi - top)
    cs = np.cumsum(terms)
    return float(cs[x - a - 1] / cs[-1])


def _site_slice(window, i, j):
    if i > j:
        return slice(0, 0)
    if i < window.lo or j > window.hi:
        raise OutOfWindow(f"sites {i}..{j} not inside [{window.lo}, {window.hi}]")
    return slice(i - window.lo, j - window.lo + 1)


@dataclass(frozen=True)
class MgfResult:
    """MGF of T_{k1} from k0 with a reflection at m.

    ``exact_value`` is +inf when the MGF diverges; ``upper_bound`` is None
    when the positivity condition of the bound fails.
    """

    m: int
    k0: int
    k1: int
    lam: float
    exact_value: float
    upper_bound: Optional[float]
    lambda_max: float

    @property
    def diverged(self) -> bool:
        return self.exact_value == DIVERGED

    @property
    def condition_holds(self) -> bool:
        return self.upper_bound is not None


def mgf_summary(window: EnvironmentWindow, k0: int, k1: int, lam: float) -> MgfResult:
    m = _reflection(window)
    exact = mgf_exact(window, k0, k1, lam)
    try:
        ub = mgf_upper_bound(window, k0, k1, lam)
    except ConditionViolated:
        ub = None
    return MgfResult(m, k0, k1, float(lam), exact, ub, lambda_max(window, k1))


@dataclass(frozen=True)
class QuenchedSummary:
    """Expected crossing time of one ladder block and its decompositions.

    ``beta`` uses the window's reflection (its left edge if none);
    ``beta_trunc`` reflects at nu_{i-(c-1)}. ``terms`` are the three
    summands l_i, 2 sum_j W_{nu_i,j} and 2 R_{nu_i,nu_{i+1}-1} W of the
    truncated value, and ``trunc_error`` is the closed form of
    beta - beta_trunc.
    """

    index: int
    c: int
    nu: int
    nu_next: int
    beta: float
    beta_trunc: float
    terms: Tuple[float, float, float]
    trunc_error: float

    @property
    def length(self) -> int:
        return self.nu_next - self.nu


def beta_block(window: EnvironmentWindow, decomp: LadderDecomposition, i: int, c: int = 1) -> QuenchedSummary:
    """beta_i and beta_i^{(c)} for block i (counted from the origin block).

    beta_i^{(c)} = E^{nu_i}_{omega(nu_{i-(c-1)})}[T_{nu_{i+1}}]. The
    summands are evaluated through W and R independently of the direct
    sums of crossing means, so the two routes can be compared.
    """
    if c < 1:
        raise ValidationError("c must be at least 1")
    base = window.reflected()
    edge = base.reflection
    nu, nxt = decomp.nu(i), decomp.nu(i + 1)
    r = decomp.nu(i - (c - 1))
    if r < edge:
        raise OutOfWindow(f"nu_(i-(c-1)) = {r} lies left of the reflection {edge}")
    beta = expected_hitting(base, nu, nxt)
    trunc = expected_hitting(base.reflected(r) if r != edge else base, nu, nxt)
    l_i = float(nxt - nu)
    # with c = 1 the reflection sits at nu itself, so rho_nu = 0 inside W_{nu,j}
    first = nu + 1 if r == nu else nu
    sum_w = 0.0
    for j in range(nu, nxt):
        sum_w += w_left(window, first, j)
    rr = r_right(window, nu, nxt - 1)
    w_back = w_left(window, r + 1, nu - 1) if r < nu else 0.0
    terms = (l_i, 2.0 * sum_w, 2.0 * rr * w_back)
    if r == edge:
        err = 0.0
    else:
        err = 2.0 * (1.0 + w_left(base, edge + 1, r - 1)) * pi_prod(window, r, nu - 1) * rr
    return QuenchedSummary(i, c, nu, nxt, beta, trunc, terms, _check(err))


def block_betas(window: EnvironmentWindow, decomp: LadderDecomposition) -> np.ndarray:
    """beta for every block of ``decomp`` under the window's reflection, in O(len)."""
    base = window.reflected()
    m = base.reflection
    lo_site = int(decomp.nus[0])
    hi_site = int(decomp.nus[-1])
    if lo_site < m:
        raise OutOfWindow("decomposition starts left of the reflection")
    taus = tau_means(base, lo_site, hi_site)
    cs = np.concatenate(([0.0], np.cumsum(taus)))
    off = decomp.nus - lo_site
    return np.diff(cs[off])


def block_betas_truncated(window: EnvironmentWindow, decomp: LadderDecomposition, c: int) -> np.ndarray:
    """beta^{(c)} for blocks c-1 .. n_blocks-1 (array index, not origin-relative).

    Uses beta^{(c)} = l_i + 2 sum_j W_{nu_i,j} + 2 R_i W_{nu_{i-(c-1)}+1, nu_i-1},
    with W taken in the reflected environment (rho_{nu_i} = 0 when c = 1).
    """
    rho = window.rho
    nus = decomp.nus
    nb = decomp.n_blocks
    out = np.full(nb, np.nan)
    for i in range(c - 1, nb):
        a, b = nus[i] - window.lo, nus[i + 1] - window.lo
        blk = rho[a:b].copy()
        rr = K.r_backward(blk)[0]
        if c == 1:
            blk[0] = 0.0
        w = K.w_forward(blk)
        rs = nus[i - (c - 1)] - window.lo
        wb = K.w_forward(rho[rs + 1:a])
        wb = wb[-1] if wb.size else 0.0
        out[i] = (b - a) + 2.0 * w.sum() + 2.0 * rr * wb
    return out
