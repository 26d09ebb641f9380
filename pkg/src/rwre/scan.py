"""Scale-by-scale scan of the slowdown probability in one fixed environment.

For each scale n the scan evaluates the super-block crossing criteria, the
Chebyshev-type upper bound on log P(T_{nu_n} > u nu_n), and the probability
itself, exactly by dynamic programming when the cost is acceptable and by
Monte Carlo otherwise. Everything is normalised by n^{1-1/s}.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .env import EnvDistribution, sample_q_window, solve_s, speed
from .errors import InsufficientBlocks, ValidationError
from .experiments import (QMeans, Scale, chebyshev_bound, classify_hills, condition_check,
                          estimate_q_means)
from .passage import estimate_hitting_tail_mc, hitting_tail_exact

COLUMNS = ("k", "n", "a", "lambda", "cond_ex1", "cond_mgf", "max_beta_sum",
           "bound_norm", "A_n", "A_n_err", "status")


@dataclass(frozen=True)
class ScanConfig:
    """Scan parameters.

    ``k_range`` selects the literal scales n_k = m^(m^k); ``n_grid`` is
    (n_min, n_max, ratio) for the geometric comparison grid. ``u``,
    ``eps1`` and ``D0`` default to 2/v, a quarter of the estimated
    E_Q[beta_0] and D / (10 (E_Q[beta_0] + eps1)) respectively, resolved by
    ``resolve``. With these defaults the limiting bound is negative.
    """

    m: int = 3
    k_range: Sequence[int] = (0, 1)
    D: float = 1.2
    D0: Optional[float] = None
    delta: float = 0.05
    u: Optional[float] = None
    eps: float = 0.2
    eps1: Optional[float] = None
    mc_reps: int = 10**4
    seed: int = 3
    n_grid: Optional[Sequence[float]] = (20, 3000, 1.08)
    q_blocks: int = 10**5
    dp_budget: float = 2e9
    workers: int = 1

    def scales(self) -> List[tuple]:
        """(k, n) pairs: literal n_k first, then the geometric grid (k = None)."""
        out = [(k, self.m ** (self.m ** k)) for k in self.k_range]
        if self.n_grid is not None:
            lo, hi, r = self.n_grid
            x, seen = float(lo), set()
            while x <= hi * (1 + 1e-12):
                n = int(round(x))
                if n not in seen:
                    seen.add(n)
                    out.append((None, n))
                x *= r
        return out


@dataclass(frozen=True)
class ResolvedScan:
    config: ScanConfig
    s: float
    v: float
    q: QMeans


def validate_config(cfg: ScanConfig, s: float, v: float) -> None:
    if not (isinstance(cfg.m, (int, np.integer)) and cfg.m > s + 1e-9):
        raise ValidationError(f"m = {cfg.m} must be an integer above s = {s:.6g}")
    if not cfg.D > 1:
        raise ValidationError("D must exceed 1")
    if not 0 < cfg.delta < 1:
        raise ValidationError("delta must lie in (0, 1)")
    upper = min((s - 1) / (2 * s), 1 - 1 / s)
    if not 0 < cfg.eps < upper:
        raise ValidationError(f"eps must lie in (0, {upper:.6g})")
    if cfg.u is not None and not cfg.u > 0:
        raise ValidationError(f"u = {cfg.u} must be positive")
    if cfg.mc_reps < 1:
        raise ValidationError("mc_reps must be positive")
    if cfg.n_grid is not None:
        lo, hi, r = cfg.n_grid
        if not (lo >= 1 and hi >= lo and r > 1):
            raise ValidationError("n_grid must be (n_min >= 1, n_max >= n_min, ratio > 1)")


def resolve(dist: EnvDistribution, cfg: ScanConfig) -> ResolvedScan:
    """Fill in defaults that depend on the law and check all constraints.

    The constant relation D > 2 (E_Q[beta_0] + eps1) D0 is checked with the
    Monte Carlo estimate of E_Q[beta_0].
    """
    dist.validate(warn=False)
    s, v = solve_s(dist), speed(dist)
    if v <= 0:
        raise ValidationError("zero speed: the slowdown scan needs v > 0")
    validate_config(cfg, s, v)
    q = estimate_q_means(dist, cfg.q_blocks, np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,))))
    eps1 = 0.25 * q.beta if cfg.eps1 is None else cfg.eps1
    if not eps1 > 0:
        raise ValidationError("eps1 must be positive")
    D0 = cfg.D / (10.0 * (q.beta + eps1)) if cfg.D0 is None else cfg.D0
    if not D0 > 0:
        raise ValidationError("D0 must be positive")
    if not cfg.D > 2 * (q.beta + eps1) * D0:
        raise ValidationError(f"D = {cfg.D} violates D > 2 (E_Q beta + eps1) D0 = {2 * (q.beta + eps1) * D0:.6g}")
    u = 2.0 / v if cfg.u is None else cfg.u
    return ResolvedScan(replace(cfg, eps1=eps1, D0=D0, u=u), s, v, q)


@dataclass
class ScanRecord:
    """One scale of the scan; ``row()`` gives the output columns."""

    k: Optional[int]
    n: int
    a: int
    lam: float
    cond_ex1: bool
    cond_mgf: bool
    max_beta_sum: float
    bound_norm: float
    A_n: float
    A_n_err: float
    status: str
    bound_main_norm: float = math.nan
    bound_exact_norm: float = math.nan
    big_hills: int = 0
    small_hills: int = 0
    nu_n: int = 0
    consistent: bool = True
    notes: List[str] = field(default_factory=list)

    def row(self) -> List[str]:
        k = "" if self.k is None else str(self.k)
        return [k, str(self.n), str(self.a), _fmt(self.lam), str(int(self.cond_ex1)), str(int(self.cond_mgf)),
                _fmt(self.max_beta_sum), _fmt(self.bound_norm), _fmt(self.A_n), _fmt(self.A_n_err), self.status]


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _tail_probability(win, nu_n, u, cfg, seed_key):
    """(log P(T_{nu_n} > u nu_n), standard error of the log, status)."""
    t = u * nu_n
    if t < nu_n:
        return 0.0, 0.0, "certain"
    horizon = int(math.floor(t))
    width = nu_n - win.lo
    if horizon * width <= cfg.dp_budget:
        tab = hitting_tail_exact(win, 0, nu_n, horizon=horizon)
        return float(tab.log_survival[horizon]), 0.0, "dp"
    est = estimate_hitting_tail_mc(win, 0, nu_n, horizon, cfg.mc_reps, seed_key, cfg.workers)
    if est.hits == 0:
        return math.log(est.upper), math.nan, "mc_upper"
    return math.log(est.p), est.se / est.p, "mc"


def oscillation_scan(dist: EnvDistribution, cfg: ScanConfig) -> tuple[ResolvedScan, List[ScanRecord]]:
    """Evaluate every configured scale in one Q-sampled environment.

    Returns the resolved configuration (with estimated block means) and one
    record per scale. Failures at a scale are recorded in its status.
    """
    res = resolve(dist, cfg)
    c, s = res.config, res.s
    scales = []
    for k, n in c.scales():
        try:
            scales.append((k, Scale.make(n, s, c.D, c.D0, c.delta)))
        except InsufficientBlocks:
            continue
    if not scales:
        raise ValidationError("no scale has floor(n^(1/s)/D) >= 1")
    reach = max(max(sc.n, (sc.J + 1) * sc.a) for _, sc in scales) + 1
    rng = np.random.default_rng(np.random.SeedSequence(c.seed, spawn_key=(0,)))
    win, dec = sample_q_window(dist, reach, reach, rng)
    records = []
    for idx, (k, sc) in enumerate(scales):
        records.append(_scan_one(win, dec, res, k, sc, idx))
    return res, records


def _scan_one(win, dec, res, k, sc, idx):
    c = res.config
    rep = condition_check(win, dec, sc, res.q.beta, c.eps1)
    nu_n = dec.nu(sc.n)
    cb = chebyshev_bound(win, dec, rep, c.u)
    notes = []
    if rep.condition and math.isfinite(cb.log_main):
        bound = cb.total_norm
        tag = ""
    else:
        bound = cb.log_total_exact / cb.norm
        tag = "|bound=exact"
    lo_i, hi_i = dec.origin_block - sc.J * sc.a, dec.origin_block + sc.J * sc.a
    big = classify_hills(dec, sc.n, res.s, c.eps)[lo_i:hi_i]
    try:
        logp, err, status = _tail_probability(win, nu_n, c.u, c, c.seed * 1000003 + idx)
    except Exception as exc:  # a failed scale is reported, not fatal
        logp, err, status = math.nan, math.nan, f"error:{type(exc).__name__}"
    A = logp / sc.norm
    A_err = err / sc.norm if math.isfinite(err) else err
    ok = True
    if status == "dp" and not A <= bound + 1e-12 * max(1.0, abs(bound)):
        ok = False
        notes.append("tail above bound")
    if not cb.log_main_exact <= cb.log_main + 1e-9 * max(1.0, abs(cb.log_main)):
        ok = False
        notes.append("exact-MGF bound above the closed-form bound")
    if c.u <= 1 / res.v:
        notes.append("u <= 1/v: the event is typical, not a slowdown")
    relation = c.D > 2 * (res.q.beta + c.eps1) * c.D0
    if rep.ex1 and relation and not rep.condition:
        ok = False
        notes.append("ex1 without condition")
    return ScanRecord(k, sc.n, sc.a, sc.lam, bool(rep.ex1), rep.condition, rep.max_e, bound, A, A_err,
                      status + tag, cb.main_norm, cb.log_main_exact / cb.norm, int(big.sum()),
                      int(big.size - big.sum()), nu_n, ok, notes)


def limit_bound(res: ResolvedScan) -> tuple[float, float]:
    """Limiting values of the normalised bound: with the margins, and without.

    The first is D0 (E beta + 3 eps1/2) / ((1-delta)(1 - 2 D0 (E beta + eps1)/D)) - D0 u E nu_1,
    the second its margin-free limit D0 E nu_1 (E beta / E nu_1 - u).
    """
    c, q = res.config, res.q
    with_margins = (c.D0 * (q.beta + 1.5 * c.eps1) / ((1 - c.delta) * (1 - 2 * c.D0 * (q.beta + c.eps1) / c.D))
                    - c.D0 * c.u * q.length)
    return with_margins, c.D0 * q.length * (q.beta / q.length - c.u)


def write_records(fh, records: Sequence[ScanRecord]) -> None:
    fh.write(",".join(COLUMNS) + "\n")
    for r in records:
        fh.write(",".join(r.row()) + "\n")


def config_items(res: ResolvedScan) -> List[tuple]:
    d = asdict(res.config)
    d.update(s=res.s, v=res.v, EQ_beta=res.q.beta, EQ_beta_se=res.q.beta_se,
             EQ_nu1=res.q.length, EQ_nu1_se=res.q.length_se)
    lb = limit_bound(res)
    d.update(limit_bound=lb[0], limit_bound_no_margin=lb[1])
    return list(d.items())
