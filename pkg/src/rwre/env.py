"""Random environments on Z: laws, sampled windows, potential and ladder blocks.

A site x carries omega_x, the probability of stepping right, and
rho_x = (1 - omega_x) / omega_x. A reflecting site has omega = 1, rho = 0.
The potential is V(x) = sum_{i<x} log rho_i for x > 0 (and the mirrored
sum for x < 0), and ladder points are the successive strict minima of V
seen from the left.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from . import _kernels as K
from .errors import BlockOverflow, NoRoot, OutOfWindow, ValidationError

WEIGHT_TOL = 1e-12
LATTICE_TOL = 1e-9
BLOCK_CAP = 10**6


class LatticeWarning(UserWarning):
    """The law of log rho is supported on a lattice."""


def _lattice_step(values, tol=LATTICE_TOL, max_den=1000):
    """Common step h with every value an integer multiple of h, or None."""
    vals = [abs(v) for v in values if math.isfinite(v) and abs(v) > tol]
    if not vals:
        return None
    base = min(vals)
    den = 1
    for v in vals:
        r = v / base
        frac = Fraction(r).limit_denominator(max_den)
        if abs(r - float(frac)) > tol * max(1.0, r):
            return None
        den = den * frac.denominator // math.gcd(den, frac.denominator)
    return base / den


@dataclass(frozen=True)
class EnvDistribution:
    """Finitely supported law of omega_0 for an i.i.d. environment.

    Parameters
    ----------
    omegas : sequence of float
        Atom locations, each in (0, 1].
    weights : sequence of float
        Atom probabilities, nonnegative and summing to one.
    name : str
    """

    omegas: Tuple[float, ...]
    weights: Tuple[float, ...]
    name: str = "custom"

    def __post_init__(self):
        om = tuple(float(w) for w in self.omegas)
        wt = tuple(float(p) for p in self.weights)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "weights", wt)
        if len(om) == 0 or len(om) != len(wt):
            raise ValidationError("need matching, nonempty omega and weight lists")
        if any(not (0.0 < w <= 1.0) for w in om):
            raise ValidationError("every omega must lie in (0, 1]")
        if any(p < 0 for p in wt):
            raise ValidationError("weights must be nonnegative")
        if abs(sum(wt) - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {sum(wt)!r}, not 1")

    @classmethod
    def from_rho(cls, rhos, weights, name="custom"):
        return cls(tuple(1.0 / (1.0 + r) for r in rhos), tuple(weights), name)

    @property
    def rhos(self) -> np.ndarray:
        om = np.asarray(self.omegas)
        return (1.0 - om) / om

    @property
    def log_rhos(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.rhos)

    def mean_log_rho(self) -> float:
        lr = self.log_rhos
        w = np.asarray(self.weights)
        keep = w > 0
        return float(np.sum(w[keep] * lr[keep]))

    def mean_rho(self) -> float:
        return float(np.dot(self.weights, self.rhos))

    def lattice_step(self) -> Optional[float]:
        w = np.asarray(self.weights)
        return _lattice_step(self.log_rhos[w > 0])

    def validate(self, require_s=True, warn=True) -> "EnvCheck":
        """Check transience to the right and the tail-exponent assumptions.

        Raises ValidationError when E log rho >= 0, and NoRoot when
        ``require_s`` and no positive s solves E rho^s = 1. A lattice law
        only triggers a LatticeWarning.
        """
        mlr = self.mean_log_rho()
        if not mlr < 0:
            raise ValidationError(f"E log rho = {mlr!r} is not negative")
        try:
            s = solve_s(self)
        except NoRoot:
            if require_s:
                raise
            s = None
        step = self.lattice_step()
        if step is not None and warn:
            warnings.warn(f"{self.name}: log rho lies on the lattice {step!r} Z", LatticeWarning, stacklevel=2)
        return EnvCheck(mean_log_rho=mlr, s=s, lattice_step=step)


@dataclass(frozen=True)
class EnvCheck:
    mean_log_rho: float
    s: Optional[float]
    lattice_step: Optional[float]

    @property
    def lattice(self) -> bool:
        return self.lattice_step is not None


CANONICAL_2PT = EnvDistribution((1.0 / 3.0, 2.0 / 3.0), (0.2, 0.8), "canonical2pt")
CANONICAL_3PT = EnvDistribution.from_rho((3.0, 0.5, 0.25), (0.15, 0.45, 0.40), "canonical3pt")

NAMED = {d.name: d for d in (CANONICAL_2PT, CANONICAL_3PT)}


def named_distribution(name: str) -> EnvDistribution:
    try:
        return NAMED[name]
    except KeyError:
        raise ValidationError(f"unknown distribution {name!r}; known: {sorted(NAMED)}") from None


def solve_s(dist: EnvDistribution, tol: float = 1e-12) -> float:
    """Positive root of E[rho^s] = 1.

    Works with log E[rho^s] through log-sum-exp and bisects until the
    bracket stops shrinking in floating point. ``tol`` bounds the residual
    |E rho^s - 1| that is accepted at the end.
    """
    w = np.asarray(dist.weights)
    lr = dist.log_rhos
    keep = (w > 0) & np.isfinite(lr)
    lw, lr = np.log(w[keep]), lr[keep]
    if not np.any(lr > 0):
        raise NoRoot("no atom with rho > 1, so E rho^s < 1 for all s > 0")

    def f(g):
        return float(logsumexp(lw + g * lr))

    hi = 1.0
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise NoRoot("could not bracket the root")
    lo = hi
    while True:
        lo *= 0.5
        if f(lo) < 0:
            break
        if lo < 1e-300:
            raise NoRoot("E log rho is not negative; no positive root")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    s = lo if abs(f(lo)) <= abs(f(hi)) else hi
    if abs(math.expm1(f(s))) > tol:
        raise NoRoot(f"residual {math.expm1(f(s))!r} above tolerance")
    return s


def speed(dist: EnvDistribution) -> float:
    """Asymptotic speed (1 - E rho) / (1 + E rho), or 0 when E rho >= 1."""
    if not dist.mean_log_rho() < 0:
        raise ValidationError("the walk is not transient to the right")
    er = dist.mean_rho()
    if er >= 1:
        return 0.0
    return (1.0 - er) / (1.0 + er)


@dataclass(frozen=True)
class EnvironmentWindow:
    """omega on the sites lo..lo+len(omegas)-1, with an optional reflection.

    The array is stored read-only. If ``reflection`` is set, omega there
    must be exactly 1.
    """

    lo: int
    omegas: np.ndarray
    reflection: Optional[int] = None
    _rho: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        om = np.array(self.omegas, dtype=np.float64)
        if om.ndim != 1 or om.size == 0:
            raise ValidationError("omegas must be a nonempty 1-d array")
        if np.any(~(om > 0)) or np.any(om > 1):
            raise ValidationError("omegas must lie in (0, 1]")
        om.flags.writeable = False
        object.__setattr__(self, "lo", int(self.lo))
        object.__setattr__(self, "omegas", om)
        if self.reflection is not None:
            m = int(self.reflection)
            object.__setattr__(self, "reflection", m)
            if not (self.lo <= m <= self.hi):
                raise ValidationError(f"reflection {m} outside window [{self.lo}, {self.hi}]")
            if om[m - self.lo] != 1.0:
                raise ValidationError(f"omega at the reflection {m} is not 1")
        rho = (1.0 - om) / om
        rho.flags.writeable = False
        object.__setattr__(self, "_rho", rho)

    @property
    def hi(self) -> int:
        return self.lo + self.omegas.size - 1

    def __len__(self):
        return self.omegas.size

    @property
    def rho(self) -> np.ndarray:
        return self._rho

    @property
    def log_rho(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self._rho)

    def offset(self, x: int) -> int:
        if not (self.lo <= x <= self.hi):
            raise OutOfWindow(f"site {x} outside [{self.lo}, {self.hi}]")
        return x - self.lo

    def omega(self, x: int) -> float:
        return float(self.omegas[self.offset(x)])

    def rho_at(self, x: int) -> float:
        return float(self._rho[self.offset(x)])

    def with_reflection(self, m: int) -> "EnvironmentWindow":
        """Copy with omega_m set to 1; sites left of m are kept but unreachable."""
        om = self.omegas.copy()
        om[self.offset(m)] = 1.0
        return EnvironmentWindow(self.lo, om, m)

    def reflected(self, m: Optional[int] = None) -> "EnvironmentWindow":
        """Window with a reflection at m, defaulting to its own or its left edge."""
        if m is None:
            m = self.reflection if self.reflection is not None else self.lo
        if m == self.reflection:
            return self
        return self.with_reflection(m)


def potential(window: EnvironmentWindow, x) -> np.ndarray | float:
    """V(x) with V(0) = 0.

    Needs every rho between 0 and x inside the window. To the left of a
    reflection at m < 0 the potential is +inf, which is returned even for
    sites outside the window.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=np.int64))
    lr = window.log_rho
    lo, hi = window.lo, window.hi
    out = np.empty(xs.shape, np.float64)
    if not (lo <= 0 <= hi + 1):
        raise OutOfWindow("the origin is not inside the window")
    right = np.concatenate(([0.0], np.cumsum(lr[-lo:]))) if -lo <= hi - lo else np.zeros(1)
    left = np.concatenate(([0.0], -np.cumsum(lr[: -lo][::-1]))) if lo < 0 else np.zeros(1)
    m = window.reflection
    for n, xv in enumerate(xs):
        if xv >= 0:
            if xv > hi + 1:
                raise OutOfWindow(f"V({xv}) needs rho up to site {xv - 1}")
            out[n] = right[xv]
        else:
            if xv < lo:
                if m is not None and m < 0:
                    out[n] = np.inf
                    continue
                raise OutOfWindow(f"V({xv}) needs rho down to site {xv}")
            out[n] = left[-xv]
    return float(out[0]) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class LadderDecomposition:
    """Ladder points nu_0 < nu_1 < ... of a window range.

    ``nus`` has one more entry than ``lengths``/``log_heights``: block i runs
    over the sites nus[i] .. nus[i+1]-1. ``origin_block`` is the index i
    with nus[i] == 0 (None if 0 is not a ladder point of the range).
    """

    nus: np.ndarray
    log_heights: np.ndarray
    origin_block: Optional[int]

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.nus)

    @property
    def heights(self) -> np.ndarray:
        return np.exp(self.log_heights)

    @property
    def n_blocks(self) -> int:
        return self.lengths.size

    def nu(self, i: int) -> int:
        """nu_i with i counted from the origin block."""
        j = i + (self.origin_block or 0)
        if not (0 <= j < self.nus.size):
            raise OutOfWindow(f"ladder index {i} not available")
        return int(self.nus[j])


def ladder_points(window: EnvironmentWindow, start: Optional[int] = None,
                  stop: Optional[int] = None) -> LadderDecomposition:
    """Ladder decomposition of the sites start..stop-1.

    ``start`` (default: window.lo) is taken as the first ladder point; the
    scan may place a final ladder point at ``stop`` (default: hi + 1). A
    block is closed as soon as the running log-product of rho since the
    last ladder point drops below -1e-9, which keeps exact ties on lattice
    laws from being read as new minima.
    """
    start = window.lo if start is None else int(start)
    stop = window.hi + 1 if stop is None else int(stop)
    if not (window.lo <= start <= stop <= window.hi + 1):
        raise OutOfWindow(f"range [{start}, {stop}) not inside the window")
    lr = window.log_rho[start - window.lo: stop - window.lo]
    offs, logm = K.ladder_scan(np.ascontiguousarray(lr), K.LADDER_TOL)
    nus = offs + start
    hit = np.nonzero(nus == 0)[0]
    return LadderDecomposition(nus, logm, int(hit[0]) if hit.size else None)


def sample_alpha_window(dist: EnvDistribution, lo: int, hi: int,
                        rng: np.random.Generator, reflection: Optional[int] = None) -> EnvironmentWindow:
    """i.i.d. omega on lo..hi drawn from ``dist``."""
    if hi < lo:
        raise ValidationError("empty window")
    idx = rng.choice(len(dist.omegas), size=hi - lo + 1, p=dist.weights)
    om = np.asarray(dist.omegas)[idx]
    if reflection is not None:
        om[reflection - lo] = 1.0
    return EnvironmentWindow(lo, om, reflection)


@dataclass(frozen=True)
class QBlocks:
    """Output of the block sampler: raw omegas plus their block structure."""

    omegas: np.ndarray
    lengths: np.ndarray
    log_heights: np.ndarray

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.lengths)[:-1]))


def sample_q_blocks(dist: EnvDistribution, nblocks: int, rng: np.random.Generator,
                    cap: int = BLOCK_CAP) -> QBlocks:
    """Draw ``nblocks`` i.i.d. ladder blocks under the Palm-type measure.

    Under this measure the origin is a ladder point and the blocks are
    i.i.d., so drawing an i.i.d. omega stream from the origin and cutting it
    at ladder points yields exactly that law. Raises BlockOverflow when an
    unfinished block grows past ``cap`` sites.
    """
    if nblocks <= 0:
        return QBlocks(np.empty(0), np.empty(0, np.int64), np.empty(0))
    k = len(dist.omegas)
    lr_atoms = dist.log_rhos
    om_atoms = np.asarray(dist.omegas)
    chunk = int(min(65536, max(256, 4 * nblocks)))
    pieces, lens, lms = [], [], []
    pending = np.empty(0, np.int64)
    got = 0
    while got < nblocks:
        idx = np.concatenate((pending, rng.choice(k, size=chunk, p=dist.weights)))
        ln, lm, used = K.segment_blocks(lr_atoms[idx], nblocks - got, K.LADDER_TOL)
        if ln.size:
            pieces.append(idx[:used])
            lens.append(ln)
            lms.append(lm)
            got += ln.size
        pending = idx[used:]
        if pending.size > cap:
            raise BlockOverflow(f"block longer than {cap} sites")
    idx = np.concatenate(pieces)
    return QBlocks(om_atoms[idx], np.concatenate(lens), np.concatenate(lms))


def sample_q_window(dist: EnvDistribution, left_blocks: int, right_blocks: int,
                    rng: np.random.Generator, reflect_left: bool = True) -> Tuple[EnvironmentWindow, LadderDecomposition]:
    """Two-sided environment with i.i.d. blocks on both sides of the origin.

    The first ``right_blocks`` sampled blocks are laid out from 0 to the
    right, the remaining ones to the left (block -1 ends at site 0). With
    ``reflect_left`` an extra reflecting site is prepended, so the window
    starts one site left of the leftmost ladder point and the block
    structure is unchanged.
    """
    qb = sample_q_blocks(dist, left_blocks + right_blocks, rng)
    lens = qb.lengths
    starts = qb.starts
    right_sites = int(lens[:right_blocks].sum())
    segs = [qb.omegas[starts[i]: starts[i] + lens[i]] for i in range(right_blocks, right_blocks + left_blocks)]
    left_om = np.concatenate(segs[::-1]) if segs else np.empty(0)
    om = np.concatenate((left_om, qb.omegas[:right_sites]))
    first = -left_om.size
    lo, refl = first, None
    if reflect_left:
        om = np.concatenate(([1.0], om))
        lo = refl = first - 1
    win = EnvironmentWindow(lo, om, refl)
    llens = lens[right_blocks:][::-1]
    nus = np.concatenate((first + np.concatenate(([0], np.cumsum(llens))), np.cumsum(lens[:right_blocks])))
    logm = np.concatenate((qb.log_heights[right_blocks:][::-1], qb.log_heights[:right_blocks]))
    return win, LadderDecomposition(nus.astype(np.int64), logm, left_blocks)
