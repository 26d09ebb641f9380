"""Compiled inner loops.

Everything here works on plain arrays indexed from 0; the public modules
translate site labels to array offsets.
"""

import numpy as np
from numba import njit

LADDER_TOL = 1e-9
RESCALE_BELOW = 1e-250


@njit(cache=True)
def segment_blocks(logrho, want, tol):
    """Cut an i.i.d. log-rho stream into ladder blocks.

    The stream is assumed to start at a ladder point. Returns block lengths,
    log block heights and the number of stream entries consumed by complete
    blocks (an unfinished trailing block is left for the caller).
    """
    lengths = np.empty(want, np.int64)
    logm = np.empty(want, np.float64)
    nb = 0
    start = 0
    acc = 0.0
    top = -np.inf
    for x in range(logrho.shape[0]):
        acc += logrho[x]
        if acc > top:
            top = acc
        if acc < -tol:
            lengths[nb] = x + 1 - start
            logm[nb] = top
            nb += 1
            start = x + 1
            acc = 0.0
            top = -np.inf
            if nb == want:
                break
    return lengths[:nb], logm[:nb], start


@njit(cache=True)
def ladder_scan(logrho, tol):
    """Ladder offsets and log heights for a window scanned from offset 0.

    ``logrho`` covers sites start..stop-1. Returned offsets include 0 and
    may include ``len(logrho)`` (the site one past the last rho).
    """
    n = logrho.shape[0]
    nus = np.empty(n + 1, np.int64)
    logm = np.empty(n + 1, np.float64)
    nus[0] = 0
    nb = 0
    acc = 0.0
    top = -np.inf
    for x in range(n):
        acc += logrho[x]
        if acc > top:
            top = acc
        if acc < -tol:
            logm[nb] = top
            nb += 1
            nus[nb] = x + 1
            acc = 0.0
            top = -np.inf
    return nus[: nb + 1], logm[:nb]


@njit(cache=True)
def w_forward(rho):
    """W_j = rho_j (1 + W_{j-1}) with W_{-1} = 0, for every j."""
    n = rho.shape[0]
    out = np.empty(n, np.float64)
    w = 0.0
    for j in range(n):
        w = rho[j] * (1.0 + w)
        out[j] = w
    return out


@njit(cache=True)
def r_backward(rho):
    """R_i = rho_i (1 + R_{i+1}) with R_n = 0, for every i."""
    n = rho.shape[0]
    out = np.empty(n, np.float64)
    r = 0.0
    for i in range(n - 1, -1, -1):
        r = rho[i] * (1.0 + r)
        out[i] = r
    return out


@njit(cache=True)
def mgf_log_product(omega, lam, first):
    """Log of prod_{k >= first} g(k) for the reflected-walk recursion.

    ``omega[0]`` is the reflecting site. The recursion is carried on
    d = g - 1, for which d(k) = (e^lam - 1 + q e^lam d(k-1)) / (omega_k - q (e^lam - 1 + e^lam d(k-1)))
    with q = 1 - omega_k; every term is nonnegative except the denominator,
    so nothing cancels when g is close to 1. Returns +inf when the
    recursion diverges at or before a factor that enters the product.
    """
    el = np.exp(lam)
    em1 = np.expm1(lam)
    d = em1
    diverged = False
    total = 0.0
    if first == 0:
        total = lam
    for k in range(1, omega.shape[0]):
        q = 1.0 - omega[k]
        if q == 0.0:
            d = em1
            diverged = False
        elif not diverged:
            num = em1 + q * el * d
            den = omega[k] - q * (em1 + el * d)
            if den <= 0.0:
                diverged = True
            else:
                d = num / den
        if k >= first:
            if diverged:
                return np.inf
            total += np.log1p(d)
    return total


@njit(cache=True)
def absorb_step(p, nxt, omega):
    """One step of the walk on offsets 0..n-1; returns mass absorbed at n.

    Mass stepping left of offset 0 is also returned (as the second value);
    with a reflecting left edge it is always zero.
    """
    n = p.shape[0]
    for i in range(n):
        nxt[i] = 0.0
    for i in range(n):
        v = p[i]
        if v != 0.0:
            r = omega[i] * v
            if i + 1 < n:
                nxt[i + 1] += r
            if i > 0:
                nxt[i - 1] += v - r
    left = (1.0 - omega[0]) * p[0]
    return omega[n - 1] * p[n - 1], left


@njit(cache=True)
def absorb_run(p, omega, steps, log_scale, log_surv, absorbed, lo_support, hi_support):
    """Advance ``steps`` steps, writing log-survival after each step.

    ``p`` is modified in place. Mass is rescaled when it drops below
    RESCALE_BELOW; ``log_scale`` tracks the accumulated factor. Returns the
    new log scale, absorbed mass (in unscaled units, only meaningful before
    the first rescale), leaked mass and the support bounds.
    """
    n = p.shape[0]
    nxt = np.zeros(n)
    leaked = 0.0
    for t in range(steps):
        a = lo_support - 1
        if a < 0:
            a = 0
        b = hi_support + 1
        if b > n - 1:
            b = n - 1
        for i in range(a, b + 1):
            nxt[i] = 0.0
        for i in range(lo_support, hi_support + 1):
            v = p[i]
            if v != 0.0:
                r = omega[i] * v
                if i + 1 < n:
                    nxt[i + 1] += r
                if i > 0:
                    nxt[i - 1] += v - r
                elif v - r != 0.0:
                    leaked += (v - r) * np.exp(log_scale)
        if hi_support == n - 1:
            absorbed += omega[n - 1] * p[n - 1] * np.exp(log_scale)
        tot = 0.0
        big = 0.0
        for i in range(a, b + 1):
            p[i] = nxt[i]
            tot += nxt[i]
            if nxt[i] > big:
                big = nxt[i]
        lo_support = a
        hi_support = b
        if tot > 0.0 and big < 1e-250:
            f = 1.0 / big
            for i in range(a, b + 1):
                p[i] *= f
            log_scale -= np.log(f)
            tot *= f
        if tot > 0.0:
            log_surv[t] = log_scale + np.log(tot)
        else:
            log_surv[t] = -np.inf
    return log_scale, absorbed, leaked, lo_support, hi_support


@njit(cache=True)
def free_run(p, omega, steps):
    """Advance an unabsorbed distribution ``steps`` steps (no rescaling).

    Offsets run 0..n-1; mass stepping off either end is dropped and the
    dropped total is returned so the caller can detect window escape.
    """
    n = p.shape[0]
    nxt = np.zeros(n)
    lost = 0.0
    for t in range(steps):
        for i in range(n):
            nxt[i] = 0.0
        for i in range(n):
            v = p[i]
            if v != 0.0:
                r = omega[i] * v
                if i + 1 < n:
                    nxt[i + 1] += r
                else:
                    lost += r
                if i > 0:
                    nxt[i - 1] += v - r
                else:
                    lost += v - r
        for i in range(n):
            p[i] = nxt[i]
    return lost


@njit(cache=True)
def walk_path(omega, pos, t, uniforms, stop_lo, stop_hi, t_max, marks, rec_t, rec_x, nrec, last_mark):
    """Advance one walker using the supplied uniforms.

    Positions are offsets into ``omega``. Stops on reaching ``stop_lo`` or
    ``stop_hi`` (offsets, inclusive), on hitting ``t_max`` or when the
    uniforms run out. Whenever the walker stands on a marked offset that
    differs from ``last_mark``, (time, offset) is appended to the record.
    Returns (pos, t, used, nrec, last_mark, code) with code 0 = need more
    uniforms, 1 = stopped, 2 = time limit, 3 = escaped.
    """
    n = omega.shape[0]
    used = 0
    m = uniforms.shape[0]
    while True:
        if pos <= stop_lo or pos >= stop_hi:
            return pos, t, used, nrec, last_mark, 1
        if t >= t_max:
            return pos, t, used, nrec, last_mark, 2
        if pos < 0 or pos >= n:
            return pos, t, used, nrec, last_mark, 3
        if used == m:
            return pos, t, used, nrec, last_mark, 0
        if uniforms[used] < omega[pos]:
            pos += 1
        else:
            pos -= 1
        used += 1
        t += 1
        if pos >= 0 and pos < marks.shape[0] and marks[pos] and pos != last_mark:
            if nrec < rec_t.shape[0]:
                rec_t[nrec] = t
                rec_x[nrec] = pos
            nrec += 1
            last_mark = pos


@njit(cache=True)
def batch_hitting(omega, start, target, t_max, rng_u):
    """Count walkers (one per row of ``rng_u``) still short of ``target``.

    Each row of ``rng_u`` holds ``t_max`` uniforms. A walker survives if it
    has not reached offset ``target`` within ``t_max`` steps. Returns the
    number of survivors and the number that escaped the left edge.
    """
    reps = rng_u.shape[0]
    surv = 0
    esc = 0
    for r in range(reps):
        pos = start
        hit = False
        for t in range(t_max):
            if pos >= target:
                hit = True
                break
            if pos < 0:
                break
            if rng_u[r, t] < omega[pos]:
                pos += 1
            else:
                pos -= 1
        if pos >= target:
            hit = True
        if pos < 0:
            esc += 1
        elif not hit:
            surv += 1
    return surv, esc


@njit(cache=True)
def batch_endpoints(omega, start, n, rng_u):
    """Endpoint offsets after ``n`` steps for each row of ``rng_u``.

    Returns -1 for a walker that leaves the array.
    """
    reps = rng_u.shape[0]
    size = omega.shape[0]
    out = np.empty(reps, np.int64)
    for r in range(reps):
        pos = start
        ok = True
        for t in range(n):
            if rng_u[r, t] < omega[pos]:
                pos += 1
            else:
                pos -= 1
            if pos < 0 or pos >= size:
                ok = False
                break
        out[r] = pos if ok else -1
    return out
