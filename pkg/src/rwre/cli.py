"""Command-line front end.

Every subcommand writes a ``#`` header with its fully resolved
configuration followed by comma-separated columns. Exit codes: 0 success,
2 invalid input, 3 overflow or divergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import env as E
from . import experiments as X
from . import passage as P
from . import quenched as Qx
from . import scan as S
from .errors import (BlockOverflow, ConditionViolated, InsufficientBlocks, NoBoundedSolution, NoRoot,
                     OutOfWindow, QuenchedOverflow, RWREError, TooFewExceedances, ValidationError,
                     WindowEscape)
from .io import load_distribution, load_scan_config, read_window, write_window

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
_NUMERIC = (QuenchedOverflow, ConditionViolated, NoBoundedSolution, BlockOverflow, WindowEscape)
_INVALID = (ValidationError, NoRoot, OutOfWindow, InsufficientBlocks, TooFewExceedances)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if x is None:
        return "none"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


class Report:
    """Buffered output: header items, then a table."""

    def __init__(self, command: str):
        self.items: List[tuple] = [("command", command)]
        self.columns: Sequence[str] = ()
        self.rows: List[Sequence] = []

    def set(self, key, value):
        self.items.append((key, value))

    def table(self, columns: Sequence[str], rows):
        self.columns = columns
        self.rows = [list(r) for r in rows]

    def render(self) -> str:
        buf = io.StringIO()
        for k, v in self.items:
            buf.write(f"# {k} = {_fmt(v)}\n")
        if self.columns:
            buf.write(",".join(self.columns) + "\n")
            for r in self.rows:
                buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()


# --- shared helpers ---------------------------------------------------------------

def _dist(args) -> E.EnvDistribution:
    if args.dist_file:
        return load_distribution(args.dist_file)
    try:
        return E.named_distribution(args.dist)
    except KeyError:
        raise ValidationError(f"unknown distribution {args.dist!r}; known: {sorted(E.NAMED)}") from None


def _describe(rep: Report, args, dist: Optional[E.EnvDistribution]):
    if dist is not None:
        rep.set("dist", dist.name)
        rep.set("omegas", list(dist.omegas))
        rep.set("weights", list(dist.weights))
    if args.dist_file:
        rep.set("dist_file", args.dist_file)
    rep.set("seed", args.seed)
    rep.set("workers", args.workers)


def _need_seed(args):
    if args.seed is None:
        raise ValidationError(f"'{args.command}' is stochastic: pass --seed")
    if not 0 <= args.seed < 2**64:
        raise ValidationError("seed must be a 64-bit unsigned integer")


def _rng(args, key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(key,)))


def _mc_seed(args) -> int:
    # a stream disjoint from the environment streams (spawn keys 0..9)
    return int(np.random.SeedSequence(args.seed, spawn_key=(10,)).generate_state(1, np.uint64)[0])


def _positive(name, value, allow_zero=False):
    if value is None:
        return
    if not (value >= 0 if allow_zero else value > 0):
        raise ValidationError(f"--{name} must be {'non-negative' if allow_zero else 'positive'}")


def _line_window(args, dist, rep) -> E.EnvironmentWindow:
    """Window from --env-file, or i.i.d. sites 0..len-1 reflected at 0."""
    if args.env_file:
        rep.set("env_file", args.env_file)
        win = read_window(args.env_file)
        if win.reflection is None:
            win = win.reflected()
        return win
    _need_seed(args)
    _positive("len", args.len)
    rep.set("len", args.len)
    rep.set("reflection", 0)
    return E.sample_alpha_window(dist, 0, args.len - 1, _rng(args, 0), reflection=0)


def _q_window(args, dist, rep, left: int = 0):
    _need_seed(args)
    _positive("blocks", args.blocks)
    rep.set("blocks", args.blocks)
    rep.set("left_blocks", left)
    return E.sample_q_window(dist, left, args.blocks, _rng(args, 0))


def _exponent(dist) -> tuple[float, float]:
    dist.validate(warn=False)
    return E.solve_s(dist), E.speed(dist)


# --- subcommands -----------------------------------------------------------------

def cmd_solve_s(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    chk = dist.validate(warn=False)
    s = E.solve_s(dist)
    resid = float(np.dot(dist.weights, dist.rhos ** s) - 1.0)
    rep.table(("s", "residual", "mean_log_rho", "lattice_step"), [(s, resid, chk.mean_log_rho, chk.lattice_step)])


def cmd_speed(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    dist.validate(require_s=False, warn=False)
    rep.table(("v", "mean_rho"), [(E.speed(dist), dist.mean_rho())])


def cmd_sample_env(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    _need_seed(args)
    if args.blocks is not None:
        win, dec = _q_window(args, dist, rep)
        rep.set("ladder_points", int(dec.nus.size))
    else:
        _positive("len", args.len)
        rep.set("len", args.len)
        rep.set("m", args.m)
        win = E.sample_alpha_window(dist, 0, args.len - 1, _rng(args, 0), reflection=args.m)
    buf = io.StringIO()
    write_window(buf, win)
    head, body = buf.getvalue().split("\n", 1)
    # the window header must come first so the file can be read back
    rep.items.insert(0, ("__raw__", head))
    rep.body = body


def cmd_ladder(args, rep):
    dist = None if args.env_file else _dist(args)
    _describe(rep, args, dist)
    if args.env_file:
        rep.set("env_file", args.env_file)
        win = read_window(args.env_file)
        dec = E.ladder_points(win, 0 if win.lo <= 0 <= win.hi else None)
    elif args.blocks is not None:
        win, dec = _q_window(args, dist, rep)
    else:
        _need_seed(args)
        _positive("len", args.len)
        rep.set("len", args.len)
        win = E.sample_alpha_window(dist, 0, args.len - 1, _rng(args, 0))
        dec = E.ladder_points(win)
    rep.set("origin_block", dec.origin_block)
    lens = dec.lengths
    rows = [(i, int(dec.nus[i]), int(lens[i]), float(dec.log_heights[i]), float(np.exp(dec.log_heights[i])))
            for i in range(dec.n_blocks)]
    rep.table(("block", "nu", "length", "log_M", "M"), rows)


def cmd_beta(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    c = args.c
    if c < 1:
        raise ValidationError("--c must be at least 1")
    rep.set("c", c)
    win, dec = _q_window(args, dist, rep, left=max(c - 1, 1))
    o = dec.origin_block
    beta = Qx.block_betas(win, dec)
    trunc = Qx.block_betas_truncated(win, dec, c)
    rows = []
    for i in range(o, dec.n_blocks):
        rows.append((i - o, int(dec.nus[i]), int(dec.lengths[i]), float(np.exp(dec.log_heights[i])),
                     float(beta[i]), float(trunc[i])))
    rep.table(("block", "nu", "length", "M", "beta", "beta_trunc"), rows)


def _mgf_rows(args, rep, with_bound: bool):
    dist = None if args.env_file else _dist(args)
    _describe(rep, args, dist)
    _positive("lambda", args.lam, allow_zero=True)
    win = _line_window(args, dist, rep)
    m = win.reflection
    k0 = m if args.k0 is None else args.k0
    rep.set("lambda", args.lam)
    rep.set("k0", k0)
    rows = []
    for k1 in range(k0 + 1, win.hi + 2):
        e = Qx.expected_hitting(win, k0, k1)
        if with_bound:
            r = Qx.mgf_summary(win, k0, k1, args.lam)
            rows.append((k1, e, r.lambda_max, r.exact_value, r.upper_bound if r.upper_bound is not None else math.nan,
                         r.condition_holds))
        else:
            ex = Qx.mgf_exact(win, k0, k1, args.lam)
            try:
                orc = P.mgf_linear_oracle(win, k0, k1, args.lam)
            except NoBoundedSolution:
                orc = math.inf
            rows.append((k1, e, ex, orc))
    return rows


def cmd_mgf(args, rep):
    rows = _mgf_rows(args, rep, False)
    rep.table(("k1", "mean_T", "mgf_exact", "mgf_linear"), rows)


def cmd_mgf_bound(args, rep):
    rows = _mgf_rows(args, rep, True)
    rep.table(("k1", "mean_T", "lambda_max", "mgf_exact", "mgf_bound", "condition"), rows)


def cmd_exit_prob(args, rep):
    dist = None if args.env_file else _dist(args)
    _describe(rep, args, dist)
    win = _line_window(args, dist, rep) if not args.env_file else read_window(args.env_file)
    if args.env_file:
        rep.set("env_file", args.env_file)
    a = win.lo if args.a is None else args.a
    b = win.hi + 1 if args.b is None else args.b
    rep.set("a", a)
    rep.set("b", b)
    xs = range(a, b + 1) if args.x is None else [args.x]
    rep.table(("x", "p_right"), [(x, Qx.exit_prob(win, a, x, b)) for x in xs])


def cmd_first_passage(args, rep):
    dist = None if args.env_file else _dist(args)
    _describe(rep, args, dist)
    win = _line_window(args, dist, rep)
    start = win.reflection if args.start is None else args.start
    target = win.hi + 1
    _positive("n", args.n)
    _positive("stride", args.stride)
    rep.set("start", start)
    rep.set("target", target)
    tab = P.hitting_tail_exact(win, start, target, horizon=args.n)
    rep.set("horizon", tab.horizon)
    rep.set("mean_T", Qx.expected_hitting(win, start, target))
    rep.set("mean_T_from_tail", tab.mean_from_tail())
    rep.set("truncated", tab.truncated)
    rep.set("rescaled", tab.rescaled)
    ts = range(0, tab.horizon + 1, args.stride)
    rep.table(("t", "log_survival", "survival"), [(t, float(tab.log_survival[t]), tab.tail(t)) for t in ts])


def cmd_slowdown(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    _need_seed(args)
    if args.n is None or args.n < 1:
        raise ValidationError("--n (number of steps) is required and must be positive")
    _, vel = _exponent(dist)
    v = vel / 2 if args.v is None else args.v
    rep.set("n", args.n)
    rep.set("v", v)
    rep.set("v_alpha", vel)
    rep.set("reps", args.reps)
    win = E.sample_alpha_window(dist, -args.n, args.n, _rng(args, 0), reflection=-args.n)
    exact = P.slowdown_exact(win, args.n, v)
    row = [args.n, v, exact]
    cols = ["n", "v", "p_exact"]
    if args.reps:
        est = P.estimate_slowdown_mc(win, 0, args.n, v, args.reps, _mc_seed(args), args.workers)
        row += [est.p, est.se]
        cols += ["p_mc", "se_mc"]
    rep.table(cols, [row])


def _scale_a(args, s, n):
    if args.a is not None:
        return args.a
    a = int(math.floor(n ** (1 / s) / args.D))
    if a < 1:
        raise ValidationError("floor(n^(1/s)/D) = 0: increase --n or decrease --D")
    return a


def cmd_trace_bd(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    _need_seed(args)
    if args.n is None or args.n < 1:
        raise ValidationError("--n (ladder index of the target) is required")
    s, _ = _exponent(dist)
    a = _scale_a(args, s, args.n)
    Kc = -(-args.n // a)
    rep.set("n", args.n)
    rep.set("a", a)
    rep.set("D", args.D)
    reach = (Kc + 2) * a
    win, dec = E.sample_q_window(dist, reach, reach, _rng(args, 0))
    tr = X.birth_death_trace(win, dec, a, args.n, _rng(args, 1))
    th = tr.theta
    rep.set("N", tr.n_exit)
    rep.set("N_tilde", tr.n_tilde)
    rep.set("T_target", tr.t_target)
    rep.set("sum_theta_to_N", int(th[: tr.n_exit].sum()))
    left = np.diff(tr.z) < 0
    rep.set("left_step_frequency", float(left.mean()) if left.size else 0.0)
    rows = [(i, int(tr.z[i]), int(tr.times[i]), int(th[i - 1]) if i else 0) for i in range(tr.z.size)]
    rep.table(("i", "Z", "time", "theta"), rows)


def cmd_hills(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    if args.n is None or args.n < 2:
        raise ValidationError("--n must be at least 2")
    s, _ = _exponent(dist)
    win, dec = _q_window(args, dist, rep)
    a = _scale_a(args, s, args.n)
    rep.set("n", args.n)
    rep.set("eps", args.eps)
    rep.set("a", a)
    rep.set("s", s)
    big = X.classify_hills(dec, args.n, s, args.eps)
    thr = args.n ** ((1 - args.eps) / s)
    rep.table(("n", "threshold", "blocks", "big", "small", "big_fraction", "multi_hill_fraction"),
              [(args.n, thr, big.size, int(big.sum()), int(big.size - big.sum()), float(big.mean()),
                X.multi_hill_fraction(big, a))])


def cmd_tail_hill(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    chk = dist.validate(warn=False)
    win, dec = _q_window(args, dist, rep, left=64 if args.quantity == "beta" else 0)
    rep.set("quantity", args.quantity)
    rep.set("top_fraction", args.top)
    if args.quantity == "M":
        est = X.hill_tail_estimate(dec.heights, args.top, chk.lattice_step)
    else:
        est = X.hill_tail_estimate(Qx.block_betas(win, dec)[dec.origin_block:], args.top)
    rep.set("s", E.solve_s(dist))
    rep.table(("quantity", "index", "ci_low", "ci_high", "k", "threshold", "lattice_step"),
              [(args.quantity, est.index, est.ci_low, est.ci_high, est.k, est.threshold, est.lattice_step)])


def cmd_truncated_sums(args, rep):
    dist = _dist(args)
    _describe(rep, args, dist)
    _need_seed(args)
    if args.n is None or args.n < 3:
        raise ValidationError("--n must be at least 3")
    _positive("reps", args.reps)
    s, _ = _exponent(dist)
    n = args.n
    a_n = max(1, int(math.floor(n ** args.eta1)))
    b_n = n ** args.eta2
    c_n = max(1, int(math.floor(math.log(n) ** 2)))
    q = X.estimate_q_means(dist, args.blocks or 10**5, _rng(args, 1))
    for k, v in (("n", n), ("eta1", args.eta1), ("eta2", args.eta2), ("a_n", a_n), ("b_n", b_n), ("c_n", c_n),
                 ("eps", args.eps), ("reps", args.reps), ("beta_bar", q.beta), ("beta_bar_se", q.beta_se)):
        rep.set(k, v)
    ss = np.random.SeedSequence(args.seed, spawn_key=(2,)).spawn(args.reps)
    rows, exceed = [], 0
    for r, sq in enumerate(ss):
        win, dec = E.sample_q_window(dist, c_n + 1, a_n + 1, np.random.default_rng(sq))
        t = X.truncated_sum_stats(win, dec, n, a_n, b_n, c_n, q.beta, s)
        hit = t.centered > args.eps * a_n
        exceed += hit
        rows.append((r, t.centered, t.trunc_diff, t.trunc_diff_closed, t.zeta_sum, t.psi_sum, t.second_moment,
                     t.regime, t.predicted_growth, hit))
    rep.set("exceedance_frequency", exceed / args.reps)
    rep.table(("rep", "centered", "trunc_diff", "trunc_diff_closed", "zeta_sum", "psi_sum", "second_moment",
               "regime", "predicted_growth", "exceeds"), rows)


def cmd_scan(args, rep):
    dist = _dist(args)
    over: Dict = {}
    if args.config:
        over.update(load_scan_config(args.config))
        rep.set("config", args.config)
    flags = {"m": args.m, "D": args.D_scan, "D0": args.D0, "delta": args.delta, "u": args.u, "eps": args.eps_scan,
             "eps1": args.eps1, "mc_reps": args.reps, "seed": args.seed, "q_blocks": args.blocks}
    over.update({k: v for k, v in flags.items() if v is not None})
    if args.k_max is not None:
        over["k_range"] = tuple(range(args.k_max + 1))
    if args.n_max is not None:
        lo, _, r = over.get("n_grid") or S.ScanConfig.n_grid
        over["n_grid"] = (lo, args.n_max, r)
    if args.no_grid:
        over["n_grid"] = None
    over["workers"] = args.workers
    for k in ("k_range", "n_grid"):
        if over.get(k) is not None:
            over[k] = tuple(over[k])
    cfg = replace(S.ScanConfig(), **over)
    args.seed = cfg.seed
    _need_seed(args)
    rep.set("dist", dist.name)
    rep.set("omegas", list(dist.omegas))
    rep.set("weights", list(dist.weights))
    res, records = S.oscillation_scan(dist, cfg)
    for k, v in S.config_items(res):
        rep.set(k, v)
    rep.set("consistent", all(r.consistent for r in records))
    rep.set("ex1_scales", [r.n for r in records if r.cond_ex1])
    rep.table(S.COLUMNS, [r.row() for r in records])


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dist", default="canonical2pt", help="named law (canonical2pt, canonical3pt)")
    common.add_argument("--dist-file", help="YAML file with name and (omega, weight) atoms")
    common.add_argument("--seed", type=int, help="seed for every random stream (required when sampling)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="rwre", description="Quenched slowdown toolkit for 1-d random walks "
                                "in i.i.d. random environment.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn: Callable, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    add("solve-s", cmd_solve_s, "tail exponent s with E[rho^s] = 1")
    add("speed", cmd_speed, "asymptotic speed v = (1 - E rho) / (1 + E rho)")

    sp = add("sample-env", cmd_sample_env, "sample and write an environment window")
    sp.add_argument("--len", type=int, default=100)
    sp.add_argument("--m", type=int, help="reflection site for i.i.d. windows")
    sp.add_argument("--blocks", type=int, help="sample this many Q-blocks to the right of 0 instead")

    sp = add("ladder", cmd_ladder, "ladder points and block heights")
    sp.add_argument("--len", type=int, default=100)
    sp.add_argument("--blocks", type=int)
    sp.add_argument("--env-file")

    sp = add("beta", cmd_beta, "block crossing means with full and truncated reflection")
    sp.add_argument("--blocks", type=int, default=100)
    sp.add_argument("--c", type=int, default=1, help="blocks of left context for the truncated value")

    for name, fn, h in (("mgf", cmd_mgf, "exact hitting-time MGF, recursion and linear solve"),
                        ("mgf-bound", cmd_mgf_bound, "exact MGF against its closed-form upper bound")):
        sp = add(name, fn, h)
        sp.add_argument("--len", type=int, default=10)
        sp.add_argument("--lambda", dest="lam", type=float, default=0.05)
        sp.add_argument("--k0", type=int)
        sp.add_argument("--env-file")

    sp = add("exit-prob", cmd_exit_prob, "P^x(T_b < T_a)")
    sp.add_argument("--len", type=int, default=10)
    sp.add_argument("--a", type=int)
    sp.add_argument("--x", type=int)
    sp.add_argument("--b", type=int)
    sp.add_argument("--env-file")

    sp = add("first-passage", cmd_first_passage, "exact survival function of a hitting time")
    sp.add_argument("--len", type=int, default=10)
    sp.add_argument("--n", type=int, help="horizon; default extends until the mass is negligible")
    sp.add_argument("--start", type=int)
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--env-file")

    sp = add("slowdown", cmd_slowdown, "P(X_n < v n), exact and optionally by Monte Carlo")
    sp.add_argument("--n", type=int)
    sp.add_argument("--v", type=float, help="speed threshold (default v_alpha / 2)")
    sp.add_argument("--reps", type=int, default=0)

    sp = add("trace-bd", cmd_trace_bd, "coarse birth-death trace of one walk")
    sp.add_argument("--n", type=int)
    sp.add_argument("--D", type=float, default=1.2)
    sp.add_argument("--a", type=int, help="super-block size (default floor(n^(1/s)/D))")

    sp = add("hills", cmd_hills, "big and small hill counts at scale n")
    sp.add_argument("--n", type=int)
    sp.add_argument("--eps", type=float, default=0.2)
    sp.add_argument("--blocks", type=int, default=10**4)
    sp.add_argument("--D", type=float, default=1.2)
    sp.add_argument("--a", type=int)

    sp = add("tail-hill", cmd_tail_hill, "Hill estimate of the block-height or crossing-mean tail")
    sp.add_argument("--blocks", type=int, default=10**5)
    sp.add_argument("--quantity", choices=("M", "beta"), default="M")
    sp.add_argument("--top", type=float, default=0.01)

    sp = add("truncated-sums", cmd_truncated_sums, "truncated block-sum statistics over many environments")
    sp.add_argument("--n", type=int)
    sp.add_argument("--reps", type=int, default=100)
    sp.add_argument("--eta1", type=float, default=1.0, help="a_n = floor(n^eta1)")
    sp.add_argument("--eta2", type=float, default=0.25, help="b_n = n^eta2")
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--blocks", type=int, help="blocks for the Q-mean estimate (default 1e5)")

    sp = add("scan", cmd_scan, "oscillation scan over scales in one environment")
    sp.add_argument("--config", help="YAML file of scan settings; flags override it")
    sp.add_argument("--m", type=int)
    sp.add_argument("--k-max", type=int)
    sp.add_argument("--D", dest="D_scan", type=float)
    sp.add_argument("--D0", type=float)
    sp.add_argument("--eps", dest="eps_scan", type=float)
    sp.add_argument("--eps1", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--u", type=float)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--blocks", type=int, help="blocks for the Q-mean estimate")
    sp.add_argument("--n-max", type=int, help="largest n on the comparison grid")
    sp.add_argument("--no-grid", action="store_true")
    return p


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.workers < 1:
        print("error: --workers must be positive", file=stderr)
        return EXIT_INVALID
    rep = Report(args.command)
    rep.body = ""
    try:
        args.func(args, rep)
        text = _render(rep)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            stdout.write(text)
    except _INVALID as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    except _NUMERIC as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (OSError, yaml.YAMLError) as exc:
        print(f"I/O error: {exc}", file=stderr)
        return EXIT_IO
    except RWREError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_INVALID
    return EXIT_OK


def _render(rep: Report) -> str:
    raw = [v for k, v in rep.items if k == "__raw__"]
    rep.items = [(k, v) for k, v in rep.items if k != "__raw__"]
    head = "".join(r + "\n" for r in raw)
    return head + rep.render() + rep.body


def main() -> None:
    sys.exit(run())
