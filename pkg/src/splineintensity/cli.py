"""Command-line entry point: simulate, fit, summarize, distances, thin."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .data import (
    DataLayout,
    bin_events,
    load_counts,
    load_events,
    thin_counts,
    write_counts,
    write_events,
)
from .formats import header, read_chain, suffixed, write_chain, write_rows
from .metrics import all_distances
from .model import BinnedLikelihood, FlatLikelihood, PathLikelihood
from .prior import PriorConfig, sample_prior
from .sampler import MOVES, MoveSchedule, Posterior, fit_init, flat_init, run_chain
from .simulate import simulate_path
from .summary import band, dim_trace, knot_histogram

log = logging.getLogger("splineintensity")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# intensity specs


class _Constant:
    def __init__(self, c: float):
        self.c = c

    def __call__(self, t):
        return np.full(np.shape(t), self.c, dtype=float)


class _Sine:
    def __init__(self, a: float, b: float, period: float):
        self.a, self.b, self.period = a, b, period

    def __call__(self, t):
        return self.a + self.b * np.sin(2 * np.pi * np.asarray(t, dtype=float) / self.period)


def parse_intensity(spec: str, period: float):
    """``constant:c``, ``sine:a,b`` or ``spline:PATH[@k]`` (k-th draw of a chain dump, default last).

    Returns ``(intensity, natural_bound)``; the bound is None for splines.
    """
    kind, _, arg = spec.partition(":")
    try:
        if kind == "constant":
            c = float(arg)
            return _Constant(c), c
        if kind == "sine":
            a, b = (float(v) for v in arg.split(","))
            return _Sine(a, b, period), a + abs(b)
    except ValueError:
        raise UsageError(f"cannot parse intensity spec {spec!r}") from None
    if kind in ("spline", "dump"):
        path, _, k = arg.partition("@")
        draws, _ = read_chain(path)
        state = draws[int(k) if k else -1].state
        if state.period != period:
            raise UsageError(f"spline period {state.period} != --period {period}")
        return state, None
    raise UsageError(f"unknown intensity spec {spec!r}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    lam, natural = parse_intensity(args.intensity, args.period)
    bound = args.bound if args.bound is not None else natural
    if bound is None:
        raise UsageError("--bound is required for spline intensities")
    if bound == 0:
        bound = 1.0  # zero intensity: every candidate is rejected
    rng = np.random.default_rng(args.seed)
    ep = simulate_path(lam, bound, args.days, rng, args.period, args.bins)
    config = dict(vars(args), command="simulate", bound=bound)
    write_events(args.out, ep, header(_clean(config)))
    if args.counts_out:
        write_counts(args.counts_out, bin_events(ep), header(_clean(config)))
    print(f"events: {len(ep.times)}")
    return 0


def _clean(config: dict) -> dict:
    return {k: v for k, v in config.items() if k != "func"}


def _build(args):
    if args.counts and args.events:
        raise UsageError("use only one of --counts and --events")
    cfg = PriorConfig(args.order, args.mu, args.m1, args.m2, args.period)
    schedule = MoveSchedule(args.pa, args.pb, args.order, args.mu)
    if args.prior_only:
        lik = FlatLikelihood()
    elif args.counts:
        if args.days is None:
            raise UsageError("--days is required with --counts")
        lik = BinnedLikelihood(load_counts(args.counts, DataLayout(args.period, args.bins, args.days)))
    elif args.events:
        lik = PathLikelihood(load_events(args.events, args.period, args.bins, args.days))
    else:
        raise UsageError("one of --counts, --events or --prior-only is required")
    return Posterior(cfg, lik), schedule


def _run_one(args, seed_seq, out):
    post, schedule = _build(args)
    rng = np.random.default_rng(seed_seq)
    init = args.init
    if init == "flat":
        state = flat_init(post.prior, post.likelihood.mean_rate())
    elif init == "fit":
        if args.prior_only:
            raise UsageError("--init fit needs data")
        state = fit_init(post)
    else:
        state = sample_prior(post.prior, rng)
    chain = run_chain(post, schedule, state, args.iters, args.burnin, args.thin, rng, args.sigma, args.window)
    write_chain(out, chain.draws, _clean(vars(args)))
    return chain


def cmd_fit(args) -> int:
    if args.init_flat:
        args.init = "flat"
    config = _clean(vars(args))
    if args.dump_config:
        print(json.dumps(config, sort_keys=True))
        return 0
    _build(args)  # validate before spawning workers
    if args.chains == 1:
        chains = [_run_one(args, args.seed, args.out)]
        outs = [args.out]
    else:
        seeds = np.random.SeedSequence(args.seed).spawn(args.chains)
        outs = [suffixed(args.out, i) for i in range(args.chains)]
        with ProcessPoolExecutor(max_workers=args.chains) as pool:
            chains = list(pool.map(_run_one, [args] * args.chains, seeds, outs))
    for out, chain in zip(outs, chains):
        print(f"chain {out}: final sigma {chain.sigma!r}")
        print("move,proposed,accepted,rate")
        for k in MOVES:
            p, a = chain.proposed[k], chain.accepted[k]
            print(f"{k},{p},{a},{a / p if p else 0.0:.4f}")
    return 0


def cmd_summarize(args) -> int:
    draws, config = read_chain(args.chain)
    conf = dict(config, summarize=_clean(vars(args)))
    b = band(draws, args.grid, args.level)
    write_rows(
        f"{args.out_prefix}_band.csv",
        ["t", "mean", "lower", "upper"],
        zip(b.grid, b.mean, b.lower, b.upper),
        conf,
    )
    h = knot_histogram(draws, args.bins)
    write_rows(
        f"{args.out_prefix}_knots.csv",
        ["bin_left", "bin_right", "count"],
        ((lo, hi, int(c)) for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts)),
        conf,
    )
    tr = dim_trace(draws)
    write_rows(f"{args.out_prefix}_trace.csv", ["iter", "j"], zip(tr.iterations, tr.dims), conf)
    print("move,proposed,accepted,rate")
    for k in MOVES:
        print(f"{k},{tr.proposed[k]},{tr.accepted[k]},{tr.rates[k]:.4f}")
    return 0


def cmd_distances(args) -> int:
    a, _ = parse_intensity(args.a, args.period)
    b, _ = parse_intensity(args.b, args.period)
    d = all_distances(a, b, DataLayout(args.period, args.bins, 1))
    print(",".join(d))
    print(",".join(repr(v) for v in d.values()))
    return 0


def cmd_thin(args) -> int:
    bc = load_counts(args.counts, DataLayout(args.period, args.bins, args.days))
    thinned = thin_counts(bc, args.target, np.random.default_rng(args.seed))
    write_counts(args.out, thinned, header(_clean(dict(vars(args), command="thin"))))
    print(f"counts: {bc.total} -> {thinned.total}")
    return 0


# ---------------------------------------------------------------------------


def _layout_flags(p, bins_default, days_required=False):
    p.add_argument("--period", type=float, default=24.0, help="period T in hours (default 24)")
    p.add_argument("--bins", type=int, default=bins_default, help="bins per period m")
    p.add_argument("--days", type=int, required=days_required, default=None, help="number of periods n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splineintensity", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate event times by thinning")
    p.add_argument("intensity", help="constant:c | sine:a,b | spline:DUMP[@k]")
    _layout_flags(p, 1, days_required=True)
    p.add_argument("--bound", type=float, help="dominating rate (required for splines)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="events CSV")
    p.add_argument("--counts-out", help="also write binned counts CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the reversible-jump sampler")
    p.add_argument("--counts", help="counts CSV (day,bin,count)")
    p.add_argument("--events", help="events CSV (time)")
    _layout_flags(p, 2880)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--mu", type=float, default=10.0, help="prior mean dimension")
    p.add_argument("--m1", type=float, default=200.0, help="lower coefficient bound")
    p.add_argument("--m2", type=float, default=20000.0, help="upper coefficient bound")
    p.add_argument("--pa", type=float, default=0.3, help="perturb probability")
    p.add_argument("--pb", type=float, default=0.3, help="knot-move probability")
    p.add_argument("--iters", type=int, default=200000)
    p.add_argument("--burnin", type=int, default=100000)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=None, help="initial random-walk scale")
    p.add_argument("--window", type=int, default=100, help="perturb proposals per adaptation window")
    p.add_argument("--prior-only", action="store_true", help="ignore the data; sample the prior")
    p.add_argument("--init", choices=["prior", "flat", "fit"], default="prior")
    p.add_argument("--init-flat", action="store_true", help="same as --init flat")
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--out", default="chain.csv")
    p.add_argument("--dump-config", action="store_true", help="print the resolved configuration and exit")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("summarize", help="bands, knot histogram and trace from a chain dump")
    p.add_argument("chain")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--bins", type=int, default=96, help="knot histogram bins")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("distances", help="distances between two intensities")
    p.add_argument("a", help="constant:c | sine:a,b | dump:DUMP[@k]")
    p.add_argument("b")
    p.add_argument("--period", type=float, default=24.0)
    p.add_argument("--bins", type=int, default=288, help="bins for rho")
    p.set_defaults(func=cmd_distances)

    p = sub.add_parser("thin", help="keep each counted event independently")
    p.add_argument("--counts", required=True)
    _layout_flags(p, 2880, days_required=True)
    p.add_argument("--target", type=int, required=True, help="expected retained total")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_thin)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
