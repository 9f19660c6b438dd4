"""Command-line front end.

Subcommands:

* ``build``   -- graft sticks (from JSON or a sampled law) and write the
  forest table and contour polyline as CSV;
* ``verify``  -- run the walk/spine/forest cross-checks on random forests
  and report any counterexamples as JSON;
* ``renewal`` -- Monte Carlo diagnostics for a law's renewal quantities;
* ``couple``  -- replay the two-walk coupling and count violations;
* ``scale``   -- run a scaling experiment grid and write rows + summary.

Exit status: 0 on success, 1 when a requested check finds a violation,
2 on bad input or arguments.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

import numpy as np

from . import __version__
from .forest import build_forest, contour_path, write_contour_csv, write_forest_csv
from .measures import sticks_from_json, sticks_to_json
from .spine import IdentityReport, verify_identities
from .stochastic import (
    ExperimentConfig,
    mean_age_integral_mc,
    parse_config,
    parse_law,
    random_verification_law,
    run_coupling_many,
    sample_ladder_stats,
    sample_vhat,
    sample_ystars,
    scaling_experiment,
    summarize_coupling,
)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _cmd_build(args) -> int:
    if (args.input is None) == (args.law is None):
        print("build: need exactly one of --input or --law", file=sys.stderr)
        return 2
    if args.input is not None:
        sticks = sticks_from_json(_read_text(args.input))
    else:
        law = parse_law(args.law)
        if args.seed is None:
            print("build: --law needs --seed", file=sys.stderr)
            return 2
        sticks = law.sample_batch(_rng(args.seed), args.n).to_sticks()
    forest = build_forest(sticks)
    if args.sticks_out:
        with open(args.sticks_out, "w", encoding="utf-8") as fh:
            fh.write(sticks_to_json(sticks) + "\n")
    out, close = _open_out(args.forest_out)
    try:
        write_forest_csv(forest, out)
    finally:
        if close:
            out.close()
    if args.contour_out:
        path = contour_path(forest)
        with open(args.contour_out, "w", encoding="utf-8", newline="") as fh:
            write_contour_csv(path, fh)
    if not args.quiet:
        print(
            f"built {forest.n_sticks} sticks, {forest.tree_count} trees,"
            f" final height {forest.terminal_height:.6g}",
            file=sys.stderr,
        )
    return 0


def _cmd_verify(args) -> int:
    rng = _rng(args.seed)
    report = IdentityReport()
    if args.input is not None:
        sticks = sticks_from_json(_read_text(args.input))
        report.merge(verify_identities(sticks, max_pairs=args.pairs, rng=rng))
    else:
        for _ in range(args.forests):
            law = random_verification_law(rng)
            n = int(rng.integers(3, args.max_sticks + 1))
            sticks = law.sample_batch(rng, n).to_sticks()
            report.merge(verify_identities(sticks, max_pairs=args.pairs, rng=rng))
    doc = report.to_json()
    json.dump(doc, sys.stdout, indent=2)
    print()
    return 0 if report.ok else 1


def _cmd_renewal(args) -> int:
    law = parse_law(args.law)
    rng = _rng(args.seed)
    ys = sample_ystars(law, rng, args.draws)
    mc_mean, mc_se = mean_age_integral_mc(law, rng, args.draws)
    stats = sample_ladder_stats(law, rng, min(args.draws, 10000), step_cap=args.step_cap)
    acc = stats.tau[stats.accepted]
    vh = sample_vhat(law, rng, args.draws)
    doc = {
        "law": law.describe(),
        "uniform_atom_age": {
            "mc_mean": float(ys.mean()),
            "mc_se": float(ys.std(ddof=1) / math.sqrt(len(ys))),
        },
        "age_integral": {"mc_mean": mc_mean, "mc_se": mc_se},
        "ladder": {
            "acceptance_rate": stats.acceptance_rate(),
            "mean_tau_accepted": float(acc.mean()) if acc.size else None,
            "step_cap": args.step_cap,
        },
        "stationary_overshoot_mean": float(np.mean(vh)),
    }
    json.dump(doc, sys.stdout, indent=2)
    print()
    return 0


def _cmd_couple(args) -> int:
    law = parse_law(args.law)
    rng = _rng(args.seed)
    results = run_coupling_many(
        law,
        args.eps,
        args.t,
        args.m,
        rng,
        args.replicas,
        meet_budget=args.budget,
        walk_budget=args.budget,
    )
    doc = summarize_coupling(results)
    doc["law"] = law.describe()
    doc["eps"] = args.eps
    doc["t"] = args.t
    doc["m"] = args.m
    violations = [
        {"replica": i, "mismatches": r.mismatches}
        for i, r in enumerate(results)
        if r.status == "violated"
    ]
    if violations:
        doc["violations"] = violations
    json.dump(doc, sys.stdout, indent=2)
    print()
    return 1 if violations else 0


def _cmd_scale(args) -> int:
    if args.config is not None:
        config = parse_config(_read_text(args.config))
    else:
        if args.law is None or args.p is None:
            print("scale: need --config, or --law and --p", file=sys.stderr)
            return 2
        config = ExperimentConfig(
            law=args.law,
            p_values=tuple(int(x) for x in args.p.split(",")),
            times=tuple(float(x) for x in args.times.split(",")),
            replicates=args.replicates,
            seed=args.seed,
        )
    result = scaling_experiment(config, workers=args.workers)
    out, close = _open_out(args.out)
    try:
        result.write_csv(out)
    finally:
        if close:
            out.close()
    if args.summary_out:
        with open(args.summary_out, "w", encoding="utf-8") as fh:
            json.dump(result.summary(), fh, indent=2)
            fh.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chronoforest",
        description="grafted stick forests: heights, contours, walks, couplings",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="graft sticks and write forest/contour CSV")
    p_build.add_argument("--input", help="sticks JSON file ('-' for stdin)")
    p_build.add_argument("--law", help="law spec to sample sticks from")
    p_build.add_argument("--n", type=int, default=100, help="sticks to sample with --law")
    p_build.add_argument("--seed", type=int, help="seed for --law sampling")
    p_build.add_argument("--forest-out", help="forest CSV path (default stdout)")
    p_build.add_argument("--contour-out", help="contour polyline CSV path")
    p_build.add_argument("--sticks-out", help="write the (possibly sampled) sticks as JSON")
    p_build.add_argument("--quiet", action="store_true")
    p_build.set_defaults(func=_cmd_build)

    p_verify = sub.add_parser("verify", help="cross-check walk/spine/forest identities")
    p_verify.add_argument("--input", help="sticks JSON file to verify instead of random draws")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--forests", type=int, default=20)
    p_verify.add_argument("--max-sticks", type=int, default=60)
    p_verify.add_argument("--pairs", type=int, default=40, help="index pairs per forest")
    p_verify.set_defaults(func=_cmd_verify)

    p_renewal = sub.add_parser("renewal", help="Monte Carlo renewal diagnostics for a law")
    p_renewal.add_argument("--law", required=True)
    p_renewal.add_argument("--seed", type=int, required=True)
    p_renewal.add_argument("--draws", type=int, default=20000)
    p_renewal.add_argument("--step-cap", type=int, default=1_000_000)
    p_renewal.set_defaults(func=_cmd_renewal)

    p_couple = sub.add_parser("couple", help="replay the stationarity coupling")
    p_couple.add_argument("--law", required=True)
    p_couple.add_argument("--eps", type=float, required=True)
    p_couple.add_argument("--t", type=float, required=True)
    p_couple.add_argument("--m", type=int, default=3)
    p_couple.add_argument("--replicas", type=int, default=100)
    p_couple.add_argument("--seed", type=int, required=True)
    p_couple.add_argument("--budget", type=int, default=200_000)
    p_couple.set_defaults(func=_cmd_couple)

    p_scale = sub.add_parser("scale", help="run a scaling experiment grid")
    p_scale.add_argument("--config", help="config file of key = value lines")
    p_scale.add_argument("--law", help="law spec (inline config)")
    p_scale.add_argument("--p", help="comma-separated population sizes")
    p_scale.add_argument("--times", default="0.5,1.0")
    p_scale.add_argument("--replicates", type=int, default=20)
    p_scale.add_argument("--seed", type=int, default=0)
    p_scale.add_argument("--workers", type=int, default=1)
    p_scale.add_argument("--out", help="rows CSV path (default stdout)")
    p_scale.add_argument("--summary-out", help="summary JSON path")
    p_scale.set_defaults(func=_cmd_scale)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
