"""Command-line interface.

Subcommands: ``simulate``, ``evaluate``, ``compare`` and ``study``.
Exit codes: 0 success, 2 usage or schema error, 3 I/O error, 4 study failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from .asympcs import AsympCSParams, choose_rho, prefixes, watch_asympcs_difference
from .core import ACCURACY_RANGE, summarize
from .crossfit import NuisanceEstimates, crossfit_nuisances
from .errors import CFScoreError, StudyRunError
from .estimators import (
    METHODS,
    estimate,
    estimate_condessa,
    estimate_difference,
    two_sided_test,
)
from .io import make_manifest, read_paired_csv, read_single_csv, write_paired_csv, write_single_csv
from .nuisance import PROFILES, ClipBounds, nuisance_profile
from .simulation import SCENARIOS, SimConfig, simulate_paired
from .studies import KINDS, StudyConfig, run_study

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_STUDY = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _emit(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json_default(o):
    if isinstance(o, (np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not serializable: {type(o)}")


def _add_fit_flags(p, folds_default=5):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--folds", type=int, default=folds_default)
    p.add_argument("--nuisance", choices=PROFILES, default="super_learner")
    p.add_argument("--clip-lo", type=float, default=0.01)
    p.add_argument("--clip-hi", type=float, default=0.99)
    p.add_argument("--score-range", type=float, nargs=2, metavar=("LO", "HI"),
                   default=list(ACCURACY_RANGE))
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="cfscore",
                                     description="Counterfactual evaluation of abstaining classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a synthetic paired log")
    p.add_argument("--scenario", choices=SCENARIOS, default="paper_ab")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.15)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--delta-band", type=float, default=0.17)
    p.add_argument("--mu", type=float, default=0.0, help="boundary shift for power_linear")
    p.add_argument("--score-rule", choices=("accuracy", "brier"), default="accuracy")
    p.add_argument("--mc-n", type=int, default=1_000_000)
    p.add_argument("--arm", choices=("a", "b"), action="append", default=[],
                   help="also export this arm as a single-classifier file")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("evaluate", help="estimate one classifier's counterfactual score")
    p.add_argument("input")
    p.add_argument("--method", choices=METHODS + ("all",), default="all")
    p.add_argument("--pi-override", type=float, default=None,
                   help="use this constant propensity instead of a fitted one")
    _add_fit_flags(p)

    p = sub.add_parser("compare", help="compare two classifiers on a paired log")
    p.add_argument("input")
    p.add_argument("--method", choices=METHODS + ("all",), default="dr")
    p.add_argument("--watch", action="store_true", help="emit a confidence sequence per batch")
    p.add_argument("--batch", type=int, default=500)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--n-opt", type=int, default=1000, help="sample size at which rho is tuned")
    _add_fit_flags(p)

    p = sub.add_parser("study", help="run a Monte Carlo study")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", required=True, help="JSON study configuration")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=None, help="override base_seed")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _clip(args):
    try:
        return ClipBounds(args.clip_lo, args.clip_hi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fit_config(args):
    return {"alpha": args.alpha, "folds": args.folds, "nuisance": args.nuisance,
            "clip": [args.clip_lo, args.clip_hi], "score_range": list(args.score_range),
            "method": args.method}


def cmd_simulate(args):
    try:
        cfg = SimConfig(n=args.n, noise=args.noise, epsilon=args.epsilon, delta_band=args.delta_band,
                        mu_shift=args.mu, scenario=args.scenario, seed=args.seed,
                        score_rule=args.score_rule)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    pds, truth = simulate_paired(cfg, mc_n=args.mc_n)
    os.makedirs(args.out, exist_ok=True)
    write_paired_csv(os.path.join(args.out, "paired.csv"), pds)
    for arm in args.arm:
        write_single_csv(os.path.join(args.out, f"arm_{arm}.csv"), pds.arm(arm))
    manifest = make_manifest("simulate", cfg.to_dict(), cfg.seed)
    _emit({**truth.to_dict(), "manifest": manifest}, os.path.join(args.out, "truth.json"))
    return EXIT_OK


def _methods(method):
    return METHODS if method == "all" else (method,)


def cmd_evaluate(args):
    ds, expert = read_single_csv(args.input, tuple(args.score_range))
    clip = _clip(args)
    pi_spec, mu_spec = nuisance_profile(args.nuisance, args.seed)
    nuis = crossfit_nuisances(ds, pi_spec, mu_spec, K=args.folds, clip=clip, seed=args.seed)
    if args.pi_override is not None:
        if not 0.0 <= args.pi_override < 1.0:
            raise UsageError("--pi-override must lie in [0, 1)")
        nuis = NuisanceEstimates.fixed(np.full(ds.n, args.pi_override), nuis.mu0_hat)
    reports = {m: estimate(m, ds, nuis, args.alpha) for m in _methods(args.method)}
    summ = summarize(ds)
    out = {
        "summary": {"n": summ.n, "coverage": summ.coverage,
                    "selective_score": summ.selective_score if summ.selective_score_defined else None,
                    "abstentions": summ.abstention_count},
        "estimates": {m: r.to_dict() for m, r in reports.items()},
        "nuisance": nuis.diagnostics(),
    }
    lo, hi = ds.score_range
    if lo >= 0.0 and hi <= 1.0:
        base = reports.get("dr") or next(iter(reports.values()))
        out["condessa"] = estimate_condessa(ds, base, expert).to_dict()
    out["manifest"] = make_manifest("evaluate", {**_fit_config(args), "pi_override": args.pi_override},
                                    args.seed, [args.input])
    _emit(out, args.out)
    return EXIT_OK


def _watch_lines(args, pds):
    if args.batch < 1:
        raise UsageError("--batch must be positive")
    rho = args.rho if args.rho is not None else choose_rho(args.n_opt, args.alpha)
    params = AsympCSParams(rho, args.alpha)
    pi_spec, mu_spec = nuisance_profile(args.nuisance, args.seed)
    stream = watch_asympcs_difference(prefixes(pds, args.batch), pi_spec, mu_spec, params,
                                      K=args.folds, clip=_clip(args), seed=args.seed)
    manifest = make_manifest("compare", {**_fit_config(args), "watch": True, "batch": args.batch,
                                         "rho": rho}, args.seed, [args.input])
    fh = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8", newline="\n")
    try:
        fh.write(json.dumps({"manifest": manifest}, sort_keys=True) + "\n")
        for point in stream:
            fh.write(json.dumps(point.to_dict(), sort_keys=True) + "\n")
            fh.flush()
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_compare(args):
    pds = read_paired_csv(args.input, tuple(args.score_range))
    if args.watch:
        return _watch_lines(args, pds)
    clip = _clip(args)
    pi_spec, mu_spec = nuisance_profile(args.nuisance, args.seed)
    na = crossfit_nuisances(pds.a, pi_spec, mu_spec, K=args.folds, clip=clip, seed=args.seed)
    nb = crossfit_nuisances(pds.b, pi_spec, mu_spec, K=args.folds, clip=clip, seed=args.seed,
                            folds=na.folds)
    results = {}
    for m in _methods(args.method):
        cr = estimate_difference(pds, na, nb, args.alpha, method=m)
        results[m] = {**cr.to_dict(), "decision": two_sided_test(cr).to_dict()}
    out = results[args.method] if args.method != "all" else {"comparisons": results}
    out["nuisance"] = {"a": na.diagnostics(), "b": nb.diagnostics()}
    out["manifest"] = make_manifest("compare", _fit_config(args), args.seed, [args.input])
    _emit(out, args.out)
    return EXIT_OK


GRID_KEYS = {"miscoverage": (), "power": ("mu_grid", "n_grid"), "positivity": ("epsilon_grid",)}


def load_study_config(path, kind):
    """Parse a JSON study document into ``(StudyConfig, grids)``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise UsageError("study config must be a JSON object")
    grids = {}
    for key in GRID_KEYS[kind]:
        if key not in doc:
            raise UsageError(f"{kind} study config needs {key!r}")
        grids[key] = list(doc.pop(key))
    try:
        return StudyConfig.from_dict(doc), grids
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad study config: {exc}") from None


def cmd_study(args):
    cfg, grids = load_study_config(args.config, args.kind)
    changes = {"workers": max(1, args.threads)}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    cfg = cfg.replace(**changes)
    result = run_study(args.kind, cfg, **grids)
    result.extra["manifest"] = make_manifest("study", {**cfg.to_dict(), **grids, "kind": args.kind},
                                             cfg.base_seed, [args.config])
    result.write(args.out)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "evaluate": cmd_evaluate, "compare": cmd_compare,
            "study": cmd_study}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StudyRunError as exc:
        print(f"study failed: {exc}", file=sys.stderr)
        return EXIT_STUDY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CFScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
