"""Command-line front end.

Subcommands::

    graphequiv presets
    graphequiv distance  (--preset NAME | --spec-a A --spec-b B | --p P --q Q) [--n-grid ...]
    graphequiv criteria  (--preset NAME | --spec-a A --spec-b B) [--conditions ...] [--seed S]
    graphequiv couple    --mode {edgewise,edge_count} --seed S ...
    graphequiv accept    [--only NAMES] [--seed S]

Model spec files are JSON; their format is described in
:mod:`graphequiv.specs`.  Exit codes: 0 ok, 2 parse error, 3 infeasible
request, 4 inconclusive verdict under ``--strict``, 5 acceptance failure.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .coupling import InfeasibleError
from .criteria import CONDITIONS, GeneratorError, SequencePair, Tolerances
from .measures import N_MAX_ENUM, EnumerationTooLarge, ProbPair
from .models import ModelError
from .reports import DEFAULT_C_GRID, Report, Source, couple_report, criteria_report, distance_report
from .specs import PRESETS, SpecError, load_model_spec, preset, specs_sequence

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_INCONCLUSIVE, EXIT_ACCEPT = 0, 2, 3, 4, 5


class UsageError(ValueError):
    pass


def _int_list(text):
    try:
        vals = [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}")
    if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("grid must be a nonempty strictly increasing list")
    return vals


def _float_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _seed(text):
    try:
        s = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return s


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        value = float(value)
    except ValueError:
        pass
    return key, value


def _add_source(sp, inline=False):
    g = sp.add_argument_group("model source")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--param", type=_param, action="append", default=[],
                   help="preset parameter key=value (repeatable)")
    g.add_argument("--spec-a", help="JSON model spec for the first measure")
    g.add_argument("--spec-b", help="JSON model spec for the second measure")
    if inline:
        g.add_argument("--p", type=_float_list, help="inline left probabilities (comma list)")
        g.add_argument("--q", type=_float_list, help="inline right probabilities (comma list)")


def _add_output(sp):
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", default="-", help="output path, '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphequiv", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("presets", help="list built-in example families")

    sp = sub.add_parser("distance", help="rho-sum, Hellinger and total variation bounds")
    _add_source(sp, inline=True)
    sp.add_argument("--n-grid", type=_int_list)
    sp.add_argument("--seed", type=_seed)
    sp.add_argument("--nmax-enum", type=int, default=N_MAX_ENUM)
    sp.add_argument("--exact", action="store_true", help="fail (exit 3) if exact TV is out of reach")
    _add_output(sp)

    sp = sub.add_parser("criteria", help="finite-n diagnostics for the equivalence conditions")
    _add_source(sp)
    sp.add_argument("--conditions", type=lambda s: [c for c in s.split(",") if c])
    sp.add_argument("--n-grid", type=_int_list)
    sp.add_argument("--c-grid", type=_float_list, default=list(DEFAULT_C_GRID))
    sp.add_argument("--replicates", type=int, default=200)
    sp.add_argument("--seed", type=_seed)
    sp.add_argument("--strict", action="store_true", help="exit 4 if any verdict is inconclusive")
    for f in Tolerances.__dataclass_fields__.values():
        sp.add_argument("--" + f.name.replace("_", "-"), type=type(f.default), default=f.default)
    _add_output(sp)

    sp = sub.add_parser("couple", help="coupling experiments")
    _add_source(sp)
    sp.add_argument("--mode", choices=("edgewise", "edge_count"), required=True)
    sp.add_argument("--alpha", type=float, help="edge_count: p' = p + alpha sqrt(p/N)")
    sp.add_argument("--lam", type=float, default=1.0, help="edge_count with --alpha: p = lam/n")
    sp.add_argument("--n-grid", type=_int_list)
    sp.add_argument("--replicates", type=int, default=1000)
    sp.add_argument("--seed", type=_seed, required=True)
    _add_output(sp)

    sp = sub.add_parser("accept", help="run the acceptance suite")
    sp.add_argument("--only", type=lambda s: [c for c in s.split(",") if c])
    sp.add_argument("--seed", type=_seed, default=20240601)
    sp.add_argument("--no-timings", action="store_true", help="omit runtimes from the report")
    _add_output(sp)
    return parser


def _source(args, inline=False) -> Source:
    chosen = [args.preset is not None, args.spec_a is not None or args.spec_b is not None,
              inline and (args.p is not None or args.q is not None)]
    if sum(chosen) != 1:
        raise UsageError("give exactly one of --preset, --spec-a/--spec-b" + (", --p/--q" if inline else ""))
    if args.preset is not None:
        params = dict(args.param)
        seq = preset(args.preset, **params)
        return Source(seq, {"preset": args.preset, "params": params})
    if inline and chosen[2]:
        if args.p is None or args.q is None:
            raise UsageError("--p and --q go together")
        pair = ProbPair(args.p, args.q)
        return Source(SequencePair(lambda n: pair, [pair.N], label="inline"),
                      {"inline": {"p": list(args.p), "q": list(args.q)}})
    if args.spec_a is None or args.spec_b is None:
        raise UsageError("--spec-a and --spec-b go together")
    model_a, obj_a = load_model_spec(args.spec_a)
    model_b, obj_b = load_model_spec(args.spec_b)
    grid = getattr(args, "n_grid", None) or [100, 200, 400, 800, 1600]
    return Source(specs_sequence(model_a, model_b, grid, f"{model_a.label} vs {model_b.label}"),
                  {"spec_a": obj_a, "spec_b": obj_b})


def _emit(report: Report, args):
    text = report.render(args.format)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def cmd_distance(args) -> int:
    src = _source(args, inline=True)
    grid = args.n_grid or list(src.seq.n_grid)
    rep = distance_report(src, grid, args.seed, args.nmax_enum, args.exact)
    _emit(rep, args)
    return EXIT_OK


def cmd_criteria(args) -> int:
    src = _source(args)
    for c in args.conditions or []:
        if c not in CONDITIONS:
            raise UsageError(f"unknown condition {c!r}; choose from {list(CONDITIONS)}")
    tol = Tolerances(**{f: getattr(args, f) for f in Tolerances.__dataclass_fields__})
    rep = criteria_report(src, args.conditions, args.n_grid, args.c_grid, args.replicates,
                          args.seed, tol)
    _emit(rep, args)
    if args.strict and rep.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_couple(args) -> int:
    src = None
    if args.alpha is None:
        src = _source(args)
    elif args.mode != "edge_count":
        raise UsageError("--alpha applies to --mode edge_count only")
    grid = args.n_grid or (list(src.seq.n_grid) if src else [500, 1000, 2000, 4000])
    rep = couple_report(args.mode, grid, args.seed, args.replicates, src, args.alpha, args.lam)
    _emit(rep, args)
    return EXIT_OK


def cmd_accept(args) -> int:
    from .acceptance import CHECKS, acceptance_report, run_acceptance

    if args.only:
        unknown = [c for c in args.only if c not in CHECKS]
        if unknown:
            raise UsageError(f"unknown checks {unknown}; choose from {list(CHECKS)}")
    results = run_acceptance(args.only, seed=args.seed)
    _emit(acceptance_report(results, args.seed, timings=not args.no_timings), args)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("acceptance failures: " + ", ".join(failed), file=sys.stderr)
        return EXIT_ACCEPT
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in sorted(PRESETS):
        seq = preset(name)
        kind = "random" if seq.random else "deterministic"
        print(f"{name:20s} {kind:14s} n_grid={list(seq.n_grid)}")
    return EXIT_OK


COMMANDS = {"distance": cmd_distance, "criteria": cmd_criteria, "couple": cmd_couple,
            "accept": cmd_accept, "presets": cmd_presets}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (EnumerationTooLarge, InfeasibleError) as e:
        print(f"graphequiv: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SpecError, UsageError, ModelError, GeneratorError, ValueError) as e:
        print(f"graphequiv: error: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
