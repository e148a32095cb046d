"""``fibrand`` command line.

Subcommands: ``sample``, ``build``, ``experiment``, ``verify`` and ``bench``.
Exit codes: 0 success, 1 verification or statistical failure, 2 input error.
The same flags and ``--seed`` always produce byte-identical primary output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .cube import FibonacciCube
from .experiment import (ALGORITHMS, REPORT_SCHEMA, ExperimentSpec, SpecError, build_sampler,
                         format_table, resolve_group, run_experiment)
from .io import ParseError, format_element
from .rng import RandomSource
from .uniformizer import CubePairSampler

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _abc(text: str) -> tuple:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("--abc expects three numbers like 1,1,1") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--abc expects three numbers like 1,1,1")
    return parts


def _common(p: argparse.ArgumentParser, samples_default: int | None = None):
    p.add_argument("--group", default="A5", help="builtin name (A15, S7, Q8, SL(2,3), ...) or generator file")
    p.add_argument("--algo", default="fibcube", choices=ALGORITHMS)
    p.add_argument("--t", type=int, default=None, help="cube length including seeded generators")
    p.add_argument("--abc", type=_abc, default=(1.0, 1.0, 1.0), help="case weights a,b,c")
    p.add_argument("--k", type=int, default=None, help="slots for product replacement")
    p.add_argument("--epsilon", type=float, default=0.1, help="target for fibcube+boost")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order", type=int, default=None, help="group order, when known, for file groups")
    p.add_argument("--steps", type=int, default=None, help="moves per run for pr-variant")
    p.add_argument("--burn-in", type=int, default=None, help="initial moves for pr-classic")
    p.add_argument("--format", dest="fmt", default="table", choices=("table", "json", "csv"))
    p.add_argument("--out", default=None, help="write primary output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fibrand", description="Random elements of black box groups.")
    parser.add_argument("--version", action="version", version=f"fibrand {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw elements and print them with an op-count footer")
    _common(p)
    p.add_argument("--n", type=int, default=10, help="number of elements")
    p.add_argument("--notation", default="cycles", choices=("cycles", "images"))
    p.add_argument("--cube", default=None, help="sample from a cube saved by 'build'")

    p = sub.add_parser("build", help="build a Fibonacci cube and save it")
    _common(p)

    p = sub.add_parser("experiment", help="chi-square test of sampled cycle types")
    _common(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--runs", type=int, default=1, help="consecutive seeds starting at --seed")
    p.add_argument("--partition", default=None, help="expected counts, rows 'cycle type, count'")

    p = sub.add_parser("verify", help="run the exact invariant battery")
    p.add_argument("--group", default=None, help="one builtin group (default: the whole suite)")
    p.add_argument("--only", default=None, help="comma separated invariant names")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", dest="fmt", default="table", choices=("table", "json", "csv"))
    p.add_argument("--out", default=None)
    p.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("bench", help="compare samplers, or kernel backends with --kernels")
    _common(p)
    p.add_argument("--samples", type=int, default=2_000)
    p.add_argument("--kernels", action="store_true", help="time the compiled and pure-Python kernels")
    p.add_argument("--partition", default=None)
    return parser


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _spec(args, samples: int, algo: str | None = None, seed: int | None = None) -> ExperimentSpec:
    return ExperimentSpec(group=args.group, algo=algo or args.algo, t=args.t, abc=args.abc, k=args.k,
                          epsilon=args.epsilon, samples=samples,
                          seed=args.seed if seed is None else seed,
                          partition=getattr(args, "partition", None), order=args.order,
                          steps=args.steps, burn_in=args.burn_in)


# commands

def cmd_sample(args) -> int:
    if args.n < 0:
        raise SpecError("--n must be non-negative")
    spec = _spec(args, samples=args.n)
    rg = resolve_group(spec.group, spec.order)
    G = rg.group
    root = RandomSource(spec.seed, "run")
    before = G.counter.total
    if args.cube:
        if spec.algo != "fibcube":
            raise SpecError("--cube only applies to --algo fibcube")
        try:
            data = json.loads(Path(args.cube).read_text())
        except FileNotFoundError:
            raise SpecError(f"cube file not found: {args.cube}") from None
        sampler = CubePairSampler(FibonacciCube.from_dict(data["cube"] if "cube" in data else data, G))
    else:
        sampler, _ = build_sampler(spec, rg, root)
    precompute = G.counter.total - before
    src = root.derive("sample")
    before = G.counter.total
    elements = [sampler.sample(src) for _ in range(args.n)]
    sample_ops = G.counter.total - before
    mean = sample_ops / args.n if args.n else 0.0
    shown = [format_element(G, e, args.notation) for e in elements]
    if args.fmt == "json":
        text = json.dumps({"schema": REPORT_SCHEMA, "group": rg.name, "algo": spec.algo,
                           "seed": spec.seed, "elements": shown, "precompute_ops": precompute,
                           "mean_ops_per_sample": mean}, sort_keys=True, indent=2) + "\n"
    elif args.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "element"])
        for i, s in enumerate(shown):
            w.writerow([i, s])
        text = buf.getvalue() + f"# precompute_ops={precompute} mean_ops_per_sample={mean:.3f}\n"
    else:
        text = "".join(s + "\n" for s in shown)
        text += f"# precompute_ops={precompute} mean_ops_per_sample={mean:.3f}\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_build(args) -> int:
    if args.algo != "fibcube":
        raise SpecError("build saves Fibonacci cubes; use --algo fibcube")
    spec = _spec(args, samples=0)
    rg = resolve_group(spec.group, spec.order)
    sampler, details = build_sampler(spec, rg, RandomSource(spec.seed, "run"))
    cube = sampler.cube
    record = {
        "schema": "fibrand-saved-cube/1",
        "pipeline": {"stages": ["fibcube-pair"], "seed": spec.seed, "streams": ["run/cube"],
                     "details": details},
        "cube": cube.to_dict(seed=spec.seed),
    }
    text = json.dumps(record, sort_keys=True, indent=2) + "\n"
    _emit(text, args.out)
    if args.out:
        sys.stderr.write(f"saved cube of length {len(cube)} "
                         f"({sum(cube.build_ops.values())} precompute ops) to {args.out}\n")
    return EXIT_OK


def _report_text(reports, fmt: str) -> str:
    if fmt == "json":
        body = [r.to_dict() for r in reports]
        return json.dumps(body[0] if len(body) == 1 else body, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "order", "algo", "seed", "t", "precompute_ops", "mean_ops_per_sample",
                    "categories", "df", "chi2", "critical_05", "accepted"])
        for r in reports:
            c = r.chi
            w.writerow([r.group, r.order if r.order is not None else "", r.spec["algo"], r.spec["seed"],
                        r.details.get("t", ""), r.precompute_ops, f"{r.mean_ops_per_sample:.4f}",
                        r.categories, c.degrees_of_freedom, f"{c.statistic:.4f}",
                        f"{c.critical_value:.4f}", int(c.accepted)])
        return buf.getvalue()
    return format_table(reports)


def cmd_experiment(args) -> int:
    if args.runs < 1:
        raise SpecError("--runs must be at least 1")
    reports = [run_experiment(_spec(args, args.samples, seed=args.seed + i)) for i in range(args.runs)]
    _emit(_report_text(reports, args.fmt), args.out)
    return EXIT_OK if all(r.chi.accepted for r in reports) else EXIT_FAIL


def cmd_verify(args) -> int:
    from .verify import INVARIANTS, run_battery

    only = [s.strip() for s in args.only.split(",")] if args.only else None
    if only:
        unknown = [s for s in only if s not in INVARIANTS]
        if unknown:
            raise SpecError(f"unknown invariant(s) {', '.join(unknown)}; known: {', '.join(INVARIANTS)}")
    groups = [args.group] if args.group else None
    if groups:
        resolve_group(args.group)
    rep = run_battery(groups, only, seeds=args.seeds, seed=args.seed, fault=args.inject_fault)
    if args.fmt == "json":
        text = json.dumps(rep.to_dict(), sort_keys=True, indent=2) + "\n"
    elif args.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["invariant", "group", "passed", "checks"])
        for r in rep.results:
            w.writerow([r.name, r.group, r.passed, r.checks])
        text = buf.getvalue()
    else:
        lines = [f"{name:<16} {v['passed']}/{v['checks']} {'ok' if v['passed'] == v['checks'] else 'FAIL'}"
                 for name, v in rep.summary().items()]
        text = "\n".join(lines) + "\n"
        for f in rep.failures():
            text += "witness: " + json.dumps(f, sort_keys=True) + "\n"
    _emit(text, args.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_bench(args) -> int:
    if args.kernels:
        from .bench import format_kernel_bench, kernel_bench

        _emit(format_kernel_bench(kernel_bench()), args.out)
        return EXIT_OK
    reports = []
    for algo in ALGORITHMS:
        reports.append(run_experiment(_spec(args, args.samples, algo=algo)))
    for r in reports:
        r.group = f"{r.group} [{r.spec['algo']}]"
    _emit(_report_text(reports, args.fmt), args.out)
    return EXIT_OK


COMMANDS = {"sample": cmd_sample, "build": cmd_build, "experiment": cmd_experiment,
            "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SpecError, ParseError, FileNotFoundError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        sys.stderr.write(f"fibrand: error: {msg}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
