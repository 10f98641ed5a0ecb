"""Command-line interface: ``plotalloc <command> ...``.

Instance arguments are file paths or fixture names such as ``example2`` or
``hub_n8``.  ``check`` exits 0 when the property holds, 1 when a witness is
found and 2 on errors; every other command exits 0 on success and 2 on errors.
"""

from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import analysis, experiments, generators, io, optimize
from .core import InstanceError, SizeCapError, utilities
from .mechanisms import CLOSED_FORM, MechanismId, expectimax_solve, random_bits, run_mechanism

EXIT_OK, EXIT_WITNESS, EXIT_ERROR = 0, 1, 2


def _fmt(x) -> str:
    return io._fmt(Fraction(x))


def load_instance(ref: str):
    path = Path(ref)
    if path.exists():
        return io.parse_instance(path.read_text(encoding="utf-8"))
    try:
        return generators.paper_fixture(ref).instance
    except InstanceError:
        raise InstanceError(f"{ref}: no such file or fixture") from None


def load_reports(ref: Optional[str], n: int):
    if ref is None:
        return None
    return io.parse_reports(Path(ref).read_text(encoding="utf-8"), n)


def _print_allocation(inst, alloc, out) -> None:
    utils = utilities(inst, alloc)
    print(f"allocation: {alloc}", file=out)
    print("utilities: " + " ".join(_fmt(u) for u in utils), file=out)
    print(f"welfare: {_fmt(sum(utils, Fraction(0)))}", file=out)


def cmd_solve(args, out) -> int:
    inst = load_instance(args.file)
    res = optimize.two_approx(inst) if args.approx else optimize.brute_force_opt(inst, cap=args.cap)
    print(f"method: {res.method.value}", file=out)
    _print_allocation(inst, res.allocation, out)
    return EXIT_OK


def cmd_run(args, out) -> int:
    inst = load_instance(args.file)
    mech = MechanismId.parse(args.mechanism)
    reports = load_reports(args.reports, inst.n)
    bits = random_bits(inst, random.Random(args.seed))
    if mech in CLOSED_FORM:
        outcome = run_mechanism(inst, mech, bits, reports)
    else:
        outcome = expectimax_solve(inst, mech, bits, reports).outcome
    print(f"mechanism: {mech.value}", file=out)
    print("order: " + " ".join(map(str, bits.agent_permutation)), file=out)
    for ev in outcome.transcript:
        decl = "-" if ev.declared is None else str(ev.declared)
        print(f"pick: agent {ev.agent} plot {ev.plot} declares {decl} ({ev.role})", file=out)
    _print_allocation(inst, outcome.allocation, out)
    return EXIT_OK


def cmd_expected_sw(args, out) -> int:
    inst = load_instance(args.file)
    mech = MechanismId.parse(args.mechanism)
    reports = load_reports(args.reports, inst.n)
    if args.samples is None:
        rep = analysis.exact_expected_sw(inst, mech, reports)
        seed = "exact"
    else:
        rep = analysis.monte_carlo_sw(inst, mech, reports, samples=args.samples, seed=args.seed)
        seed = args.seed
    row = io.ResultRow(Path(args.file).stem, mech.value, seed, rep.expected_sw, rep.opt)
    out.write(io.rows_to_csv([row]))
    if not rep.exact:
        print(f"# 99% CI half-width: {rep.half_width:.6g}", file=out)
    return EXIT_OK


def cmd_check(args, out) -> int:
    inst = load_instance(args.file)
    mech = MechanismId.parse(args.mechanism)
    if args.property == "po":
        w = analysis.check_universal_po(inst, mech, load_reports(args.reports, inst.n))
        if w is None:
            print("none", file=out)
            return EXIT_OK
        bits, dom = w
        print("witness: order " + " ".join(map(str, bits.agent_permutation)), file=out)
        _print_allocation(inst, run_for(inst, mech, bits), out)
        print(f"dominated by: {dom}", file=out)
        return EXIT_WITNESS
    if args.reports is not None:
        raise InstanceError("check ft always starts from truthful reports")
    v = analysis.check_universal_ft(inst, mech)
    if v is None:
        print("none", file=out)
        return EXIT_OK
    lie = "nobody" if v.lying_report is None else f"agent {v.lying_report}"
    truth = "nobody" if v.true_report is None else f"agent {v.true_report}"
    print(f"witness: agent {v.agent} reports {lie} instead of {truth}", file=out)
    print("order: " + " ".join(map(str, v.bits.agent_permutation)), file=out)
    print(f"utility: {_fmt(v.lying_utility)} vs {_fmt(v.truthful_utility)} truthful", file=out)
    return EXIT_WITNESS


def run_for(inst, mech, bits):
    if mech in CLOSED_FORM:
        return run_mechanism(inst, mech, bits).allocation
    return expectimax_solve(inst, mech, bits, informed=True).outcome.allocation


def cmd_gen(args, out) -> int:
    if args.family == "random":
        spec = generators.RandomSpec(
            n=args.n or 6,
            topology=args.topology,
            pairs=args.pairs,
            phi_range=(Fraction(args.phi_min), Fraction(args.phi_max)),
            values=args.values,
            uniform_phi=args.uniform_phi,
        )
        inst = generators.random_instance(spec, args.seed)
    else:
        params = {}
        if args.n is not None:
            params["n"] = args.n
        if args.phi is not None:
            params["phi"] = Fraction(args.phi)
        if args.marked_pair is not None:
            params["marked_pair"] = args.marked_pair
        if args.variant is not None:
            params["variant"] = args.variant
        inst = generators.paper_fixture(args.family, **params).instance
    text = io.render_instance(inst)
    if args.output == "-":
        out.write(text)
    else:
        io.atomic_write_text(args.output, text)
    return EXIT_OK


def cmd_export_mip(args, out) -> int:
    text = io.export_mip(load_instance(args.file))
    if args.output == "-":
        out.write(text)
    else:
        io.atomic_write_text(args.output, text)
    return EXIT_OK


def cmd_experiment(args, out) -> int:
    rows = experiments.run_suite(
        args.suite, count=args.count, samples=args.samples, seed=args.seed, timing=args.timing
    )
    io.append_rows(args.output, rows)
    print(f"{len(rows)} rows appended to {args.output}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plotalloc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimal or 2-approximate allocation")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--opt", action="store_true")
    g.add_argument("--approx", action="store_true")
    s.add_argument("file")
    s.add_argument("--cap", type=int, default=optimize.DEFAULT_BRUTE_FORCE_CAP)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("run", help="one mechanism run")
    s.add_argument("mechanism")
    s.add_argument("file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reports")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("expected-sw", help="expected social welfare as a result row")
    s.add_argument("mechanism")
    s.add_argument("file")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true")
    g.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reports")
    s.set_defaults(func=cmd_expected_sw)

    s = sub.add_parser("check", help="universal Pareto optimality or friendship-truthfulness")
    s.add_argument("property", choices=("po", "ft"))
    s.add_argument("mechanism")
    s.add_argument("file")
    s.add_argument("--reports")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("gen", help="write a fixture or a random instance")
    s.add_argument("family", help="fixture name or 'random'")
    s.add_argument("--n", type=int)
    s.add_argument("--phi")
    s.add_argument("--marked-pair", type=int)
    s.add_argument("--variant", choices=("I1", "I2"))
    s.add_argument("--topology", choices=generators.TOPOLOGIES, default="path")
    s.add_argument("--pairs", type=int, default=0)
    s.add_argument("--values", choices=generators.VALUE_MODES, default="uniform-rational")
    s.add_argument("--phi-min", default="0")
    s.add_argument("--phi-max", default="1")
    s.add_argument("--uniform-phi", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("export-mip", help="write the welfare MIP in LP format")
    s.add_argument("file")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_export_mip)

    s = sub.add_parser("experiment", help="run a named suite and append CSV rows")
    s.add_argument("suite", choices=sorted(experiments.SUITES))
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--samples", type=int, default=20_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--timing", action="store_true", help="record wall time (makes output non-reproducible)")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args, out)
    except (InstanceError, SizeCapError, ValueError, KeyError, OSError) as exc:
        print(f"plotalloc: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
