#! /usr/bin/env python3

"""Command line entry point for the 1-CARD-XOR experiment pipeline.

Every subcommand prints one key=value pair per line, or a JSON object with --pretty. Instance and witness files
may be gzip compressed, detected by a ".gz" suffix. A path of "-" means stdin or stdout.

Exit codes:
    solve: 10 sat, 20 unsat, 30 timeout.
    verify and stat-test: 0 on success, 1 when the witness is rejected or the floor is violated.
    Every subcommand: 1 on usage or input errors, 2 on internal errors.
"""

from __future__ import annotations

import argparse
import gzip
import json
import logging
import math
import sys
from contextlib import contextmanager
from dataclasses import asdict
from fractions import Fraction
from typing import Any
from typing import Iterator
from typing import Sequence
from typing import TextIO

from cardxor import instance as instance_io
from cardxor import sweep
from cardxor import transition
from cardxor.encode import CardEncoding
from cardxor.encode import EncodingChoice
from cardxor.encode import XorMode
from cardxor.encode import encode_instance
from cardxor.encode import encoding_stats
from cardxor.encode import write_dimacs
from cardxor.errors import CardXorError
from cardxor.errors import SolverProcessError
from cardxor.instance import CardXorInstance
from cardxor.instance import GenConfig
from cardxor.solve import Engine
from cardxor.solve import EngineConfig
from cardxor.solve import Polarity
from cardxor.solve import Status
from cardxor.solve import solve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INTERNAL = 2
SOLVE_EXIT_CODES = {
    Status.SAT: 10,
    Status.UNSAT: 20,
    Status.TIMEOUT: 30,
}


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1 and the full flag help."""

    def error(self, message: str) -> Any:
        self.print_help(sys.stderr)
        self.exit(EXIT_FAILURE, f"{self.prog}: error: {message}\n")


def _density(text: str) -> Fraction:
    """Parse a density such as "0.45" or "9/20" exactly."""
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as error:
        raise argparse.ArgumentTypeError(f"invalid density {text!r}") from error
    if value < 0:
        raise argparse.ArgumentTypeError(f"density must be non-negative, got {text}")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    """Parse comma separated integers and inclusive ranges, e.g. "1,4,8:16:2"."""
    values: list[int] = []
    try:
        for item in text.split(","):
            if ":" in item:
                bounds = [int(part) for part in item.split(":")]
                if len(bounds) not in (2, 3) or (len(bounds) == 3 and bounds[2] < 1):
                    raise ValueError(item)
                step = bounds[2] if len(bounds) == 3 else 1
                values.extend(range(bounds[0], bounds[1] + 1, step))
            else:
                values.append(int(item))
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"invalid integer list {text!r}") from error
    return tuple(values)


@contextmanager
def _open(path: str, mode: str) -> Iterator[TextIO]:
    """Open a text file, transparently gzip compressed by suffix. "-" is stdin or stdout."""
    if path == "-":
        yield sys.stdin if "r" in mode else sys.stdout
        return
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, f"{mode}t", encoding="utf-8") as file:
        yield file


def _load(path: str) -> CardXorInstance:
    """Read a native instance file."""
    with _open(path, "r") as source:
        return instance_io.read_native(source)


def _emit(values: dict[str, Any], pretty: bool) -> None:
    """Print results as key=value lines, or as indented JSON."""
    values = {key: str(value) if isinstance(value, Fraction) else value for key, value in values.items()}
    if pretty:
        print(json.dumps(values, indent=2))
        return
    for key, value in values.items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif value is None:
            value = ""
        print(f"{key}={value}")


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    """Build the engine configuration from the shared engine flags."""
    return EngineConfig(
        engine=args.engine,
        timeout=args.timeout_ms / 1000,
        polarity=args.polarity,
        external_cmd=args.solver_cmd,
        minimize=getattr(args, "minimize", False),
        strong_bound=getattr(args, "strong_bound", False),
    )


def _encoding_choice(args: argparse.Namespace) -> EncodingChoice:
    """Build the encoding choice from the shared encoding flags."""
    return EncodingChoice(card=args.card, xor_mode=args.xor_mode, cut=args.cut)


def cmd_gen(args: argparse.Namespace) -> int:
    """Generate one instance into a native file."""
    cfg = GenConfig(args.n, args.k, args.seed, m=args.m, s=args.s, trial=args.trial)
    generated = instance_io.generate(cfg)
    with _open(args.out, "w") as sink:
        instance_io.write_native(generated, sink)
    if args.out != "-":
        _emit({"n": generated.n, "m": generated.m, "k": generated.k, "s": generated.s, "seed": generated.seed}, args.pretty)
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    """Print the transition density and its bounds, and classify a density if one is given."""
    bounds = transition.report(args.n, args.k)
    values: dict[str, Any] = {
        "n": bounds.n,
        "k": bounds.k,
        "phi": bounds.phi,
        "lower_s": bounds.lower_s if bounds.lower_defined else None,
        "upper_s": bounds.upper_s,
        "branch": bounds.applicable_branch.value,
    }
    density = Fraction(args.m, args.n) if args.m is not None else args.s
    if density is not None:
        prediction = transition.classify(args.n, args.k, density, args.margin)
        values["s"] = density
        values["region"] = prediction.region.value
        values["distance"] = prediction.margin
        values["alpha_margin"] = transition.alpha_margin(args.n, args.k, math.ceil(density * args.n))
    _emit(values, args.pretty)
    return EXIT_OK


def cmd_encode(args: argparse.Namespace) -> int:
    """Write the extended DIMACS translation of an instance, or print encoding sizes."""
    loaded = _load(args.instance)
    choice = _encoding_choice(args)
    formula = encode_instance(loaded, choice)
    if args.out is not None or not args.stats:
        with _open(args.out or "-", "w") as sink:
            write_dimacs(formula, sink)
    if args.stats:
        card_stats = encoding_stats(loaded.n, loaded.k, choice)
        _emit(
            {
                "encoding": choice.label,
                "card_aux_vars": card_stats.aux_vars,
                "card_clauses": card_stats.clauses,
                "num_vars": formula.num_vars,
                "clauses": len(formula.clauses),
                "xor_clauses": len(formula.xor_clauses),
            },
            args.pretty,
        )
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    """Decide an instance. The exit code carries the verdict."""
    loaded = _load(args.instance)
    result = solve(loaded, _engine_config(args), _encoding_choice(args))
    if args.witness_out and result.witness is not None:
        with _open(args.witness_out, "w") as sink:
            instance_io.write_witness(result.witness, loaded.n, sink)
    _emit(
        {
            "status": result.status.value,
            "witness": None if result.witness is None else f"{result.witness:0{(loaded.n + 3) // 4}x}",
            "min_weight": result.min_weight,
            "decisions": result.stats.decisions,
            "propagations": result.stats.propagations,
            "elapsed_ms": round(result.stats.elapsed * 1000),
        },
        args.pretty,
    )
    return SOLVE_EXIT_CODES[result.status]


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run a grid experiment and write its records, heatmap, and acceptance summary."""
    plan = sweep.SweepPlan(
        n=args.n,
        master_seed=args.seed,
        k_values=args.k_values or (),
        m_values=args.m_values or (),
        trials=args.trials,
        engine=_engine_config(args),
        encoding=_encoding_choice(args),
        margin=args.margin,
    )
    if args.compare_polarity:
        report = sweep.compare_polarity(plan, jobs=args.jobs)
        values: dict[str, Any] = {}
        for polarity in report.decisions:
            values[f"{polarity}_decisions"] = report.decisions[polarity]
            values[f"{polarity}_time_ms"] = report.time_ms[polarity]
            values[f"{polarity}_timeouts"] = report.timeouts[polarity]
        _emit(values, args.pretty)
        return EXIT_OK

    records = sweep.run_sweep(plan, args.jobs)
    if args.csv:
        with _open(args.csv, "w") as sink:
            sweep.emit_csv(records, sink)
    summaries = sweep.summarize(records, exclude_timeouts=args.exclude_timeouts)
    if args.heatmap:
        with open(args.heatmap, "wb") as sink:
            sweep.emit_heatmap(summaries, args.metric, sink)
    hardest = sweep.hardest_cell(summaries)
    violations = sweep.check_separation(summaries, margin=args.margin)
    _emit(
        {
            "instances": len(records),
            "sat": sum(cell.sat for cell in summaries),
            "unsat": sum(cell.unsat for cell in summaries),
            "timeouts": sum(cell.timeouts for cell in summaries),
            "errors": sum(cell.errors for cell in summaries),
            "separation_violations": len(violations),
            "hardest_k": hardest.k,
            "hardest_m": hardest.m,
            "hardest_distance": abs(hardest.s - hardest.phi),
            "hardest_median_decisions": hardest.median_decisions,
        },
        args.pretty,
    )
    return EXIT_OK


def cmd_stat_test(args: argparse.Namespace) -> int:
    """Check the conditional satisfiability floor empirically."""
    report = sweep.stat_test(
        args.n,
        args.k,
        args.s,
        args.alpha,
        args.trials,
        _engine_config(args),
        master_seed=args.seed,
        side=args.side,
    )
    _emit(asdict(report), args.pretty)
    return EXIT_FAILURE if report.violated else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Check a witness against an instance, independently of the engine that produced it."""
    loaded = _load(args.instance)
    with _open(args.witness, "r") as source:
        witness = instance_io.read_witness(source, loaded.n)
    valid = loaded.check_witness(witness)
    _emit({"valid": valid, "weight": witness.bit_count(), "k": loaded.k}, args.pretty)
    return EXIT_OK if valid else EXIT_FAILURE


def _add_engine_flags(parser: argparse.ArgumentParser, minimize: bool = True) -> None:
    """Flags shared by every subcommand that runs an engine."""
    parser.add_argument(
        "--engine",
        choices=[engine.value for engine in Engine],
        default=Engine.BNB.value,
        help="Decision procedure. Default: bnb.",
    )
    parser.add_argument(
        "--timeout-ms",
        type=int,
        default=10000,
        help="Wall time limit per instance in milliseconds. Default: 10000.",
    )
    parser.add_argument(
        "--polarity",
        choices=[polarity.value for polarity in Polarity],
        default=Polarity.FALSE_FIRST.value,
        help="Value tried first at each branch. Default: false-first.",
    )
    parser.add_argument(
        "--solver-cmd",
        help='External solver command template, e.g. "cryptominisat5 --polar {polarity} {path}". '
        "Falls back to the CARDXOR_SOLVER_CMD environment variable.",
    )
    if minimize:
        parser.add_argument(
            "--minimize",
            action="store_true",
            help="Run bnb to completion and report the minimum weight of the solution coset.",
        )
        parser.add_argument(
            "--strong-bound",
            action="store_true",
            help="Count unavoidable dependent weight when pruning bnb branches.",
        )


def _add_encoding_flags(parser: argparse.ArgumentParser) -> None:
    """Flags that pick the CNF translation."""
    parser.add_argument(
        "--card",
        choices=[card.value for card in CardEncoding],
        default=CardEncoding.CARDNET.value,
        help="Cardinality encoding. Default: cardnet.",
    )
    parser.add_argument(
        "--xor-mode",
        choices=[mode.value for mode in XorMode],
        default=XorMode.NATIVE.value,
        help="Keep XOR rows as native x lines, or blast them into CNF. Default: native.",
    )
    parser.add_argument(
        "--cut",
        type=int,
        default=4,
        help="Maximum width of a blasted XOR piece. Default: 4.",
    )


def _add_shape_flags(parser: argparse.ArgumentParser, seed_required: bool) -> None:
    """Instance shape flags: n, k, m or s, and the seed."""
    parser.add_argument("--n", type=int, required=True, help="Variable count.")
    parser.add_argument("--k", type=int, required=True, help="Cardinality bound.")
    rows = parser.add_mutually_exclusive_group(required=True)
    rows.add_argument("--m", type=int, help="XOR row count.")
    rows.add_argument("--s", type=_density, help="XOR density; m = ceil(s·n).")
    parser.add_argument(
        "--seed",
        type=int,
        required=seed_required,
        default=None if seed_required else 0,
        help="Master seed. All randomness derives from it.",
    )


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse user arguments.

    Returns:
        Namespace with all the user arguments, and the handler of the chosen subcommand in "handler".
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-p",
        "--pretty",
        action="store_true",
        help="Print results as indented JSON instead of key=value lines.",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Log debug messages to stderr.",
    )

    parser = _Parser(
        prog="cardxor",
        description="Generate, encode, and solve random 1-CARD-XOR instances around their phase transition.",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    gen = commands.add_parser("gen", parents=[common], help="Generate a random instance.")
    _add_shape_flags(gen, seed_required=True)
    gen.add_argument("--trial", type=int, default=0, help="Repetition index within a cell. Default: 0.")
    gen.add_argument("-o", "--out", default="-", help="Output .cx file. Default: stdout.")
    gen.set_defaults(handler=cmd_gen)

    predict = commands.add_parser("predict", parents=[common], help="Print phi and its bounds.")
    predict.add_argument("--n", type=int, required=True, help="Variable count.")
    predict.add_argument("--k", type=int, required=True, help="Cardinality bound.")
    density = predict.add_mutually_exclusive_group()
    density.add_argument("--m", type=int, help="XOR row count to classify.")
    density.add_argument("--s", type=_density, help="XOR density to classify.")
    predict.add_argument("--margin", type=float, default=0.2, help="Classification margin. Default: 0.2.")
    predict.set_defaults(handler=cmd_predict)

    encode = commands.add_parser("encode", parents=[common], help="Translate an instance to extended DIMACS.")
    encode.add_argument("instance", help="Native .cx instance file.")
    _add_encoding_flags(encode)
    encode.add_argument("-o", "--out", help="Output .cnf file. Default: stdout.")
    encode.add_argument("--stats", action="store_true", help="Print encoding sizes.")
    encode.set_defaults(handler=cmd_encode)

    solve_cmd = commands.add_parser("solve", parents=[common], help="Decide an instance.")
    solve_cmd.add_argument("instance", help="Native .cx instance file.")
    _add_engine_flags(solve_cmd)
    _add_encoding_flags(solve_cmd)
    solve_cmd.add_argument("--witness-out", help="Write the witness as a hex bit vector.")
    solve_cmd.set_defaults(handler=cmd_solve)

    sweep_cmd = commands.add_parser("sweep", parents=[common], help="Run a (k, m) grid experiment.")
    sweep_cmd.add_argument("--n", type=int, required=True, help="Variable count.")
    sweep_cmd.add_argument("--seed", type=int, required=True, help="Master seed.")
    sweep_cmd.add_argument("--k-values", type=_int_list, help='k values, e.g. "2:38:2". Default: 0..n.')
    sweep_cmd.add_argument("--m-values", type=_int_list, help='m values, e.g. "1:40". Default: 1..n.')
    sweep_cmd.add_argument("--trials", type=int, default=20, help="Instances per cell. Default: 20.")
    sweep_cmd.add_argument("--jobs", type=int, help="Worker processes. Default: CPU count.")
    sweep_cmd.add_argument("--margin", type=float, default=0.2, help="Separation margin. Default: 0.2.")
    sweep_cmd.add_argument("--csv", help="Write per-instance records as CSV.")
    sweep_cmd.add_argument("--heatmap", help="Write an SVG heatmap.")
    sweep_cmd.add_argument(
        "--metric",
        choices=[metric.value for metric in sweep.Metric],
        default=sweep.Metric.SAT_FRACTION.value,
        help="Heatmap cell value. Default: sat_fraction.",
    )
    sweep_cmd.add_argument(
        "--exclude-timeouts",
        action="store_true",
        help="Leave timeouts out of the sat fraction denominator.",
    )
    sweep_cmd.add_argument(
        "--compare-polarity",
        action="store_true",
        help="Run the grid once per branch polarity and print the total effort of each.",
    )
    _add_engine_flags(sweep_cmd)
    _add_encoding_flags(sweep_cmd)
    sweep_cmd.set_defaults(handler=cmd_sweep)

    stat = commands.add_parser("stat-test", parents=[common], help="Check the satisfiability probability floor.")
    stat.add_argument("--n", type=int, required=True, help="Variable count.")
    stat.add_argument("--k", type=int, required=True, help="Cardinality bound.")
    stat.add_argument("--s", type=_density, required=True, help="XOR density.")
    stat.add_argument("--alpha", type=float, required=True, help="Conditioning slack in bits.")
    stat.add_argument("--trials", type=int, default=400, help="Instances to run. Default: 400.")
    stat.add_argument("--seed", type=int, default=0, help="Master seed. Default: 0.")
    stat.add_argument("--side", choices=["sat", "unsat"], help="Side to test. Default: picked from the counts.")
    _add_engine_flags(stat, minimize=False)
    stat.set_defaults(handler=cmd_stat_test)

    verify = commands.add_parser("verify", parents=[common], help="Check a witness against an instance.")
    verify.add_argument("instance", help="Native .cx instance file.")
    verify.add_argument("witness", help='Witness file: a hex bit vector or solver "v" lines.')
    verify.set_defaults(handler=cmd_verify)

    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    """Primary function to run a cardxor subcommand.

    Returns:
        The process exit code.
    """
    try:
        args = parse_args(argv)
    except SystemExit as exit_request:
        if exit_request.code is None or isinstance(exit_request.code, int):
            return exit_request.code or EXIT_OK
        return EXIT_FAILURE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except SolverProcessError as error:
        logger.error(f"Solver failure ({error.code}): {error}")
        return EXIT_INTERNAL
    except (CardXorError, ValueError, OSError) as error:
        print(f"cardxor {args.command}: error: {error}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as error:  # pylint: disable=broad-exception-caught
        logger.exception(f"Internal error: {error}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
