"""Command-line front end.

    magicsets solve   FILE... --query ATOM [options]
    magicsets rewrite FILE... --query ATOM [options]
    magicsets gen     FAMILY SIZE [--base K]

``solve`` and ``rewrite`` also accept ``--gen FAMILY SIZE`` instead of files.
Exit status: 0 success, 1 unsafe or unstratifiable program, 2 parse or usage
error.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from .core import Atom, Program, Rule, classify_predicates
from .depgraph import UnstratifiableError, build_dependency_graph, to_dot
from .evaluator import EvaluationError, answer, evaluate, format_answers
from .families import DEFAULT_QUERY, FAMILIES, generate
from .magic import RewriteStats, UnknownQueryPredicate, full_free, ms, ms_rs
from .parser import ParseError, parse_program, parse_query, render, safety_report
from .subsumption import SubsumptionStats, eliminate_subsumed

MODES = ("none", "ms", "ms-rs")


@dataclass
class PipelineConfig:
    rewrite: str = "ms-rs"
    full_free: bool = True
    subsumption: bool = True
    stats: bool = False
    dump_rewritten: bool = False
    dump_depgraph: bool = False

    def __post_init__(self) -> None:
        if self.rewrite not in MODES:
            raise ValueError(f"rewrite mode must be one of {MODES}, got {self.rewrite!r}")


@dataclass
class PipelineResult:
    program: Program
    rewrite_stats: RewriteStats | None = None
    subsumption_stats: SubsumptionStats | None = None
    timings: dict[str, float] = field(default_factory=dict)


class UnsafeError(Exception):
    pass


def _dedupe_facts(program: Program) -> tuple[list[Rule], list[Rule]]:
    facts, seen, rules = [], set(), []
    for r in program.rules:
        if r.is_fact:
            key = (r.head.pred, r.head.args)
            if key not in seen:
                seen.add(key)
                facts.append(r)
        else:
            rules.append(r)
    return rules, facts


def simplify(program: Program) -> tuple[Program, SubsumptionStats]:
    """Subsumption elimination over the proper rules; facts are only
    deduplicated (a rule with a non-empty body never subsumes a fact, and a
    ground fact subsumes exactly its duplicates)."""
    rules, facts = _dedupe_facts(program)
    reduced, stats = eliminate_subsumed(program.with_rules(rules))
    return program.with_rules([*reduced.rules, *facts]), stats


def split_database(program: Program, intentional: set[int] | None = None) -> tuple[Program, list[Rule]]:
    """Separate the facts of predicates no rule defines.  Rewriting never
    touches them, so they skip the rewriting stages and are appended to the
    result unchanged."""
    if intentional is None:
        _, intentional = classify_predicates(program)
    kept, database = [], []
    for r in program.rules:
        (kept if r.body or r.head.pred in intentional else database).append(r)
    return program.with_rules(kept), database


def rewrite_program(program: Program, query: Atom, config: PipelineConfig) -> PipelineResult:
    for _, verdict in safety_report(program):
        names = ", ".join(f"{name} ({kind})" for name, kind in verdict.unsafe)
        raise UnsafeError(f"unsafe rule: variables {names}")
    result = PipelineResult(program)
    if config.rewrite == "none":
        return result
    extensional, intentional = classify_predicates(program)
    if query.pred not in extensional | intentional:
        name = program.symbols.pred_name(query.pred)
        raise UnknownQueryPredicate(f"query predicate {name}/{query.arity} does not occur in the program")
    if query.pred not in intentional:
        # only facts can match the query; the rewriting would be the identity
        return result
    t0 = time.perf_counter()
    rules, database = split_database(program, intentional)
    rewritten = (ms if config.rewrite == "ms" else ms_rs)(query, rules)
    out = rewritten.program
    if config.full_free:
        out = full_free(out)
    t1 = time.perf_counter()
    result.rewrite_stats = rewritten.stats
    result.timings["rewrite_ms"] = (t1 - t0) * 1000
    if config.subsumption:
        out, result.subsumption_stats = simplify(out)
        result.timings["subsumption_ms"] = (time.perf_counter() - t1) * 1000
    result.program = out.with_rules([*out.rules, *database])
    return result


def solve(program: Program, query: Atom, config: PipelineConfig) -> tuple[set[tuple], PipelineResult, list[str]]:
    """Run the pipeline and evaluate.  Returns the answers, the pipeline
    result, and the stats lines."""
    result = rewrite_program(program, query, config)
    t0 = time.perf_counter()
    model, strata = evaluate(result.program)
    answers = answer(query, result.program, model)
    result.timings["evaluation_ms"] = (time.perf_counter() - t0) * 1000
    lines = stats_lines(config, program, result)
    lines += [f"strata={len(strata)}", f"model_atoms={len(model)}", f"answers={len(answers)}"]
    lines += [f"{k}={v:.3f}" for k, v in sorted(result.timings.items())]
    return answers, result, lines


def stats_lines(config: PipelineConfig, original: Program, result: PipelineResult) -> list[str]:
    lines = [
        f"rewrite={config.rewrite}",
        f"rules_in={len(original.rules)}",
        f"rules_out={len(result.program.rules)}",
    ]
    rs = result.rewrite_stats or RewriteStats()
    ss = result.subsumption_stats or SubsumptionStats()
    return lines + rs.lines() + ss.lines()


# argument handling ---------------------------------------------------------

def _add_pipeline_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("files", nargs="*", help="program files ('-' reads standard input)")
    p.add_argument("--query", help="query atom, e.g. 'c(0,Y)'")
    p.add_argument("--gen", nargs=2, metavar=("FAMILY", "SIZE"),
                   help="use a generated benchmark program instead of files")
    p.add_argument("--base", type=int, default=1_000_000, help="fact range base for --gen")
    p.add_argument("--rewrite", choices=MODES, default="ms-rs")
    p.add_argument("--no-fullfree", action="store_true", help="skip the all-free collapse")
    p.add_argument("--no-subsumption", action="store_true", help="skip subsumed-rule removal")
    p.add_argument("--stats", action="store_true", help="print key=value statistics to stderr")
    p.add_argument("--dump-rewritten", action="store_true",
                   help="print the rewritten program to stderr")
    p.add_argument("--dump-depgraph", action="store_true",
                   help="print the rewritten program's dependency graph (DOT) to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magicsets", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_pipeline_options(sub.add_parser("solve", help="answer a query"))
    _add_pipeline_options(sub.add_parser("rewrite", help="print the rewritten program"))
    gen = sub.add_parser("gen", help="print a benchmark program")
    gen.add_argument("family", choices=FAMILIES)
    gen.add_argument("size", type=int)
    gen.add_argument("--base", type=int, default=1_000_000)
    return parser


class _UsageError(Exception):
    pass


def _load(args: argparse.Namespace) -> tuple[str, str]:
    if args.gen:
        if args.files:
            raise _UsageError("give either program files or --gen, not both")
        family, size = args.gen
        try:
            text = generate(family, int(size), args.base)
        except ValueError as exc:
            raise _UsageError(str(exc)) from None
        return text, args.query or DEFAULT_QUERY
    if not args.files:
        raise _UsageError("no program files given")
    if not args.query:
        raise _UsageError("--query is required")
    chunks = []
    for name in args.files:
        if name == "-":
            chunks.append(sys.stdin.read())
        else:
            with open(name, encoding="utf-8") as fh:
                chunks.append(fh.read())
    return "\n".join(chunks), args.query


def _config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        rewrite=args.rewrite,
        full_free=not args.no_fullfree,
        subsumption=not args.no_subsumption,
        stats=args.stats,
        dump_rewritten=args.dump_rewritten,
        dump_depgraph=args.dump_depgraph,
    )


def _dumps(config: PipelineConfig, program: Program, err: TextIO) -> None:
    if config.dump_rewritten:
        err.write(render(program))
    if config.dump_depgraph:
        err.write(to_dot(build_dependency_graph(program), program.symbols))


def main(argv: Sequence[str] | None = None, out: TextIO | None = None,
         err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0

    if args.command == "gen":
        try:
            out.write(generate(args.family, args.size, args.base))
        except ValueError as exc:
            err.write(f"error: {exc}\n")
            return 2
        return 0

    try:
        text, query_text = _load(args)
        program = parse_program(text)
        query = parse_query(query_text, program.symbols)
    except (ParseError, _UsageError) as exc:
        err.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 2
    config = _config(args)

    try:
        if args.command == "rewrite":
            result = rewrite_program(program, query, config)
            out.write(render(result.program))
            _dumps(config, result.program, err)
            if config.stats:
                err.write("\n".join(stats_lines(config, program, result)) + "\n")
            return 0
        answers, result, lines = solve(program, query, config)
    except UnknownQueryPredicate as exc:
        err.write(f"error: {exc}\n")
        return 2
    except UnstratifiableError as exc:
        err.write(f"error: {exc}\n")
        return 1
    except (UnsafeError, EvaluationError) as exc:
        err.write(f"error: {exc}\n")
        return 1
    _dumps(config, result.program, err)
    name = program.symbols.pred_name(query.pred)
    for line in format_answers(name, answers):
        out.write(line + "\n")
    if config.stats:
        err.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
