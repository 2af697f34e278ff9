"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed as they happen and
again in the terminal summary.
"""

from __future__ import annotations

import gc
import io
import random
import statistics
import time

import pytest

from magicsets.cli import PipelineConfig, main, rewrite_program, simplify, solve
from magicsets.core import SymbolTable
from magicsets.depgraph import (
    UnstratifiableError,
    build_dependency_graph,
    is_stratified,
    sccs,
)
from magicsets.evaluator import answer, stable_model
from magicsets.families import generate
from magicsets.magic import full_free, ms, ms_rs
from magicsets.oracle import (
    is_stable_model,
    naive_ground,
    subsumes_by_enumeration,
    sums_under,
)
from magicsets.parser import parse_program, parse_query
from magicsets.random_programs import random_program, random_rule_text, specialise
from magicsets.subsumption import eliminate_subsumed, rule_hash, subsumes

from conftest import PI1, PI1_MS, PI1_MS_RS, PI2, PI3, SELF_NEG_MAGIC, SHOP, golden, keys, pred

RESULTS: list[str] = []
POOL_SIZE = 500


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def pool(n: int = POOL_SIZE):
    for seed in range(n):
        yield random_program(random.Random(seed))


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    return main(list(argv), out, err), out.getvalue(), err.getvalue()


# 1 ---------------------------------------------------------------------------

def test_criterion_1_golden_rewriting(tmp_path):
    path = tmp_path / "pi1.lp"
    path.write_text(PI1)
    start = time.perf_counter()
    outcomes = []
    for mode, expected in (("ms", PI1_MS), ("ms-rs", PI1_MS_RS)):
        code, out, _ = cli("rewrite", str(path), "--query", "c(0,Y)", "--rewrite", mode,
                           "--no-fullfree", "--no-subsumption")
        prog = parse_program(out, allow_magic=True)
        outcomes.append(code == 0 and keys(prog) == golden(expected, prog.symbols)
                        and len(prog.rules) == len(golden(expected, SymbolTable())))
    elapsed = time.perf_counter() - start
    report(1, all(outcomes) and elapsed < 1.0,
           f"ms golden: {outcomes[0]}, ms-rs golden: {outcomes[1]}, {elapsed:.3f}s")


# 2 ---------------------------------------------------------------------------

def _contained(prog, out) -> bool:
    original = sccs(build_dependency_graph(prog))
    preds = prog.predicates()
    return all(not (c & preds) or any((c & preds) <= o for o in original)
               for c in sccs(build_dependency_graph(out)))


def test_criterion_2_cycle_prevention():
    prog = parse_program(PI1)
    q = parse_query("c(0,Y)", prog.symbols)
    a, b = pred(prog, "a", 2), pred(prog, "b", 1)
    classic = sccs(build_dependency_graph(ms(q, prog).program))
    merged = any({a, b} <= c for c in classic)
    restricted = sccs(build_dependency_graph(ms_rs(q, prog).program))
    originals = prog.predicates()
    singletons = all(len(c & originals) <= 1 for c in restricted)
    violations = 0
    for inst in pool():
        p, query = inst.parse()
        if not _contained(p, ms_rs(query, p).program):
            violations += 1
    report(2, merged and singletons and violations == 0,
           f"ms merges a,b: {merged}; ms-rs singletons: {singletons}; "
           f"violations {violations}/{POOL_SIZE}")


# 3 ---------------------------------------------------------------------------

def test_criterion_3_stratification_closure():
    verdicts = {}
    for name, text in (("pi2", PI2), ("pi3", PI3)):
        prog = parse_program(text)
        q = parse_query("c(0,Y)", prog.symbols)
        verdicts[name] = (
            is_stratified(build_dependency_graph(ms_rs(q, prog).program)),
            is_stratified(build_dependency_graph(ms(q, prog).program)),
        )
    ok = all(rs and not classic for rs, classic in verdicts.values())
    report(3, ok, "  ".join(f"{k}: ms-rs stratified={v[0]}, ms stratified={v[1]}"
                            for k, v in verdicts.items()))


# 4 ---------------------------------------------------------------------------

PIPELINES = {
    "none": PipelineConfig("none"),
    "ms": PipelineConfig("ms", full_free=False, subsumption=False),
    "ms-rs": PipelineConfig("ms-rs", full_free=False, subsumption=False),
    "ms-rs+ff": PipelineConfig("ms-rs", full_free=True, subsumption=False),
    "ms-rs+ff+sub": PipelineConfig("ms-rs", full_free=True, subsumption=True),
}


def test_criterion_4_query_equivalence():
    mismatches, skipped, compared = 0, 0, 0
    for inst in pool():
        prog, q = inst.parse()
        reference = None
        for name, config in PIPELINES.items():
            try:
                got, _, _ = solve(prog, q, config)
            except UnstratifiableError:
                assert name == "ms", f"{name} produced an unstratified program"
                skipped += 1
                continue
            if reference is None:
                reference = got
            elif got != reference:
                mismatches += 1
            compared += 1
    report(4, mismatches == 0,
           f"{mismatches} mismatches over {compared} pipeline runs on {POOL_SIZE} programs "
           f"({skipped} unstratified ms outputs skipped)")


# 5 ---------------------------------------------------------------------------

def test_criterion_5_full_free_golden():
    prog = parse_program(SELF_NEG_MAGIC, allow_magic=True)
    out = full_free(prog)
    expected = golden("m#a#f.\na(X) :- m#a#f, b(X), a(Y), not c(X,Y).", prog.symbols)
    ok = keys(out) == expected and len(out.rules) == 2
    report(5, ok, f"collapsed program has {len(out.rules)} rules, equal to the expected pair: {ok}")


# 6 ---------------------------------------------------------------------------

def _pair(rng, **kw):
    a = random_rule_text(rng, **kw)
    b = specialise(rng, a, **{k: v for k, v in kw.items() if k in ("n_vars", "n_consts")}) \
        if rng.random() < 0.5 else random_rule_text(rng, **kw)
    s = SymbolTable()
    return parse_program(a, s).rules[0], parse_program(b, s).rules[0]


def test_criterion_6_hash_prefilter():
    rng = random.Random(6)
    pruned, false_prunes, subsumed = 0, 0, 0
    for _ in range(10_000):
        r, r2 = _pair(rng)
        holds = subsumes(r, r2)
        subsumed += holds
        if rule_hash(r) & rule_hash(r2) != rule_hash(r):
            pruned += 1
            false_prunes += holds
    s = SymbolTable()
    s.predicate("_", 0), s.predicate("q", 1), s.predicate("p", 2), s.predicate("t", 1)
    s.constant("_"), s.constant("a")
    r, r1, r2 = parse_program("q(X) :- p(X,Y). q(X) :- p(X,a). q(X) :- p(X,Y), t(X).", s).rules
    two = (2,) * 6
    h, h1, h2 = (rule_hash(x, two) for x in (r, r1, r2))
    worked = (h, h1, h2) == (0b010010000000, 0b010010010000, 0b010011000000)
    worked = worked and h1 & h2 != h1 and h & h1 == h
    report(6, false_prunes == 0 and worked,
           f"{false_prunes} false prunes among {pruned} pruned of 10000 pairs "
           f"({subsumed} subsuming); worked example bit-exact: {worked}")


# 7 ---------------------------------------------------------------------------

def test_criterion_7_subsumption_oracle():
    rng = random.Random(7)
    disagreements, positives = 0, 0
    for _ in range(2_000):
        r, r2 = _pair(rng, max_body=3, n_vars=2, n_consts=2)
        fast, slow = subsumes(r, r2), subsumes_by_enumeration(r, r2)
        positives += slow
        disagreements += fast != slow
    report(7, disagreements == 0,
           f"{disagreements} disagreements over 2000 pairs ({positives} subsuming)")


# 8 ---------------------------------------------------------------------------

def test_criterion_8_stable_model_oracle():
    failures, checked = 0, 0
    for inst in pool(200):
        prog = inst.program()
        model = stable_model(prog).as_set()
        domain = prog.constants() | sums_under(prog, model, prog.constants())
        checked += 1
        if not is_stable_model(naive_ground(prog, domain), model, prog.symbols):
            failures += 1
    shop = parse_program(SHOP)
    rendered = set(stable_model(shop).render())
    facts = {"order(o1)", "item(o1,i1,20)", "item(o1,i2,20)", "order(o2)", "cancelled(o2)"}
    shop_ok = rendered == facts | {"total_cost(40)"}
    report(8, failures == 0 and shop_ok,
           f"{failures} non-stable models among {checked}; shop = facts + total_cost(40): {shop_ok}")


# 9 ---------------------------------------------------------------------------

BASE = 100_000
REPEATS = 9


def _timed_solve(prog, q, mode):
    # collector pauses land on whichever run crosses a threshold; keep them out
    gc.collect()
    gc.disable()
    try:
        start = time.perf_counter()
        answers, _, _ = solve(prog, q, PipelineConfig(mode))
        return time.perf_counter() - start, answers
    finally:
        gc.enable()


@pytest.mark.slow
def test_criterion_9_desk_scale_timing():
    rows, ok, slowest = [], True, 0.0
    ratios: list[float] = []
    for size in range(1, 6):
        t0 = time.perf_counter()
        prog = parse_program(generate("pi1", size, BASE))
        q = parse_query("c(0,Y)", prog.symbols)
        parse_time = time.perf_counter() - t0
        best = {"ms": float("inf"), "ms-rs": float("inf")}
        answers = {}
        for i in range(REPEATS):
            # back-to-back pairs in alternating order, so drift hits both modes alike
            pair = {}
            for mode in (("ms", "ms-rs") if i % 2 == 0 else ("ms-rs", "ms")):
                pair[mode], answers[mode] = _timed_solve(prog, q, mode)
                best[mode] = min(best[mode], pair[mode])
                slowest = max(slowest, parse_time + pair[mode])
            ratios.append(pair["ms-rs"] / pair["ms"])
        ok &= answers["ms"] == answers["ms-rs"]
        rows.append(f"size {size}: best ms {best['ms']:.2f}s ms-rs {best['ms-rs']:.2f}s")
    overall = statistics.median(ratios)
    ok &= overall <= 1.05
    rows.append(f"median paired ratio {overall:.3f} over {len(ratios)} pairs")

    families = []
    for family in ("pi2", "pi3"):
        for size in range(1, 6):
            t0 = time.perf_counter()
            prog = parse_program(generate(family, size, BASE))
            q = parse_query("c(0,Y)", prog.symbols)
            solve(prog, q, PipelineConfig("ms-rs"))
            elapsed = time.perf_counter() - t0
            slowest = max(slowest, elapsed)
            rejected = True
            if family == "pi2":
                try:
                    solve(prog, q, PipelineConfig("ms"))
                    rejected = False
                except UnstratifiableError:
                    pass
            ok &= rejected
            families.append(f"{family}/{size} ms-rs {elapsed:.2f}s" + (" (ms rejected)" if family == "pi2" else ""))
    ok &= slowest <= 60.0
    report(9, ok, "; ".join(rows) + f"; slowest run {slowest:.1f}s; " + ", ".join(families))


# 10 --------------------------------------------------------------------------

def _reference_elimination(rules):
    """The eager elimination loop with the enumeration oracle as the test."""
    alive = [True] * len(rules)
    counts = dict(candidates=0, hash_pruned=0, checks=0, removed=0)
    hashes = [rule_hash(r) for r in rules]
    for i, r in enumerate(rules):
        if not alive[i]:
            continue
        for j, r2 in enumerate(rules):
            if i == j or not alive[j]:
                continue
            counts["candidates"] += 1
            if hashes[i] & hashes[j] != hashes[i]:
                counts["hash_pruned"] += 1
                continue
            counts["checks"] += 1
            if subsumes_by_enumeration(r, r2):
                alive[j] = False
                counts["removed"] += 1
    return [r for r, keep in zip(rules, alive) if keep], counts


def test_criterion_10_subsumption_counters():
    rng = random.Random(10)
    mismatches, totals = 0, dict(candidates=0, hash_pruned=0, checks=0, removed=0)
    for _ in range(20):
        s = SymbolTable()
        texts = []
        for _ in range(30):
            base = random_rule_text(rng, max_body=3, n_vars=3)
            texts.append(base)
            if rng.random() < 0.5:
                texts.append(specialise(rng, base))
        rng.shuffle(texts)
        prog = parse_program("\n".join(texts), s)
        kept, stats = eliminate_subsumed(prog)
        expected_rules, expected = _reference_elimination(prog.rules)
        got = dict(candidates=stats.candidates, hash_pruned=stats.hash_pruned,
                   checks=stats.checks, removed=stats.removed)
        mismatches += got != expected or kept.rules != expected_rules
        for k in totals:
            totals[k] += got[k]
    rate = totals["hash_pruned"] / max(1, totals["candidates"])
    report(10, mismatches == 0,
           f"counters equal to the oracle run on 20 corpora: {mismatches == 0}; "
           + ", ".join(f"{k}={v}" for k, v in totals.items()) + f" (pruned {rate:.0%})")
