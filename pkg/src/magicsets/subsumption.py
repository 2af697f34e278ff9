"""Removal of subsumed rules.

A rule r subsumes r' when some substitution σ of r's variables gives
H(r)σ = H(r') and B(r)σ ⊆ B(r').  Pairs are prefiltered with a 64-bit
signature: if ``hash(r) & hash(r') != hash(r)`` then r cannot subsume r'.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .core import Aggregate, Atom, Const, Literal, Program, Rule, Term, Var

# field widths, most significant first: head preds, head consts,
# B+/aggregate preds, B+/aggregate consts, B- preds, B- consts
HASH_LAYOUT = (8, 8, 16, 16, 8, 8)

Binding = tuple[Var, Term]
Substitution = frozenset  # of Binding

_X = Var("X")
FAILED: Substitution = frozenset({(_X, Const(0)), (_X, Const(1))})

# stands for the ':' separator in a flattened aggregate
_COLON = Const(-1)


def _fold(ids: Iterable[int], width: int) -> int:
    mask = (1 << width) - 1
    out = 0
    for i in ids:
        out |= i & mask
    return out


def _element_ids(elements: Iterable[Union[Atom, Literal, Aggregate]]) -> tuple[list[int], list[int]]:
    preds, consts = [], []
    for e in elements:
        if isinstance(e, Atom):
            atom, extra = e, ()
        elif isinstance(e, Literal):
            atom, extra = e.atom, ()
        else:
            atom, extra = e.atom, (*e.head_terms, e.guard)
        preds.append(atom.pred)
        for t in (*atom.args, *extra):
            if isinstance(t, Const):
                consts.append(t.id)
    return preds, consts


def rule_hash(rule: Rule, layout: tuple[int, ...] = HASH_LAYOUT) -> int:
    hp, hc = _element_ids([rule.head])
    pp, pc = _element_ids([*rule.positive, *rule.aggregates])
    np_, nc = _element_ids(rule.negative)
    value = 0
    for ids, width in zip((hp, hc, pp, pc, np_, nc), layout):
        value = (value << width) | _fold(ids, width)
    return value


def format_hash(value: int, layout: tuple[int, ...] = HASH_LAYOUT) -> str:
    """Binary fields separated by spaces, most significant first."""
    fields = []
    shift = sum(layout)
    for width in layout:
        shift -= width
        fields.append(format((value >> shift) & ((1 << width) - 1), f"0{width}b"))
    return " ".join(fields)


def is_function(sigma: Substitution) -> bool:
    seen: dict[Var, Term] = {}
    for v, t in sigma:
        if seen.setdefault(v, t) != t:
            return False
    return True


def _terms(e: Union[Atom, Literal, Aggregate]) -> tuple[str, int, tuple]:
    if isinstance(e, Atom):
        return "+", e.pred, e.args
    if isinstance(e, Literal):
        return ("-" if e.negated else "+"), e.atom.pred, e.atom.args
    flat = (*e.head_terms, _COLON, *e.atom.args, e.guard)
    return "#" + e.op, e.atom.pred, flat


def one_way_unify(e: Union[Atom, Literal, Aggregate], e2: Union[Atom, Literal, Aggregate]) -> Substitution:
    """Bindings mapping the variables of ``e`` onto ``e2``.

    Variables of ``e2`` are treated as constants.  Returns :data:`FAILED`
    (a non-functional binding set) when the two cannot match; the result may
    also be non-functional when a repeated variable of ``e`` meets different
    terms.
    """
    kind, pred, ts = _terms(e)
    kind2, pred2, ts2 = _terms(e2)
    if kind != kind2 or pred != pred2 or len(ts) != len(ts2):
        return FAILED
    out = set()
    for t, t2 in zip(ts, ts2):
        if isinstance(t, Const):
            if t != t2:
                return FAILED
        else:
            out.add((t, t2))
    return frozenset(out)


def _local_vars(rule: Rule) -> frozenset[Var]:
    g = rule.global_variables()
    return frozenset(v for a in rule.aggregates for v in a.variables() if v not in g)


def _admissible(sigma: Substitution, locals_r: frozenset, locals_r2: frozenset) -> bool:
    """σ is a function, and maps aggregate-local variables injectively onto
    aggregate-local variables (anything else changes what is summed)."""
    if not is_function(sigma):
        return False
    images: dict[Term, Var] = {}
    for v, t in sigma:
        if v in locals_r:
            if t not in locals_r2 or images.setdefault(t, v) != v:
                return False
    return True


def subsumes(r: Rule, r2: Rule) -> bool:
    """Depth-first search over partial substitutions.

    Each state carries the body elements of ``r`` still to be matched; the
    first of them is matched against every element of ``r2``'s body.
    """
    locals_r, locals_r2 = _local_vars(r), _local_vars(r2)
    stack = [(one_way_unify(r.head, r2.head), r.body)]
    while stack:
        sigma, rest = stack.pop()
        if not _admissible(sigma, locals_r, locals_r2):
            continue
        if not rest:
            return True
        first, tail = rest[0], rest[1:]
        for e2 in r2.body:
            stack.append((sigma | one_way_unify(first, e2), tail))
    return False


@dataclass
class SubsumptionStats:
    candidates: int = 0
    hash_pruned: int = 0
    checks: int = 0
    removed: int = 0

    def lines(self) -> list[str]:
        return [
            f"candidates={self.candidates}",
            f"hash_pruned={self.hash_pruned}",
            f"checks={self.checks}",
            f"removed={self.removed}",
        ]


def eliminate_subsumed(program: Program) -> tuple[Program, SubsumptionStats]:
    """Drop every rule subsumed by another surviving rule.

    Pairs are visited in program order with the subsumer in the outer loop,
    so of two mutually subsuming rules the earlier one survives.
    """
    rules = program.rules
    hashes = [rule_hash(r) for r in rules]
    alive = [True] * len(rules)
    stats = SubsumptionStats()
    for i, r in enumerate(rules):
        if not alive[i]:
            continue
        h = hashes[i]
        for j, r2 in enumerate(rules):
            if i == j or not alive[j]:
                continue
            stats.candidates += 1
            if h & hashes[j] != h:
                stats.hash_pruned += 1
                continue
            stats.checks += 1
            if subsumes(r, r2):
                alive[j] = False
                stats.removed += 1
    return program.with_rules(r for r, keep in zip(rules, alive) if keep), stats
