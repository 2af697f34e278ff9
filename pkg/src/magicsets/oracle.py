"""Slow reference implementations used to check the engine.

Nothing here shares code with the join machinery in :mod:`evaluator`:
programs are grounded over the active domain by brute force, and stable
models are checked directly against the FLP-reduct definition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

from .core import Aggregate, Atom, Const, Program, Rule, SymbolTable, Term, Var
from .depgraph import stratify

GroundAtom = tuple[int, tuple[int, ...]]


class OracleSizeError(Exception):
    pass


@dataclass(frozen=True)
class GroundAggregate:
    head_terms: tuple[Term, ...]  # local variables remain
    atom: Atom
    op: str
    guard: int


@dataclass(frozen=True)
class GroundRule:
    head: GroundAtom
    positive: tuple[GroundAtom, ...] = ()
    negative: tuple[GroundAtom, ...] = ()
    aggregates: tuple[GroundAggregate, ...] = ()


def _sub(t: Term, sigma: dict[Var, int]) -> Term:
    if isinstance(t, Var) and t in sigma:
        return Const(sigma[t])
    return t


def _ground_atom(a: Atom, sigma: dict[Var, int]) -> GroundAtom:
    return a.pred, tuple(t.id if isinstance(t, Const) else sigma[t] for t in a.args)


def ground_rule(rule: Rule, sigma: dict[Var, int]) -> GroundRule:
    pos, neg, aggs = [], [], []
    for e in rule.body:
        if isinstance(e, Aggregate):
            g = _sub(e.guard, sigma)
            aggs.append(GroundAggregate(
                tuple(_sub(t, sigma) for t in e.head_terms),
                Atom(e.atom.pred, tuple(_sub(t, sigma) for t in e.atom.args)),
                e.op,
                g.id,
            ))
        elif e.negated:
            neg.append(_ground_atom(e.atom, sigma))
        else:
            pos.append(_ground_atom(e.atom, sigma))
    return GroundRule(_ground_atom(rule.head, sigma), tuple(pos), tuple(neg), tuple(aggs))


def naive_ground(program: Program, domain: Iterable[int] | None = None,
                 limit: int = 200_000) -> list[GroundRule]:
    """Every instance of every rule with global variables drawn from
    ``domain`` (default: the constants of the program)."""
    dom = sorted(set(program.constants() if domain is None else domain))
    out: list[GroundRule] = []
    for rule in program.rules:
        gvars = sorted(rule.global_variables(), key=lambda v: v.name)
        if len(dom) ** len(gvars) + len(out) > limit:
            raise OracleSizeError(f"grounding would exceed {limit} rules")
        for values in itertools.product(dom, repeat=len(gvars)):
            out.append(ground_rule(rule, dict(zip(gvars, values))))
    return out


def _by_pred(interp: Iterable[GroundAtom]) -> dict[int, list[tuple[int, ...]]]:
    out: dict[int, list[tuple[int, ...]]] = {}
    for p, t in interp:
        out.setdefault(p, []).append(t)
    return out


def aggregate_value(agg: GroundAggregate, index: dict[int, list[tuple[int, ...]]],
                    symbols: SymbolTable) -> int:
    rows = set()
    for t in index.get(agg.atom.pred, ()):
        if len(t) != agg.atom.arity:
            continue
        sigma: dict[Var, int] = {}
        for pat, c in zip(agg.atom.args, t):
            if isinstance(pat, Const):
                if pat.id != c:
                    break
            elif sigma.setdefault(pat, c) != c:
                break
        else:
            rows.add(tuple(x.id if isinstance(x, Const) else sigma[x] for x in agg.head_terms))
    total = 0
    for row in rows:
        v = symbols.value(row[0])
        if not isinstance(v, int):
            raise TypeError(f"summed value must be an integer, got {v!r}")
        total += v
    return total


_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def body_true(rule: GroundRule, interp: set[GroundAtom],
              index: dict[int, list[tuple[int, ...]]], symbols: SymbolTable) -> bool:
    if any(a not in interp for a in rule.positive):
        return False
    if any(a in interp for a in rule.negative):
        return False
    for agg in rule.aggregates:
        guard = symbols.value(agg.guard)
        total = aggregate_value(agg, index, symbols)
        if not isinstance(guard, int):
            # a grounded guard variable may hold a symbol: no integer equals it
            if agg.op not in ("=", "!="):
                raise TypeError(f"aggregate guard must be an integer, got {guard!r}")
            if agg.op == "=":
                return False
            continue
        if not _OPS[agg.op](total, guard):
            return False
    return True


def is_model(ground: list[GroundRule], interp: set[GroundAtom], symbols: SymbolTable) -> bool:
    index = _by_pred(interp)
    return all(r.head in interp or not body_true(r, interp, index, symbols) for r in ground)


def is_stable_model(ground: list[GroundRule], candidate: Iterable[GroundAtom],
                    symbols: SymbolTable, max_nodes: int = 200_000) -> bool:
    """``candidate`` models ``ground`` and no proper subset of it models the
    reduct (the rules whose bodies ``candidate`` makes true).

    Every subset is considered: atoms are assigned in or out one at a time,
    a rule whose body is already decided true forces its head in, and a
    branch dies as soon as it forces out an atom.  ``max_nodes`` bounds the
    search.
    """
    interp = set(candidate)
    index = _by_pred(interp)
    reduct = []
    for r in ground:
        if body_true(r, interp, index, symbols):
            if r.head not in interp:
                return False
            reduct.append(r)
    # negative literals of reduct rules name atoms outside the candidate, so
    # they hold in every subset; a rule is decided once its positive atoms
    # and the candidate atoms of its aggregate predicates are assigned
    by_pred = _by_pred(interp)

    def deps(r: GroundRule) -> set[GroundAtom]:
        out = set(r.positive)
        for agg in r.aggregates:
            out.update((agg.atom.pred, t) for t in by_pred.get(agg.atom.pred, ()))
        return out

    rule_deps = [(r, deps(r)) for r in reduct]
    atoms = sorted(interp)
    budget = [max_nodes]

    def decided_true(r: GroundRule, rdeps: set, inside: set, outside: set) -> bool | None:
        if any(a in outside for a in r.positive):
            return False
        if not all(a in inside or a in outside for a in rdeps):
            return None
        return body_true(r, inside, _by_pred(inside), symbols)

    def search(inside: set, outside: set) -> bool:
        """True if some model of the reduct lies strictly inside ``interp``."""
        budget[0] -= 1
        if budget[0] < 0:
            raise OracleSizeError(f"minimality search exceeded {max_nodes} nodes")
        inside, outside = set(inside), set(outside)
        changed = True
        while changed:
            changed = False
            for r, rdeps in rule_deps:
                if r.head in inside:
                    continue
                if decided_true(r, rdeps, inside, outside):
                    if r.head in outside:
                        return False
                    inside.add(r.head)
                    changed = True
        free = [a for a in atoms if a not in inside and a not in outside]
        if not free:
            return bool(outside) and is_model(reduct, inside, symbols)
        a = free[0]
        return search(inside, outside | {a}) or search(inside | {a}, outside)

    return not search(set(), set())


def naive_model(program: Program, limit: int = 200_000) -> set[GroundAtom]:
    """Stratified model by re-deriving everything until nothing changes.

    The domain starts as the program's constants and grows with the values
    computed by assignment aggregates until it is closed.
    """
    symbols = program.symbols
    domain = set(program.constants())
    strata = stratify(program)
    while True:
        ground = naive_ground(program, domain, limit)
        interp: set[GroundAtom] = set()
        for stratum in strata:
            rules = [r for r in ground if r.head[0] in stratum]
            changed = True
            while changed:
                changed = False
                index = _by_pred(interp)
                for r in rules:
                    if r.head not in interp and body_true(r, interp, index, symbols):
                        interp.add(r.head)
                        changed = True
        index = _by_pred(interp)
        grown = set(domain)
        for r in ground:
            for agg in r.aggregates:
                grown.add(symbols.constant(aggregate_value(agg, index, symbols)))
        if grown == domain:
            return interp
        domain = grown


def sums_under(program: Program, interp: Iterable[GroundAtom], domain: Iterable[int]) -> set[int]:
    """Constants for every aggregate value an instance of the program can
    take under ``interp`` (needed to ground assignment variables)."""
    symbols = program.symbols
    index = _by_pred(interp)
    out = set()
    for r in naive_ground(program, domain):
        for agg in r.aggregates:
            out.add(symbols.constant(aggregate_value(agg, index, symbols)))
    return out


def _apply(e, sigma: dict[Var, Term]):
    def t(x: Term) -> Term:
        return sigma.get(x, x) if isinstance(x, Var) else x

    if isinstance(e, Atom):
        return Atom(e.pred, tuple(t(x) for x in e.args))
    if isinstance(e, Aggregate):
        return Aggregate(tuple(t(x) for x in e.head_terms), _apply(e.atom, sigma), e.op, t(e.guard))
    return type(e)(_apply(e.atom, sigma), e.negated)


def subsumes_by_enumeration(r: Rule, r2: Rule) -> bool:
    """Try every map from the variables of ``r`` to the terms of ``r2``.

    A variable local to an aggregate of ``r`` must go to a variable local to
    an aggregate of ``r2``, and no two of them to the same one.
    """
    vars_ = r.variables()
    g, g2 = r.global_variables(), r2.global_variables()
    locals_r2 = {v for v in r2.variables() if v not in g2}
    targets = sorted({x for e in (r2.head, *r2.body) for x in _element_terms(e)},
                     key=lambda x: (isinstance(x, Var), getattr(x, "id", 0), getattr(x, "name", "")))
    body2 = set(r2.body)
    for image in itertools.product(targets, repeat=len(vars_)):
        sigma = dict(zip(vars_, image))
        locals_img = [sigma[v] for v in vars_ if v not in g]
        if any(x not in locals_r2 for x in locals_img) or len(set(locals_img)) != len(locals_img):
            continue
        if _apply(r.head, sigma) != r2.head:
            continue
        if all(_apply(e, sigma) in body2 for e in r.body):
            return True
    return False


def _element_terms(e) -> tuple[Term, ...]:
    if isinstance(e, Atom):
        return e.args
    if isinstance(e, Aggregate):
        return (*e.head_terms, *e.atom.args, e.guard)
    return e.atom.args


__all__ = [
    "subsumes_by_enumeration",
    "GroundAggregate",
    "GroundRule",
    "OracleSizeError",
    "aggregate_value",
    "ground_rule",
    "is_model",
    "is_stable_model",
    "naive_ground",
    "naive_model",
    "sums_under",
]
