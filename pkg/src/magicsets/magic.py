"""Magic-sets rewriting.

``ms`` is the classic left-to-right rewriting.  ``ms_rs`` restricts the
sideways information passing so that no two SCCs of the input program are
merged (and, as a consequence, a stratified input stays stratified).
``full_free`` drops rule copies made redundant by an all-free adornment.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from .core import (
    Aggregate,
    Atom,
    BodyElement,
    Const,
    Literal,
    Program,
    Rule,
    SymbolTable,
    Var,
    canonical_key,
    classify_predicates,
)
from .depgraph import SccMonitor, monitor_node

HEAD = -1

Adornment = str


class AdornedPredicate(NamedTuple):
    pred: int
    adornment: Adornment


class UnknownQueryPredicate(ValueError):
    pass


@dataclass(frozen=True)
class Sips:
    """Strict partial order over {head} U body plus the bound-variable map.

    Elements are body indices; the head is ``HEAD`` (-1).
    """

    order: frozenset[tuple[int, int]]
    bnd: dict[int, frozenset[Var]]

    def precedes(self, a: int, b: int) -> bool:
        return (a, b) in self.order

    def predecessors(self, j: int) -> list[int]:
        """Body elements preceding ``j``, in textual order."""
        return sorted(i for i, k in self.order if k == j and i != HEAD)


@dataclass
class RewriteStats:
    adorned: int = 0
    modified_rules: int = 0
    magic_rules: int = 0
    discarded_sips: int = 0

    def lines(self) -> list[str]:
        return [
            f"adorned={self.adorned}",
            f"modified_rules={self.modified_rules}",
            f"magic_rules={self.magic_rules}",
            f"discarded_sips={self.discarded_sips}",
        ]


@dataclass
class RewriteResult:
    program: Program
    stats: RewriteStats
    # (rule, head adornment, sips actually used for each magic rule's body element)
    sips: list[tuple[Rule, Adornment, int, Sips]] = field(default_factory=list)
    monitor: SccMonitor | None = None


def query_adornment(query: Atom) -> Adornment:
    return "".join("b" if isinstance(t, Const) else "f" for t in query.args)


def magic_atom(atom: Atom, adornment: Adornment, symbols: SymbolTable) -> Atom:
    if len(adornment) != atom.arity:
        raise ValueError(f"adornment {adornment!r} does not fit arity {atom.arity}")
    pred = symbols.magic(atom.pred, adornment)
    return Atom(pred, tuple(t for t, s in zip(atom.args, adornment) if s == "b"))


def _vars(e: BodyElement | Atom) -> frozenset[Var]:
    return frozenset(e.variables())


def _aggregate_inputs(rule: Rule, agg: Aggregate) -> frozenset[Var]:
    """Global variables an assignment aggregate needs bound before it can
    compute its value."""
    return frozenset(v for v in agg.variables() if v in rule.global_variables()) - {agg.guard}


def default_sips(rule: Rule, adornment: Adornment) -> Sips:
    """Left-to-right SIPS.

    Positive literals bind all their variables and precede everything after
    them.  An assignment aggregate binds its assignment variable, and precedes
    later elements only once its other global variables are already bound;
    otherwise the magic rule would evaluate it with those variables unbound.
    """
    if len(adornment) != rule.head.arity:
        raise ValueError("adornment does not fit the rule head")
    head_bound = frozenset(
        t for t, s in zip(rule.head.args, adornment) if s == "b" and isinstance(t, Var)
    )
    bnd: dict[int, frozenset[Var]] = {HEAD: head_bound}
    passes: list[bool] = []
    bound = set(head_bound)
    for e in rule.body:
        if isinstance(e, Literal):
            if e.negated:
                bnd[len(passes)] = frozenset()
                passes.append(False)
            else:
                bnd[len(passes)] = _vars(e)
                bound |= _vars(e)
                passes.append(True)
        else:
            x = e.assignment_var
            if x is not None and _aggregate_inputs(rule, e) <= bound:
                bnd[len(passes)] = frozenset({x})
                bound.add(x)
                passes.append(True)
            else:
                bnd[len(passes)] = frozenset()
                passes.append(False)
    n = len(rule.body)
    order = {(HEAD, j) for j in range(n)}
    order |= {(i, j) for i in range(n) for j in range(i + 1, n) if passes[i]}
    return Sips(frozenset(order), bnd)


def check_sips(rule: Rule, adornment: Adornment, sips: Sips) -> list[str]:
    """Violations of the SIPS conditions (empty list means valid)."""
    problems = []
    n = len(rule.body)
    for j in range(n):
        if not sips.precedes(HEAD, j):
            problems.append(f"head does not precede element {j}")
    for i, j in sips.order:
        if i == j:
            problems.append(f"order is not irreflexive at {i}")
        if i == HEAD:
            continue
        e = rule.body[i]
        if not ((isinstance(e, Literal) and not e.negated)
                or (isinstance(e, Aggregate) and e.assignment_var is not None)):
            problems.append(f"element {i} precedes {j} but cannot create bindings")
    head_bound = {t for t, s in zip(rule.head.args, adornment) if s == "b" and isinstance(t, Var)}
    if not head_bound <= sips.bnd.get(HEAD, frozenset()):
        problems.append("bnd(head) misses bound head variables")
    for i, e in enumerate(rule.body):
        b = sips.bnd.get(i, frozenset())
        if not b <= _vars(e):
            problems.append(f"bnd({i}) names variables not in the element")
        if isinstance(e, Literal) and e.negated and b:
            problems.append(f"negative literal {i} binds variables")
        if isinstance(e, Aggregate):
            x = e.assignment_var
            if x is None and b:
                problems.append(f"aggregate {i} without assignment binds variables")
            if x is not None and not b <= {x}:
                problems.append(f"aggregate {i} binds more than its assignment variable")
    return problems


class _Emitter:
    """Ordered rule set, deduplicated up to variable renaming."""

    def __init__(self) -> None:
        self.rules: dict[tuple, Rule] = {}

    def add(self, rule: Rule) -> bool:
        key = canonical_key(rule)
        if key in self.rules:
            return False
        self.rules[key] = rule
        return True


def _rewrite(query: Atom, program: Program, restricted: bool) -> RewriteResult:
    symbols = program.symbols
    extensional, intentional = classify_predicates(program)
    if query.pred not in extensional | intentional:
        raise UnknownQueryPredicate(
            f"query predicate {symbols.pred_name(query.pred)}/{query.arity} does not occur in the program")
    stats = RewriteStats()
    if query.pred in extensional:
        return RewriteResult(program.with_rules(program.rules), stats)

    by_head: dict[int, list[Rule]] = {}
    for r in program.rules:
        by_head.setdefault(r.head.pred, []).append(r)

    out = _Emitter()
    monitor = None
    if restricted:
        monitor = SccMonitor(program)
        for u, v in _magic_arcs(query.pred, by_head, intentional):
            monitor.add(u, v)
    log: list[tuple[Rule, Adornment, int, Sips]] = []

    s0 = query_adornment(query)
    out.add(Rule(magic_atom(query, s0, symbols)))
    start = AdornedPredicate(query.pred, s0)
    produced = {start}
    todo = deque([start])
    stats.adorned = 1

    while todo:
        q, s = todo.popleft()
        for r in by_head.get(q, ()):
            guard = Literal(magic_atom(r.head, s, symbols))
            if out.add(Rule(r.head, (guard,) + r.body)):
                stats.modified_rules += 1
            sips = default_sips(r, s)
            for j, e in enumerate(r.body):
                p = e.atom.pred
                if p not in intentional:
                    continue
                if monitor is None:
                    before = sips.predecessors(j)
                    used = sips
                else:
                    before = _restrict(r, sips, j, monitor, p, q, stats)
                    used = Sips(
                        frozenset({(HEAD, k) for k in range(len(r.body))} | {(i, j) for i in before}),
                        sips.bnd,
                    )
                bound = set(sips.bnd[HEAD])
                for i in before:
                    bound |= sips.bnd[i]
                s2 = "".join(
                    "b" if isinstance(t, Const) or t in bound else "f" for t in e.atom.args
                )
                head = magic_atom(e.atom, s2, symbols)
                if out.add(Rule(head, (guard,) + tuple(r.body[i] for i in before))):
                    stats.magic_rules += 1
                log.append((r, s, j, used))
                ap = AdornedPredicate(p, s2)
                if ap not in produced:
                    produced.add(ap)
                    todo.append(ap)
                    stats.adorned += 1

    rules = list(out.rules.values())
    rules.extend(r for r in program.rules if r.is_fact and r.head.pred in extensional)
    return RewriteResult(program.with_rules(rules), stats, log, monitor)


def _magic_arcs(start: int, by_head: dict[int, list[Rule]], intentional: set[int]):
    """Every arc m#p -> m#q the rewriting will create, one per rule for q
    with an intentional body predicate p, over the predicates reachable from
    the query.  Each of them is going to be added whatever bindings are
    chosen, so they are put in the monitor before any binding is tested;
    otherwise an arc added late could close a cycle through a binding arc
    that was accepted earlier."""
    seen = {start}
    stack = [start]
    arcs = []
    while stack:
        q = stack.pop()
        for r in by_head.get(q, ()):
            for p in r.body_predicates():
                if p not in intentional:
                    continue
                arcs.append((monitor_node(p), monitor_node(q)))
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
    return arcs


def _restrict(rule: Rule, sips: Sips, j: int, monitor: SccMonitor,
              p: int, q: int, stats: RewriteStats) -> list[int]:
    """Keep the predecessors of body element ``j`` whose binding arcs leave
    the monitored SCC structure intact, testing them in textual order."""
    mp = monitor_node(p)
    monitor.add(mp, monitor_node(q))
    kept: list[int] = []
    bound = set(sips.bnd[HEAD])
    for i in sips.predecessors(j):
        e = rule.body[i]
        if isinstance(e, Aggregate) and not _aggregate_inputs(rule, e) <= bound:
            # its inputs were bound by a dropped literal
            stats.discarded_sips += 1
            continue
        weight = 1 if isinstance(e, Aggregate) else 0
        if monitor.commit(mp, e.atom.pred, weight):
            kept.append(i)
            bound |= sips.bnd[i]
        else:
            stats.discarded_sips += 1
    return kept


def ms(query: Atom, program: Program) -> RewriteResult:
    return _rewrite(query, program, restricted=False)


def ms_rs(query: Atom, program: Program) -> RewriteResult:
    return _rewrite(query, program, restricted=True)


def _all_free(adornment: str) -> bool:
    return "b" not in adornment


def full_free(program: Program) -> Program:
    """Collapse every adorned version of a predicate that also has an
    all-free adornment: rules guarded by the bound versions go away and the
    magic rules defining them now define the all-free magic atom."""
    symbols = program.symbols
    flagged: set[int] = set()
    for r in program.rules:
        for a in r.atoms():
            info = symbols.magic_info(a.pred)
            if info is not None and _all_free(info[1]):
                flagged.add(info[0])
    if not flagged:
        return program.with_rules(program.rules)

    def collapsible(pred: int) -> bool:
        info = symbols.magic_info(pred)
        return info is not None and info[0] in flagged and not _all_free(info[1])

    seen = _Emitter()
    rules: list[Rule] = []
    for r in program.rules:
        if r.is_fact and not symbols.is_magic(r.head.pred):
            rules.append(r)
            continue
        if any(collapsible(a.pred) for e in r.body for a in e.atoms()):
            continue
        if collapsible(r.head.pred):
            orig, adornment = symbols.magic_info(r.head.pred)
            r = Rule(Atom(symbols.magic(orig, "f" * len(adornment))), r.body)
        if seen.add(r):
            rules.append(r)
    return program.with_rules(rules)
