"""Bottom-up, stratum-by-stratum evaluation of the (unique) stable model."""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from .core import Aggregate, Atom, Const, Literal, Program, Rule, SymbolTable, Var, is_safe
from .depgraph import stratify

Tuple = tuple[int, ...]

COMPARE: dict[str, Callable[[int, int], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    "!=": operator.ne,
    ">=": operator.ge,
    ">": operator.gt,
}


class EvaluationError(Exception):
    pass


class UnsafeProgramError(EvaluationError):
    pass


class AggregateTypeError(EvaluationError, TypeError):
    pass


class Relation:
    """A set of tuples with lazily built hash indexes on bound positions."""

    __slots__ = ("tuples", "indexes")

    def __init__(self, tuples: Iterable[Tuple] = ()) -> None:
        self.tuples: set[Tuple] = set(tuples)
        self.indexes: dict[tuple[int, ...], dict[Tuple, list[Tuple]]] = {}

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, t: Tuple) -> bool:
        return t in self.tuples

    def add(self, t: Tuple) -> bool:
        if t in self.tuples:
            return False
        self.tuples.add(t)
        for positions, index in self.indexes.items():
            index.setdefault(tuple(t[i] for i in positions), []).append(t)
        return True

    def lookup(self, positions: tuple[int, ...], key: Tuple) -> Iterable[Tuple]:
        if not positions:
            return self.tuples
        if len(positions) == len(key) and len(positions) == self._arity():
            return (key,) if key in self.tuples else ()
        index = self.indexes.get(positions)
        if index is None:
            index = {}
            for t in self.tuples:
                index.setdefault(tuple(t[i] for i in positions), []).append(t)
            self.indexes[positions] = index
        return index.get(key, ())

    def _arity(self) -> int:
        for t in self.tuples:
            return len(t)
        return -1


_EMPTY = Relation()


class Interpretation:
    """Ground atoms grouped by predicate id."""

    def __init__(self, symbols: SymbolTable) -> None:
        self.symbols = symbols
        self.relations: dict[int, Relation] = {}

    def relation(self, pred: int) -> Relation:
        rel = self.relations.get(pred)
        if rel is None:
            rel = self.relations[pred] = Relation()
        return rel

    def get(self, pred: int) -> Relation:
        return self.relations.get(pred, _EMPTY)

    def add(self, pred: int, t: Tuple) -> bool:
        return self.relation(pred).add(t)

    def __contains__(self, atom: tuple[int, Tuple]) -> bool:
        pred, t = atom
        return t in self.get(pred)

    def __len__(self) -> int:
        return sum(len(r) for r in self.relations.values())

    def atoms(self) -> Iterator[tuple[int, Tuple]]:
        for pred, rel in self.relations.items():
            for t in rel.tuples:
                yield pred, t

    def as_set(self) -> set[tuple[int, Tuple]]:
        return set(self.atoms())

    def named(self) -> set[tuple[str, tuple]]:
        """Atoms as (predicate name, values): comparable across symbol tables."""
        s = self.symbols
        return {(s.pred_name(p), tuple(s.value(c) for c in t)) for p, t in self.atoms()}

    def render(self) -> list[str]:
        return sorted(format_atom(self.symbols.pred_name(p), [self.symbols.value(c) for c in t])
                      for p, t in self.atoms())


def format_atom(name: str, values: Iterable) -> str:
    values = list(values)
    if not values:
        return name
    return f"{name}({','.join(str(v) for v in values)})"


# compiled rule plans --------------------------------------------------------

@dataclass
class _Step:
    kind: str  # "join", "neg", "agg"
    element: object
    index: int  # body position


def _agg_needs(rule_globals: set[Var], agg: Aggregate) -> set[Var]:
    needs = {v for v in agg.variables() if v in rule_globals}
    return needs


def schedule(rule: Rule, first: Optional[int] = None) -> list[_Step]:
    """Textual order, except that filters (negative literals, aggregates)
    wait until their global variables are bound."""
    globals_ = rule.global_variables()
    remaining = list(range(len(rule.body)))
    bound: set[Var] = set()
    steps: list[_Step] = []

    def ready(i: int) -> Optional[str]:
        e = rule.body[i]
        if isinstance(e, Literal):
            if not e.negated:
                return "join"
            return "neg" if set(e.variables()) <= bound else None
        needs = _agg_needs(globals_, e)
        x = e.assignment_var
        if x is not None and x not in bound:
            needs = needs - {x}
            if x in set(e.atom.variables()) | {t for t in e.head_terms if isinstance(t, Var)}:
                return None
        return "agg" if needs <= bound else None

    if first is not None:
        remaining.remove(first)
        steps.append(_Step("join", rule.body[first], first))
        bound |= set(rule.body[first].variables())
    while remaining:
        for i in remaining:
            kind = ready(i)
            if kind is not None:
                break
        else:
            raise UnsafeProgramError("cannot order rule body: some variables are never bound")
        remaining.remove(i)
        e = rule.body[i]
        steps.append(_Step(kind, e, i))
        if kind == "join":
            bound |= set(e.variables())
        elif kind == "agg" and e.assignment_var is not None:
            bound.add(e.assignment_var)
    return steps


class _Engine:
    def __init__(self, program: Program) -> None:
        self.program = program
        self.symbols = program.symbols
        self.model = Interpretation(program.symbols)
        self.agg_cache: dict[tuple, int] = {}
        self.strata: list[frozenset] = []

    # aggregates ---------------------------------------------------------

    def _int(self, cid: int, what: str) -> int:
        v = self.symbols.value(cid)
        if not isinstance(v, int):
            raise AggregateTypeError(f"{what} must be an integer, got {v!r}")
        return v

    def aggregate_sum(self, agg: Aggregate, binding: dict[Var, int]) -> int:
        positions, key, free = [], [], []
        for i, t in enumerate(agg.atom.args):
            if isinstance(t, Const):
                positions.append(i)
                key.append(t.id)
            elif t in binding:
                positions.append(i)
                key.append(binding[t])
            else:
                free.append((i, t))
        cache_key = (id(agg), tuple(binding.get(v) for v in agg.variables()))
        cached = self.agg_cache.get(cache_key)
        if cached is not None:
            return cached
        seen: set[Tuple] = set()
        for t in self.model.get(agg.atom.pred).lookup(tuple(positions), tuple(key)):
            local: dict[Var, int] = {}
            ok = True
            for i, v in free:
                if local.setdefault(v, t[i]) != t[i]:
                    ok = False
                    break
            if not ok:
                continue
            row = []
            for ht in agg.head_terms:
                if isinstance(ht, Const):
                    row.append(ht.id)
                elif ht in binding:
                    row.append(binding[ht])
                elif ht in local:
                    row.append(local[ht])
                else:
                    raise UnsafeProgramError("aggregate head term variable does not occur in its atom")
            seen.add(tuple(row))
        total = sum(self._int(row[0], "summed value") for row in seen)
        self.agg_cache[cache_key] = total
        return total

    # joins --------------------------------------------------------------

    def solutions(self, steps: list[_Step], delta_step: Optional[int],
                  delta: Optional[Interpretation]) -> Iterator[dict[Var, int]]:
        model = self.model

        def run(k: int, binding: dict[Var, int]) -> Iterator[dict[Var, int]]:
            if k == len(steps):
                yield binding
                return
            step = steps[k]
            e = step.element
            if step.kind == "join":
                atom = e.atom
                source = delta.get(atom.pred) if (delta is not None and k == delta_step) else model.get(atom.pred)
                positions, key, free = [], [], []
                for i, t in enumerate(atom.args):
                    if isinstance(t, Const):
                        positions.append(i)
                        key.append(t.id)
                    elif t in binding:
                        positions.append(i)
                        key.append(binding[t])
                    else:
                        free.append((i, t))
                for tup in source.lookup(tuple(positions), tuple(key)):
                    if free:
                        ext = dict(binding)
                        ok = True
                        for i, v in free:
                            if ext.setdefault(v, tup[i]) != tup[i]:
                                ok = False
                                break
                        if not ok:
                            continue
                    else:
                        ext = binding
                    yield from run(k + 1, ext)
            elif step.kind == "neg":
                t = tuple(a.id if isinstance(a, Const) else binding[a] for a in e.atom.args)
                if t not in model.get(e.atom.pred):
                    yield from run(k + 1, binding)
            else:
                total = self.aggregate_sum(e, binding)
                g = e.guard
                x = e.assignment_var
                if x is not None and x not in binding:
                    ext = dict(binding)
                    ext[x] = self.symbols.constant(total)
                    yield from run(k + 1, ext)
                    return
                gid = g.id if isinstance(g, Const) else binding[g]
                if COMPARE[e.op](total, self._int(gid, "aggregate guard")):
                    yield from run(k + 1, binding)

        yield from run(0, {})

    def heads(self, rule: Rule, steps: list[_Step], delta_step=None, delta=None) -> Iterator[Tuple]:
        args = rule.head.args
        for b in self.solutions(steps, delta_step, delta):
            yield tuple(t.id if isinstance(t, Const) else b[t] for t in args)

    # strata -------------------------------------------------------------

    def run(self) -> Interpretation:
        rules = self.program.rules
        proper = []
        for r in rules:
            if r.body:
                proper.append(r)
                continue
            try:
                # no indexes exist yet, so facts go straight into the tuple sets
                self.model.relation(r.head.pred).tuples.add(tuple(t.id for t in r.head.args))
            except AttributeError:
                raise UnsafeProgramError("fact with variables") from None
        for r in proper:
            if not is_safe(r):
                raise UnsafeProgramError(f"unsafe rule: {is_safe(r).unsafe}")
        by_head: dict[int, list[Rule]] = {}
        for r in proper:
            by_head.setdefault(r.head.pred, []).append(r)
        self.strata = stratify(self.program)
        for stratum in self.strata:
            stratum_rules = [r for p in sorted(stratum) for r in by_head.get(p, ())]
            if stratum_rules:
                self.evaluate_stratum(stratum, stratum_rules)
        return self.model

    def evaluate_stratum(self, stratum: frozenset, rules: list[Rule]) -> None:
        model = self.model
        plans = [(r, schedule(r)) for r in rules]
        recursive = []
        for r in rules:
            rec = [i for i, e in enumerate(r.body)
                   if isinstance(e, Literal) and not e.negated and e.atom.pred in stratum]
            if rec:
                recursive.append((r, [schedule(r, first=i) for i in rec]))

        new = Interpretation(self.symbols)
        for r, steps in plans:
            pred = r.head.pred
            current = model.get(pred)
            for t in self.heads(r, steps):
                if t not in current:
                    new.add(pred, t)
        while len(new):
            for pred, t in new.atoms():
                model.add(pred, t)
            if not recursive:
                break
            delta, new = new, Interpretation(self.symbols)
            for r, variants in recursive:
                pred = r.head.pred
                current = model.get(pred)
                for steps in variants:
                    if not len(delta.get(steps[0].element.atom.pred)):
                        continue
                    for t in self.heads(r, steps, 0, delta):
                        if t not in current:
                            new.add(pred, t)


def stable_model(program: Program) -> Interpretation:
    """The stable model of a safe, stratified program."""
    return _Engine(program).run()


def evaluate(program: Program) -> tuple[Interpretation, list[frozenset]]:
    """Like :func:`stable_model`, also returning the strata used."""
    engine = _Engine(program)
    return engine.run(), engine.strata


def match_query(query: Atom, model: Interpretation) -> set[Tuple]:
    out = set()
    for t in model.get(query.pred).tuples:
        if len(t) != query.arity:
            continue
        binding: dict[Var, int] = {}
        for q, c in zip(query.args, t):
            if isinstance(q, Const):
                if q.id != c:
                    break
            elif binding.setdefault(q, c) != c:
                break
        else:
            out.add(t)
    return out


def answer(query: Atom, program: Program, model: Interpretation | None = None) -> set[tuple]:
    """Ground instances of the query in the stable model, as value tuples."""
    if model is None:
        model = stable_model(program)
    value = program.symbols.value
    return {tuple(value(c) for c in t) for t in match_query(query, model)}


def format_answers(name: str, answers: Iterable[tuple]) -> list[str]:
    return sorted(format_atom(name, t) for t in answers)
