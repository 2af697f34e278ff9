"""Abstract syntax for Datalog with negation and #sum aggregates.

Predicates and constants are interned in a :class:`SymbolTable`; atoms carry
integer ids so that evaluation, hashing and graph construction never touch
strings.  Variables keep their source names and are scoped per rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

MAGIC_PREFIX = "m#"
COMPARATORS = ("<", "<=", "=", "!=", ">=", ">")


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    id: int

    def __repr__(self) -> str:
        return f"#{self.id}"


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    pred: int
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[Var]:
        for t in self.args:
            if isinstance(t, Var):
                yield t

    def is_ground(self) -> bool:
        return all(isinstance(t, Const) for t in self.args)


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    @property
    def positive(self) -> bool:
        return not self.negated

    def atoms(self) -> tuple[Atom, ...]:
        return (self.atom,)

    def variables(self) -> Iterator[Var]:
        return self.atom.variables()


@dataclass(frozen=True)
class Aggregate:
    """``#sum{head_terms : atom} op guard``.

    Only the first head term is summed; the rest only make tuples distinct.
    """

    head_terms: tuple[Term, ...]
    atom: Atom
    op: str
    guard: Term

    def __post_init__(self) -> None:
        if not self.head_terms:
            raise ValueError("#sum needs at least one head term")
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")

    def atoms(self) -> tuple[Atom, ...]:
        return (self.atom,)

    def variables(self) -> Iterator[Var]:
        for t in self.head_terms:
            if isinstance(t, Var):
                yield t
        yield from self.atom.variables()
        if isinstance(self.guard, Var):
            yield self.guard

    @property
    def assignment_var(self) -> Var | None:
        if self.op == "=" and isinstance(self.guard, Var):
            return self.guard
        return None


BodyElement = Union[Literal, Aggregate]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[BodyElement, ...] = ()

    @property
    def positive(self) -> tuple[Literal, ...]:
        return tuple(e for e in self.body if isinstance(e, Literal) and not e.negated)

    @property
    def negative(self) -> tuple[Literal, ...]:
        return tuple(e for e in self.body if isinstance(e, Literal) and e.negated)

    @property
    def aggregates(self) -> tuple[Aggregate, ...]:
        return tuple(e for e in self.body if isinstance(e, Aggregate))

    @property
    def is_fact(self) -> bool:
        return not self.body

    def atoms(self) -> Iterator[Atom]:
        yield self.head
        for e in self.body:
            yield from e.atoms()

    def body_predicates(self) -> Iterator[int]:
        for e in self.body:
            for a in e.atoms():
                yield a.pred

    def global_variables(self) -> set[Var]:
        out = set(self.head.variables())
        for e in self.body:
            if isinstance(e, Literal):
                out.update(e.variables())
            elif isinstance(e.guard, Var):
                out.add(e.guard)
        return out

    def assignment_variables(self) -> set[Var]:
        return {a.assignment_var for a in self.aggregates if a.assignment_var is not None}

    def local_variables(self, agg: Aggregate) -> set[Var]:
        return set(agg.variables()) - self.global_variables()

    def variables(self) -> list[Var]:
        """All variables in first-occurrence order (head first)."""
        seen: dict[Var, None] = {}
        for v in self.head.variables():
            seen.setdefault(v)
        for e in self.body:
            for v in e.variables():
                seen.setdefault(v)
        return list(seen)


class SymbolTable:
    """Dense, sequential interning of predicates (name/arity) and constants.

    Magic predicates are interned through :meth:`magic`, which remembers the
    original predicate and adornment they were derived from.
    """

    def __init__(self) -> None:
        self._preds: dict[tuple[str, int], int] = {}
        self._pred_keys: list[tuple[str, int]] = []
        self._consts: dict[Union[int, str], int] = {}
        self._const_values: list[Union[int, str]] = []
        self._magic: dict[int, tuple[int, str]] = {}

    def predicate(self, name: str, arity: int) -> int:
        key = (name, arity)
        pid = self._preds.get(key)
        if pid is None:
            pid = len(self._pred_keys)
            self._preds[key] = pid
            self._pred_keys.append(key)
        return pid

    def constant(self, value: Union[int, str]) -> int:
        if isinstance(value, bool):
            raise TypeError("booleans are not constants")
        # keys must keep int 1 and str "1" apart; dict lookup already does
        cid = self._consts.get(value)
        if cid is None:
            cid = len(self._const_values)
            self._consts[value] = cid
            self._const_values.append(value)
        return cid

    def intern(self, token: Union[int, str], kind: str, arity: int = 0) -> int:
        if kind == "predicate":
            if not isinstance(token, str):
                raise TypeError("predicate names are strings")
            return self.predicate(token, arity)
        if kind == "constant":
            return self.constant(token)
        raise ValueError(f"unknown symbol kind {kind!r}")

    def magic(self, pred: int, adornment: str) -> int:
        name, arity = self._pred_keys[pred]
        if len(adornment) != arity:
            raise ValueError(f"adornment {adornment!r} does not fit {name}/{arity}")
        mid = self.predicate(f"{MAGIC_PREFIX}{name}#{adornment}", adornment.count("b"))
        self._magic[mid] = (pred, adornment)
        return mid

    def magic_info(self, pred: int) -> tuple[int, str] | None:
        """``(original predicate, adornment)`` for a magic predicate, else None."""
        return self._magic.get(pred)

    def is_magic(self, pred: int) -> bool:
        return pred in self._magic

    def pred_name(self, pred: int) -> str:
        return self._pred_keys[pred][0]

    def pred_arity(self, pred: int) -> int:
        return self._pred_keys[pred][1]

    def lookup_predicate(self, name: str, arity: int) -> int | None:
        return self._preds.get((name, arity))

    def lookup_constant(self, value: Union[int, str]) -> int | None:
        return self._consts.get(value)

    def value(self, cid: int) -> Union[int, str]:
        return self._const_values[cid]

    @property
    def num_predicates(self) -> int:
        return len(self._pred_keys)

    @property
    def num_constants(self) -> int:
        return len(self._const_values)


@dataclass
class Program:
    rules: list[Rule]
    symbols: SymbolTable = field(default_factory=SymbolTable)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def with_rules(self, rules: Iterable[Rule]) -> Program:
        return Program(list(rules), self.symbols)

    def predicates(self) -> set[int]:
        out = {r.head.pred for r in self.rules}
        for r in self.rules:
            if r.body:
                out.update(r.body_predicates())
        return out

    def rules_for(self, pred: int) -> list[Rule]:
        return [r for r in self.rules if r.head.pred == pred]

    def constants(self) -> set[int]:
        out: set[int] = set()
        for r in self.rules:
            for t in rule_terms(r):
                if isinstance(t, Const):
                    out.add(t.id)
        return out


def element_terms(e: Union[Atom, BodyElement]) -> Iterator[Term]:
    if isinstance(e, Atom):
        yield from e.args
    elif isinstance(e, Literal):
        yield from e.atom.args
    else:
        yield from e.head_terms
        yield from e.atom.args
        yield e.guard


def rule_terms(rule: Rule) -> Iterator[Term]:
    yield from rule.head.args
    for e in rule.body:
        yield from element_terms(e)


@dataclass(frozen=True)
class SafetyVerdict:
    unsafe: tuple[tuple[str, str], ...] = ()

    @property
    def safe(self) -> bool:
        return not self.unsafe

    def __bool__(self) -> bool:
        return self.safe


_SAFE = SafetyVerdict()


def is_safe(rule: Rule) -> SafetyVerdict:
    """Check safety; returns the unsafe variables tagged 'global' or 'local'."""
    if not rule.body:
        if all(type(t) is Const for t in rule.head.args):
            return _SAFE
        return SafetyVerdict(tuple((v.name, "global") for v in dict.fromkeys(rule.head.variables())))
    globals_ = rule.global_variables()
    bound = rule.assignment_variables()
    for lit in rule.positive:
        bound.update(lit.variables())
    unsafe: dict[str, str] = {}
    for v in rule.variables():
        if v in globals_ and v not in bound:
            unsafe.setdefault(v.name, "global")
    for agg in rule.aggregates:
        inner = set(agg.atom.variables())
        for v in agg.variables():
            if v not in globals_ and v not in inner:
                unsafe.setdefault(v.name, "local")
    return SafetyVerdict(tuple(unsafe.items()))


def classify_predicates(program: Program) -> tuple[set[int], set[int]]:
    """Split the program's predicates into (extensional, intentional)."""
    preds = program.predicates()
    intentional = {r.head.pred for r in program.rules if r.body}
    return preds - intentional, intentional


def canonical_key(rule: Rule) -> tuple:
    """Structural key invariant under consistent variable renaming."""
    names: dict[Var, Var] = {}

    def term(t: Term) -> Term:
        if isinstance(t, Var):
            if t not in names:
                names[t] = Var(f"_{len(names)}")
            return names[t]
        return t

    def atom(a: Atom) -> Atom:
        return Atom(a.pred, tuple(term(t) for t in a.args))

    head = atom(rule.head)
    body = []
    for e in rule.body:
        if isinstance(e, Literal):
            body.append(Literal(atom(e.atom), e.negated))
        else:
            hts = tuple(term(t) for t in e.head_terms)
            body.append(Aggregate(hts, atom(e.atom), e.op, term(e.guard)))
    return (head, tuple(body))
