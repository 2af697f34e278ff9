"""Text <-> Program.

Grammar::

    program   := (rule)*
    rule      := atom [":-" element ("," element)*] "."
    element   := ["not"] atom | "#sum" "{" term ("," term)* ":" atom "}" cmp term
    atom      := name ["(" arg ("," arg)* ")"]
    arg       := term | int ".." int          (facts only)

'%' starts a comment.  Names beginning with ``m#`` are magic predicates and
are only accepted when ``allow_magic`` is set (rendered rewritten programs).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Union

from .core import (
    Aggregate,
    Atom,
    BodyElement,
    Const,
    Literal,
    Program,
    Rule,
    SafetyVerdict,
    SymbolTable,
    Term,
    Var,
    is_safe,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<magic>m\#[a-z][A-Za-z0-9_]*\#[bf]*)
  | (?P<sum>\#sum\b)
  | (?P<if>:-)
  | (?P<range>\.\.)
  | (?P<cmp><=|>=|!=|<|>|=)
  | (?P<int>-?\d+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<punct>[(),.{}:?])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int, token: str = "") -> None:
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        where = f"{line}:{column}"
        super().__init__(f"{where}: {message}" + (f" (at {token!r})" if token else ""))


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError("unexpected character", line, pos - line_start + 1, text[pos])
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "punct":
                kind = s
            toks.append(_Tok(kind, s, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, symbols: SymbolTable, allow_magic: bool) -> None:
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols
        self.allow_magic = allow_magic

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str) -> ParseError:
        t = self.tok
        return ParseError(message, t.line, t.col, t.text)

    def take(self, kind: str) -> _Tok:
        t = self.tok
        if t.kind != kind:
            raise self.error(f"expected {kind!r}")
        self.i += 1
        return t

    def accept(self, kind: str) -> bool:
        if self.tok.kind == kind:
            self.i += 1
            return True
        return False

    # terms -----------------------------------------------------------------

    def constant(self, t: _Tok) -> Const:
        value: Union[int, str] = int(t.text) if t.kind == "int" else t.text
        return Const(self.symbols.constant(value))

    def term(self) -> Term:
        t = self.tok
        if t.kind == "var":
            self.i += 1
            return Var(t.text)
        if t.kind in ("int", "ident", "string"):
            self.i += 1
            return self.constant(t)
        raise self.error("expected a term")

    def arg(self, allow_range: bool) -> Union[Term, range]:
        t = self.tok
        if t.kind == "int" and self.toks[self.i + 1].kind == "range":
            if not allow_range:
                raise self.error("intervals are only allowed in facts")
            self.i += 2
            hi = self.take("int")
            return range(int(t.text), int(hi.text) + 1)
        return self.term()

    def atom_parts(self, allow_range: bool = False) -> tuple[_Tok, str, list]:
        t = self.tok
        if t.kind == "magic":
            if not self.allow_magic:
                raise self.error("predicate names containing '#' are reserved")
        elif t.kind != "ident":
            raise self.error("expected a predicate name")
        self.i += 1
        args: list = []
        if self.accept("("):
            if not self.accept(")"):
                args.append(self.arg(allow_range))
                while self.accept(","):
                    args.append(self.arg(allow_range))
                self.take(")")
        return t, t.text, args

    def predicate(self, name_tok: _Tok, arity: int) -> int:
        if name_tok.kind == "magic":
            _, orig, adornment = name_tok.text.split("#")
            if adornment.count("b") != arity:
                raise ParseError("magic predicate arity does not match its adornment",
                                 name_tok.line, name_tok.col, name_tok.text)
            return self.symbols.magic(self.symbols.predicate(orig, len(adornment)), adornment)
        return self.symbols.predicate(name_tok.text, arity)

    def atom(self) -> Atom:
        name_tok, _, args = self.atom_parts()
        return Atom(self.predicate(name_tok, len(args)), tuple(args))

    # body ------------------------------------------------------------------

    def element(self) -> BodyElement:
        if self.tok.kind == "sum":
            return self.aggregate()
        negated = False
        if self.tok.kind == "ident" and self.tok.text == "not" and self.toks[self.i + 1].kind in ("ident", "magic"):
            self.i += 1
            negated = True
        return Literal(self.atom(), negated)

    def aggregate(self) -> Aggregate:
        self.take("sum")
        self.take("{")
        head_terms = [self.term()]
        while self.accept(","):
            head_terms.append(self.term())
        self.take(":")
        atom = self.atom()
        self.take("}")
        op = self.take("cmp").text
        return Aggregate(tuple(head_terms), atom, op, self.term())

    def rules(self) -> list[Rule]:
        out: list[Rule] = []
        while self.tok.kind != "eof":
            start = self.tok
            name_tok, _, args = self.atom_parts(allow_range=True)
            if self.accept("."):
                out.extend(self._facts(name_tok, args))
                continue
            if any(isinstance(a, range) for a in args):
                raise ParseError("intervals are only allowed in facts", start.line, start.col, start.text)
            head = Atom(self.predicate(name_tok, len(args)), tuple(args))
            self.take("if")
            body = [self.element()]
            while self.accept(","):
                body.append(self.element())
            self.take(".")
            out.append(Rule(head, tuple(body)))
        return out

    def _facts(self, name_tok: _Tok, args: list) -> list[Rule]:
        pred = self.predicate(name_tok, len(args))
        if not any(isinstance(a, range) for a in args):
            return [Rule(Atom(pred, tuple(args)))]
        columns = [
            [Const(self.symbols.constant(v)) for v in a] if isinstance(a, range) else [a]
            for a in args
        ]
        return [Rule(Atom(pred, combo)) for combo in itertools.product(*columns)]


def parse_program(text: str, symbols: SymbolTable | None = None, *, allow_magic: bool = False) -> Program:
    symbols = symbols if symbols is not None else SymbolTable()
    p = _Parser(text, symbols, allow_magic)
    return Program(p.rules(), symbols)


def parse_query(text: str, symbols: SymbolTable) -> Atom:
    p = _Parser(text, symbols, allow_magic=False)
    atom = p.atom()
    p.accept("?")
    if p.tok.kind != "eof":
        raise p.error("trailing input after query")
    return atom


def safety_report(program: Program) -> list[tuple[int, SafetyVerdict]]:
    """(rule index, verdict) for every unsafe rule."""
    out = []
    for i, r in enumerate(program.rules):
        v = is_safe(r)
        if not v.safe:
            out.append((i, v))
    return out


# rendering ---------------------------------------------------------------

def render_term(t: Term, symbols: SymbolTable) -> str:
    if isinstance(t, Var):
        return t.name
    return str(symbols.value(t.id))


def render_atom(a: Atom, symbols: SymbolTable) -> str:
    name = symbols.pred_name(a.pred)
    if not a.args:
        return name
    return f"{name}({','.join(render_term(t, symbols) for t in a.args)})"


def render_element(e: BodyElement, symbols: SymbolTable) -> str:
    if isinstance(e, Literal):
        s = render_atom(e.atom, symbols)
        return f"not {s}" if e.negated else s
    terms = ",".join(render_term(t, symbols) for t in e.head_terms)
    return (f"#sum{{{terms} : {render_atom(e.atom, symbols)}}} "
            f"{e.op} {render_term(e.guard, symbols)}")


def render_rule(rule: Rule, symbols: SymbolTable) -> str:
    head = render_atom(rule.head, symbols)
    if rule.is_fact:
        return f"{head}."
    return f"{head} :- {', '.join(render_element(e, symbols) for e in rule.body)}."


def render(program: Program) -> str:
    return "".join(render_rule(r, program.symbols) + "\n" for r in program.rules)

