"""Random safe, stratified programs and rule pairs for property checks."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import Program, SymbolTable, classify_predicates, is_safe
from .depgraph import build_dependency_graph, is_stratified
from .parser import parse_program, parse_query

OPS = ("<", "<=", "=", "!=", ">=", ">")


@dataclass
class Instance:
    text: str
    query: str

    def program(self, symbols: SymbolTable | None = None) -> Program:
        return parse_program(self.text, symbols)

    def parse(self):
        prog = parse_program(self.text)
        return prog, parse_query(self.query, prog.symbols)


def _args(rng: random.Random, arity: int, choices: list[str]) -> str:
    if arity == 0:
        return ""
    return "(" + ",".join(rng.choice(choices) for _ in range(arity)) + ")"


def _rule(rng: random.Random, head: str, arities: dict[str, int], preds: list[str],
          consts: list[str], aggregates: bool) -> str:
    vars_ = ["X", "Y", "Z"]
    body: list[str] = []
    bound: list[str] = []
    for _ in range(rng.randint(1, 2)):
        p = rng.choice(preds)
        parts = []
        for _ in range(arities[p]):
            t = rng.choice(vars_) if rng.random() < 0.8 else rng.choice(consts)
            parts.append(t)
            if t in vars_ and t not in bound:
                bound.append(t)
        body.append(p + (f"({','.join(parts)})" if parts else ""))
    terms = bound + consts
    if rng.random() < 0.35:
        p = rng.choice(preds)
        body.append("not " + p + _args(rng, arities[p], terms))
    assigned = None
    if aggregates and rng.random() < 0.35:
        p = rng.choice(preds)
        locals_ = ["L", "M"]
        inner = [rng.choice(bound + locals_ + consts) if bound else rng.choice(locals_ + consts)
                 for _ in range(arities[p])]
        in_inner = [t for t in inner if t in locals_]
        first_choices = in_inner + consts[:2] + ["1"]
        head_terms = [rng.choice(first_choices)]
        if in_inner and rng.random() < 0.5:
            head_terms.append(rng.choice(in_inner))
        inner_s = p + (f"({','.join(inner)})" if inner else "")
        if rng.random() < 0.5:
            assigned = "S"
            guard_s = "= S"
        else:
            guard_s = f"{rng.choice(OPS)} {rng.randint(0, 3)}"
        agg = f"#sum{{{','.join(head_terms)} : {inner_s}}} {guard_s}"
        body.insert(rng.randint(0, len(body)), agg)
    head_terms = bound + consts + ([assigned] if assigned else [])
    h = head + _args(rng, arities[head], head_terms)
    return f"{h} :- {', '.join(body)}."


def random_program(rng: random.Random, *, max_rules: int = 8, max_preds: int = 4,
                   n_consts: int = 4, max_facts: int = 50, aggregates: bool = True,
                   negation: bool = True) -> Instance:
    """A safe, stratified program with a query over it."""
    consts = [str(i) for i in range(n_consts)]
    while True:
        n_preds = rng.randint(2, max_preds)
        n_edb = rng.randint(1, max(1, n_preds - 1))
        edb = [f"e{i}" for i in range(n_edb)]
        idb = [f"p{i}" for i in range(n_preds - n_edb)]
        preds = edb + idb
        arities = {p: rng.choice((0, 1, 1, 2, 2)) for p in preds}
        lines = []
        n_facts = rng.randint(0, max_facts)
        for _ in range(n_facts):
            p = rng.choice(edb) if rng.random() < 0.85 else rng.choice(preds)
            lines.append(p + _args(rng, arities[p], consts) + ".")
        for _ in range(rng.randint(1, max_rules)):
            text = _rule(rng, rng.choice(idb), arities, preds, consts, aggregates)
            if not negation:
                text = text.replace("not ", "")
            lines.append(text)
        text = "\n".join(lines) + "\n"
        prog = parse_program(text)
        if not all(is_safe(r) for r in prog.rules):
            continue
        if not is_stratified(build_dependency_graph(prog)):
            continue
        ext, intl = classify_predicates(prog)
        names = {prog.symbols.pred_name(p) for p in intl}
        occurring = [p for p in idb if p in names]
        if not occurring:
            continue
        present = [p for p in edb if prog.symbols.lookup_predicate(p, arities[p]) in ext]
        qp = rng.choice(occurring) if rng.random() < 0.9 or not present else rng.choice(present)
        qvars = ["X", "Y"]
        query = qp + _args(rng, arities[qp], consts + qvars + qvars)
        return Instance(text, query)


def random_rule_text(rng: random.Random, *, max_body: int = 4, n_preds: int = 4,
                     n_consts: int = 4, n_vars: int = 3, aggregates: bool = True) -> str:
    """A rule that is not necessarily safe; only its shape matters."""
    preds = [f"q{i}" for i in range(n_preds)]
    arity = {p: 1 + (i % 2) for i, p in enumerate(preds)}
    terms = [f"V{i}" for i in range(n_vars)] + [str(i) for i in range(n_consts)]

    def atom(p: str) -> str:
        return p + _args(rng, arity[p], terms)

    body = []
    for _ in range(rng.randint(0, max_body)):
        roll = rng.random()
        if aggregates and roll < 0.15:
            body.append(f"#sum{{{rng.choice(terms)} : {atom(rng.choice(preds))}}} "
                        f"{rng.choice(OPS)} {rng.choice(terms)}")
        elif roll < 0.35:
            body.append("not " + atom(rng.choice(preds)))
        else:
            body.append(atom(rng.choice(preds)))
    head = atom(rng.choice(preds))
    return f"{head} :- {', '.join(body)}." if body else f"{head}."


def specialise(rng: random.Random, rule_text: str, *, n_consts: int = 4, n_vars: int = 3,
               n_preds: int = 4) -> str:
    """Instantiate some variables of a rule and maybe add a body literal, so
    that the original usually subsumes the result."""
    out = rule_text
    for i in range(n_vars):
        if rng.random() < 0.3:
            out = out.replace(f"V{i}", str(rng.randrange(n_consts)))
    if rng.random() < 0.5:
        p = rng.randrange(n_preds)
        arity = 1 + (p % 2)
        extra = f"q{p}(" + ",".join(f"V{rng.randrange(n_vars)}" for _ in range(arity)) + ")"
        out = out[:-1] + (", " if ":-" in out else " :- ") + extra + "."
    return out
