"""Datalog with stratified negation and sums: magic-sets rewriting that
preserves stratification, subsumed-rule elimination, and bottom-up
evaluation."""

from .core import (
    Aggregate,
    Atom,
    Const,
    Literal,
    Program,
    Rule,
    SymbolTable,
    Var,
    canonical_key,
    classify_predicates,
    is_safe,
)
from .depgraph import (
    DependencyGraph,
    UnstratifiableError,
    build_dependency_graph,
    is_stratified,
    sccs,
    stratify,
)
from .evaluator import answer, stable_model
from .magic import default_sips, full_free, ms, ms_rs
from .parser import ParseError, parse_program, parse_query, render
from .subsumption import eliminate_subsumed, one_way_unify, rule_hash, subsumes

__all__ = [
    "Aggregate",
    "Atom",
    "Const",
    "DependencyGraph",
    "Literal",
    "ParseError",
    "Program",
    "Rule",
    "SymbolTable",
    "UnstratifiableError",
    "Var",
    "answer",
    "build_dependency_graph",
    "canonical_key",
    "classify_predicates",
    "default_sips",
    "eliminate_subsumed",
    "full_free",
    "is_safe",
    "is_stratified",
    "ms",
    "ms_rs",
    "one_way_unify",
    "parse_program",
    "parse_query",
    "render",
    "rule_hash",
    "sccs",
    "stable_model",
    "stratify",
    "subsumes",
]
