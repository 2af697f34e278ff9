"""Synthetic benchmark programs: three variants of one small program that
differ only in how ``a`` depends on ``b`` (positively, through negation, or
through an aggregate)."""

from __future__ import annotations

COMMON = (
    "b(X) :- edb(X,Y).",
    "c(X,Y) :- a(X,Y), b(Y).",
)

A_RULES = {
    "pi1": "a(X,Y) :- edb(X,Y), b(X).",
    "pi2": "a(X,Y) :- edb(X,Y), not b(X).",
    "pi3": "a(X,Y) :- edb(X,Y), #sum{1 : b(X)} = 0.",
}

FAMILIES = tuple(A_RULES)
DEFAULT_BASE = 1_000_000
DEFAULT_QUERY = "c(0,Y)"


def rules(family: str) -> list[str]:
    if family not in A_RULES:
        raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    return [A_RULES[family], *COMMON]


def generate(family: str, size: int, base: int = DEFAULT_BASE) -> str:
    """Program text: the family's rules plus the fact interval
    ``edb(0..base*size)``."""
    if isinstance(size, bool) or not isinstance(size, int) or size < 1:
        raise ValueError(f"size must be a positive integer, got {size!r}")
    if isinstance(base, bool) or not isinstance(base, int) or base < 1:
        raise ValueError(f"base must be a positive integer, got {base!r}")
    lines = rules(family)
    lines.append(f"edb(0..{base * size}).")
    return "\n".join(lines) + "\n"
