"""Predicate dependency graphs, SCCs and stratification."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .core import Literal, Program, SymbolTable, classify_predicates

Node = Hashable


def _sort_key(node: Node) -> tuple:
    # original predicates are ints; monitor nodes are ("m", pred)
    if isinstance(node, tuple):
        return (1, node[1])
    return (0, node)


@dataclass
class DependencyGraph:
    """Weighted arcs ``(head_pred, body_pred, weight)``; weight 1 marks
    negation or aggregation."""

    nodes: set = field(default_factory=set)
    arcs: set = field(default_factory=set)

    def add_arc(self, src: Node, dst: Node, weight: int = 0) -> None:
        self.nodes.add(src)
        self.nodes.add(dst)
        self.arcs.add((src, dst, weight))

    def successors(self) -> dict[Node, list[Node]]:
        succ: dict[Node, set[Node]] = defaultdict(set)
        for u, v, _ in self.arcs:
            succ[u].add(v)
        return {u: sorted(vs, key=_sort_key) for u, vs in succ.items()}

    def copy(self) -> DependencyGraph:
        return DependencyGraph(set(self.nodes), set(self.arcs))


def build_dependency_graph(program: Program) -> DependencyGraph:
    g = DependencyGraph()
    for rule in program.rules:
        h = rule.head.pred
        g.nodes.add(h)
        for e in rule.body:
            w = 0 if isinstance(e, Literal) and not e.negated else 1
            g.add_arc(h, e.atom.pred, w)
    return g


def tarjan(nodes: Iterable[Node], succ: dict[Node, list[Node]]) -> list[frozenset]:
    """Iterative Tarjan.  Components come out dependencies-first: every arc
    leaving a component points into an earlier one."""
    index: dict[Node, int] = {}
    low: dict[Node, int] = {}
    on_stack: set[Node] = set()
    stack: list[Node] = []
    out: list[frozenset] = []
    counter = 0
    for root in sorted(nodes, key=_sort_key):
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(frozenset(comp))
    return out


def sccs(graph: DependencyGraph) -> list[frozenset]:
    return tarjan(graph.nodes, graph.successors())


def _weighted_cycle_arc(graph: DependencyGraph, components: list[frozenset]):
    comp_of = {n: i for i, c in enumerate(components) for n in c}
    for u, v, w in sorted(graph.arcs, key=lambda a: (_sort_key(a[0]), _sort_key(a[1]), a[2])):
        if w == 1 and comp_of[u] == comp_of[v]:
            return u, v
    return None


def is_stratified(graph: DependencyGraph) -> bool:
    return _weighted_cycle_arc(graph, sccs(graph)) is None


class UnstratifiableError(Exception):
    """A cycle goes through negation or an aggregate.  ``cycle`` lists the
    predicates along it, starting and ending at the same node."""

    def __init__(self, cycle: list, symbols: SymbolTable | None = None) -> None:
        self.cycle = cycle
        if symbols is not None:
            names = [symbols.pred_name(p) if isinstance(p, int) else str(p) for p in cycle]
        else:
            names = [str(p) for p in cycle]
        super().__init__("not stratified: cycle through negation/aggregate: " + " -> ".join(names))


def _path(succ: dict[Node, list[Node]], src: Node, dst: Node, allowed: frozenset) -> list[Node]:
    prev: dict[Node, Node | None] = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for w in succ.get(u, ()):
            if w in allowed and w not in prev:
                prev[w] = u
                queue.append(w)
    path = [dst]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def stratify(program: Program) -> list[frozenset]:
    """Strata in evaluation order.

    All extensional predicates share the first stratum; every SCC of
    intentional predicates is a stratum of its own, in dependency order.
    """
    graph = build_dependency_graph(program)
    components = sccs(graph)
    bad = _weighted_cycle_arc(graph, components)
    if bad is not None:
        u, v = bad
        comp = next(c for c in components if u in c)
        cycle = [u] + _path(graph.successors(), v, u, comp)
        raise UnstratifiableError(cycle, program.symbols)
    extensional, _ = classify_predicates(program)
    base = frozenset(extensional)
    rest = [c for c in components if not c <= base]
    return ([base] if base else []) + rest


def to_dot(graph: DependencyGraph, symbols: SymbolTable) -> str:
    def name(n: Node) -> str:
        if isinstance(n, tuple):
            return "m#" + symbols.pred_name(n[1])
        return symbols.pred_name(n)

    lines = ["digraph dependencies {"]
    for n in sorted(graph.nodes, key=_sort_key):
        lines.append(f'  "{name(n)}";')
    for u, v, w in sorted(graph.arcs, key=lambda a: (_sort_key(a[0]), _sort_key(a[1]), a[2])):
        style = ' [style=dashed, label="1"]' if w else ""
        lines.append(f'  "{name(u)}" -> "{name(v)}"{style};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def monitor_node(pred: int) -> tuple:
    """Representative magic node m#p used by the SCC monitor."""
    return ("m", pred)


class SccMonitor:
    """The graph G that the restricted-SIPS rewriting keeps while emitting
    magic rules.

    G starts as the program's dependency graph plus an arc p -> m#p for every
    predicate.  An arc may be committed only if, after projecting out the
    m#p nodes, the SCC partition still equals the one of the input program
    and no weight-1 arc ends up inside a cycle.
    """

    def __init__(self, program: Program) -> None:
        base = build_dependency_graph(program)
        self.original = frozenset(base.nodes)
        self.partition = frozenset(sccs(base))
        self.succ: dict[Node, set[Node]] = defaultdict(set)
        self.nodes: set[Node] = set(base.nodes)
        self.heavy: set[tuple[Node, Node]] = set()
        for u, v, w in base.arcs:
            self._link(u, v, w)
        for p in base.nodes:
            self._link(p, monitor_node(p))
        self.intact = True
        self.full_recomputations = 0

    def _link(self, u: Node, v: Node, weight: int = 0) -> None:
        self.nodes.add(u)
        self.nodes.add(v)
        self.succ[u].add(v)
        if weight:
            self.heavy.add((u, v))

    def _has(self, u: Node, v: Node, weight: int) -> bool:
        if weight:
            return (u, v) in self.heavy
        return v in self.succ.get(u, ())

    def reaches(self, src: Node, dst: Node) -> bool:
        if src == dst:
            return True
        seen = {src}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in self.succ.get(u, ()):
                if w == dst:
                    return True
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return False

    def components(self, extra: tuple[Node, Node] | None = None) -> list[frozenset]:
        succ = {u: sorted(vs, key=_sort_key) for u, vs in self.succ.items()}
        nodes = set(self.nodes)
        if extra is not None:
            u, v = extra
            succ[u] = sorted(set(succ.get(u, ())) | {v}, key=_sort_key)
            nodes.update(extra)
        self.full_recomputations += 1
        return tarjan(nodes, succ)

    def projected_partition(self, extra: tuple[Node, Node] | None = None) -> frozenset:
        """SCCs of G (plus an optional extra arc) restricted to original predicates."""
        return frozenset(c & self.original for c in self.components(extra) if c & self.original)

    def _acceptable(self, extra: tuple[Node, Node] | None, extra_weight: int) -> bool:
        comps = self.components(extra)
        projected = frozenset(c & self.original for c in comps if c & self.original)
        if projected != self.partition:
            return False
        comp_of = {n: i for i, c in enumerate(comps) for n in c}
        heavy = set(self.heavy)
        if extra is not None and extra_weight:
            heavy.add(extra)
        return all(comp_of[u] != comp_of[v] for u, v in heavy)

    def preserves(self, u: Node, v: Node, weight: int = 0) -> bool:
        """Would adding ``u -> v`` keep the projected partition equal to the
        original one (and keep weight-1 arcs off cycles)?"""
        if not self.intact:
            return False
        if self._has(u, v, weight):
            return True
        if not self.reaches(v, u):
            # no new cycle, so no SCC changes at all
            return True
        return self._acceptable((u, v), weight)

    def add(self, u: Node, v: Node, weight: int = 0) -> None:
        """Add an arc unconditionally, tracking whether the partition survives."""
        if self._has(u, v, weight):
            return
        merges = self.intact and self.reaches(v, u)
        self._link(u, v, weight)
        if merges:
            self.intact = self._acceptable(None, 0)

    def commit(self, u: Node, v: Node, weight: int = 0) -> bool:
        if self.preserves(u, v, weight):
            self._link(u, v, weight)
            return True
        return False

    def graph(self) -> DependencyGraph:
        g = DependencyGraph(set(self.nodes))
        for u, vs in self.succ.items():
            for v in vs:
                g.arcs.add((u, v, 1 if (u, v) in self.heavy else 0))
        return g
