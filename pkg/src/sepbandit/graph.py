"""Causal DAGs with context (intervention) nodes and d-separation.

Nodes are dense integers ``0 .. n_nodes - 1``; human readable names live in
``Dag.names``. Context nodes model interventions: a context node points at
the system node(s) it intervenes on and has no parents itself.

Text format (one statement per line, ``#`` starts a comment)::

    nodes: A B S Y I_A I_B      # optional, fixes the integer ids
    context: I_A I_B
    target: Y
    I_A->A
    I_B->B
    A->S
    B->S
    S->Y

Without a ``nodes:`` line, ids follow the order in which names first appear.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .exceptions import StructuralError

__all__ = [
    "Dag",
    "topological_order",
    "d_separated",
    "oracle_separating_sets",
    "candidate_sets",
    "parse_graph",
    "format_graph",
]


@dataclass(frozen=True)
class Dag:
    """Immutable DAG over system and context nodes.

    Attributes
    ----------
    n_nodes : number of nodes; ids are ``range(n_nodes)``
    edges : frozenset of ``(parent, child)`` pairs
    context : ids of the context (intervention) nodes
    target : id of the reward node ``Y``
    names : one display name per node
    """

    n_nodes: int
    edges: frozenset
    context: frozenset
    target: int
    names: tuple = ()
    _parents: tuple = field(init=False, repr=False, compare=False, hash=False)
    _children: tuple = field(init=False, repr=False, compare=False, hash=False)
    _order: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        n = self.n_nodes
        edges = frozenset((int(p), int(c)) for p, c in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "context", frozenset(int(x) for x in self.context))
        if not self.names:
            object.__setattr__(self, "names", tuple(f"V{i}" for i in range(n)))
        if len(self.names) != n:
            raise StructuralError("names must have one entry per node")
        if not 0 <= self.target < n:
            raise StructuralError(f"target {self.target} out of range")
        if self.target in self.context:
            raise StructuralError("the target cannot be a context node")
        parents = [[] for _ in range(n)]
        children = [[] for _ in range(n)]
        for p, c in edges:
            if not (0 <= p < n and 0 <= c < n) or p == c:
                raise StructuralError(f"invalid edge {p}->{c}")
            if c in self.context:
                raise StructuralError(f"context node {self.names[c]} has an incoming edge")
            parents[c].append(p)
            children[p].append(c)
        object.__setattr__(self, "_parents", tuple(tuple(sorted(x)) for x in parents))
        object.__setattr__(self, "_children", tuple(tuple(sorted(x)) for x in children))
        object.__setattr__(self, "_order", _kahn(n, self._parents, self._children))

    @classmethod
    def from_names(cls, edges: Iterable[tuple[str, str]], context: Iterable[str],
                   target: str, nodes: Sequence[str] | None = None) -> "Dag":
        """Build a Dag from named edges, e.g. ``[("A", "S"), ("S", "Y")]``."""
        edges = list(edges)
        context = list(context)
        if nodes is None:
            nodes = []
            for name in itertools.chain(context, [target], itertools.chain.from_iterable(edges)):
                if name not in nodes:
                    nodes.append(name)
        ids = {name: i for i, name in enumerate(nodes)}
        if len(ids) != len(nodes):
            raise StructuralError("duplicate node names")
        try:
            return cls(len(nodes), frozenset((ids[p], ids[c]) for p, c in edges),
                       frozenset(ids[x] for x in context), ids[target], tuple(nodes))
        except KeyError as exc:
            raise StructuralError(f"unknown node {exc.args[0]!r}") from None

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    @property
    def system_nodes(self) -> tuple:
        return tuple(v for v in range(self.n_nodes) if v not in self.context)

    @property
    def context_nodes(self) -> tuple:
        """Context nodes in ascending id order; arms are aligned with this order."""
        return tuple(sorted(self.context))

    def parents(self, v: int) -> tuple:
        return self._parents[v]

    def children(self, v: int) -> tuple:
        return self._children[v]

    def system_parents(self, v: int) -> tuple:
        return tuple(p for p in self._parents[v] if p not in self.context)

    def ancestors(self, nodes: Iterable[int]) -> set:
        """Ancestors of ``nodes``, the nodes themselves included."""
        out = set(nodes)
        stack = list(out)
        while stack:
            for p in self._parents[stack.pop()]:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __str__(self):
        return format_graph(self)


def _kahn(n, parents, children):
    indeg = [len(p) for p in parents]
    heap = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(order) != n:
        raise StructuralError("graph contains a directed cycle")
    return tuple(order)


def topological_order(g: Dag) -> tuple:
    """Parents before children; ties broken by smallest node id."""
    return g._order


def d_separated(g: Dag, a: Iterable[int], b: Iterable[int], c: Iterable[int] = ()) -> bool:
    """True iff every path between ``a`` and ``b`` is blocked by ``c``.

    Reachability ("Bayes ball") over (node, direction) states: an active
    trail may pass a non-collider outside ``c`` and a collider in ``an(c)``.
    """
    a, b, c = set(a), set(b), set(c)
    if a & b or a & c or b & c:
        raise ValueError("a, b and c must be disjoint")
    if not a or not b:
        return True
    anc_c = g.ancestors(c)
    # direction True: entered the node from a child (moving against the edge)
    stack = [(x, True) for x in a]
    seen = set()
    while stack:
        node, up = stack.pop()
        if (node, up) in seen:
            continue
        seen.add((node, up))
        if node in b:
            return False
        if up:
            if node in c:
                continue
            stack.extend((p, True) for p in g.parents(node))
            stack.extend((ch, False) for ch in g.children(node))
        else:
            if node not in c:
                stack.extend((ch, False) for ch in g.children(node))
            if node in anc_c:
                stack.extend((p, True) for p in g.parents(node))
    return True


def candidate_sets(g: Dag, max_size: int | None = None) -> list:
    """All subsets of the non-target system nodes up to ``max_size``.

    Ordered by size, then lexicographically; each set is a sorted tuple.
    """
    pool = [v for v in g.system_nodes if v != g.target]
    if max_size is None or max_size > len(pool):
        max_size = len(pool)
    return [s for k in range(max_size + 1) for s in itertools.combinations(pool, k)]


def oracle_separating_sets(g: Dag, max_size: int | None = None) -> list:
    """Sets ``S`` with ``context _||_ target | S`` in ``g`` (d-separation)."""
    ctx = g.context_nodes
    return [s for s in candidate_sets(g, max_size) if d_separated(g, ctx, (g.target,), s)]


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_graph(text: str) -> Dag:
    """Parse the line-based graph format described in the module docstring."""
    nodes = context = target = None
    edges = []
    seen = []

    def note(*names):
        for x in names:
            if x not in seen:
                seen.append(x)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        if "->" in line:
            p, _, ch = line.partition("->")
            p, ch = p.strip(), ch.strip()
            if not p or not ch or " " in p or " " in ch:
                raise StructuralError(f"line {lineno}: malformed edge {raw!r}")
            edges.append((p, ch))
            note(p, ch)
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise StructuralError(f"line {lineno}: cannot parse {raw!r}")
        key, values = key.strip(), rest.split()
        if key == "nodes":
            nodes = values
        elif key == "context":
            context = values
            note(*values)
        elif key == "target":
            if len(values) != 1:
                raise StructuralError(f"line {lineno}: exactly one target expected")
            target = values[0]
            note(target)
        else:
            raise StructuralError(f"line {lineno}: unknown header {key!r}")
    if target is None:
        raise StructuralError("missing 'target:' line")
    return Dag.from_names(edges, context or [], target, nodes if nodes is not None else seen)


def format_graph(g: Dag) -> str:
    lines = [
        "nodes: " + " ".join(g.names),
        "context: " + " ".join(g.names[v] for v in g.context_nodes),
        "target: " + g.names[g.target],
    ]
    lines += [f"{g.names[p]}->{g.names[c]}" for p, c in sorted(g.edges)]
    return "\n".join(lines) + "\n"
