"""Bandit environments used in the simulation studies."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .graph import Dag
from .scm import DiscreteScm, all_arms, random_parametrization, true_mean

__all__ = [
    "Environment",
    "make_game_env",
    "enumerate_4node_suite",
    "canonical_code",
    "make_dag4_env",
    "make_6node_dag",
    "make_6node_env",
    "with_context_nodes",
]


@dataclass(eq=False)
class Environment:
    """An SCM together with its ordered arm list and exact arm means."""

    scm: DiscreteScm
    arms: list
    name: str = ""
    means: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.arms = list(self.arms)
        self.means = np.array([true_mean(self.scm, a) for a in self.arms])

    @property
    def graph(self) -> Dag:
        return self.scm.graph

    @property
    def best_mean(self) -> float:
        return float(self.means.max())

    @property
    def best_arm(self):
        return self.arms[int(np.argmax(self.means))]

    @property
    def gaps(self) -> np.ndarray:
        return self.best_mean - self.means


def make_game_env() -> Environment:
    """Two buttons A, B, a screen S and a reward Y.

    Unforced buttons are pressed with probability 1/2,
    ``P[S=1 | a, b] = (1 + a + b) / 4`` and ``P[Y=1 | s] = (1 + s) / 3``.
    """
    g = Dag.from_names(
        [("I_A", "A"), ("I_B", "B"), ("A", "S"), ("B", "S"), ("S", "Y")],
        context=["I_A", "I_B"], target="Y",
        nodes=["A", "B", "S", "Y", "I_A", "I_B"],
    )
    half = np.array([[0.5, 0.5]])
    s_rows = []
    for a, b in itertools.product((0, 1), repeat=2):
        p = (1 + a + b) / 4
        s_rows.append([1 - p, p])
    y_rows = [[1 - (1 + s) / 3, (1 + s) / 3] for s in (0, 1)]
    cpts = (half, half, np.array(s_rows), np.array(y_rows), None, None)
    scm = DiscreteScm(g, (2, 2, 2, 2, 2, 2), cpts)
    return Environment(scm, all_arms(g, scm.domain_sizes), "game")


def with_context_nodes(n_system: int, edges, target: int, names=None) -> Dag:
    """Add one context node ``I_V`` per non-target system node.

    System nodes keep ids ``0..n_system-1``; context nodes follow in order.
    """
    names = list(names or [f"V{i + 1}" for i in range(n_system)])
    ctx_for = [v for v in range(n_system) if v != target]
    all_edges = set(edges)
    for k, v in enumerate(ctx_for):
        all_edges.add((n_system + k, v))
        names.append(f"I_{names[v]}")
    context = frozenset(range(n_system, n_system + len(ctx_for)))
    return Dag(len(names), frozenset(all_edges), context, target, tuple(names))


def canonical_code(edges, n: int = 4, target: int = 3) -> int:
    """Smallest adjacency bitmask over relabelings of the non-target nodes."""
    others = [v for v in range(n) if v != target]
    best = None
    for perm in itertools.permutations(others):
        relabel = dict(zip(others, perm))
        relabel[target] = target
        code = 0
        for p, c in edges:
            code |= 1 << (relabel[p] * n + relabel[c])
        if best is None or code < best:
            best = code
    return best


def _is_acyclic(n, edges) -> bool:
    indeg = [0] * n
    for _, c in edges:
        indeg[c] += 1
    ready = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for p, c in edges:
            if p == v:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
    return seen == n


@functools.lru_cache(maxsize=None)
def _dag4_system_graphs() -> tuple:
    n, target = 4, 3
    pairs = list(itertools.combinations(range(n), 2))
    classes = {}
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (i, j), s in zip(pairs, states):
            if s == 1:
                edges.append((i, j))
            elif s == 2:
                edges.append((j, i))
        if not any(c == target for _, c in edges) or not _is_acyclic(n, edges):
            continue
        code = canonical_code(edges, n, target)
        classes.setdefault(code, frozenset(
            (p, c) for p in range(n) for c in range(n) if code >> (p * n + c) & 1))
    return tuple(classes[k] for k in sorted(classes))


def enumerate_4node_suite() -> list:
    """All 4-node DAGs where ``Y`` has a parent, up to relabeling of non-``Y`` nodes.

    Nodes ``V1, V2, V3`` are ids 0-2, ``Y`` is id 3 and ``I_V1..I_V3`` are
    ids 4-6. Each returned graph is the minimum-code representative of its
    class; the list is sorted by that code.
    """
    names = ["V1", "V2", "V3", "Y"]
    return [with_context_nodes(4, edges, 3, names) for edges in _dag4_system_graphs()]


def make_dag4_env(g: Dag, rng: np.random.Generator) -> Environment:
    scm = random_parametrization(g, rng)
    return Environment(scm, all_arms(g, scm.domain_sizes), "dag4")


def make_6node_dag(rng: np.random.Generator, p_two: float = 0.5) -> Dag:
    """Random DAG over ``V1..V6`` in topological order with ``Y = V6``.

    Each ``V_i`` (i > 1) draws 2 parents with probability ``p_two`` and 1
    otherwise, uniformly among earlier nodes (``V2`` can only get ``V1``).
    """
    edges = []
    for i in range(1, 6):
        k = 2 if rng.random() < p_two else 1
        k = min(k, i)
        for p in sorted(rng.choice(i, size=k, replace=False).tolist()):
            edges.append((p, i))
    return with_context_nodes(6, edges, 5, [f"V{i}" for i in range(1, 7)])


def make_6node_env(rng: np.random.Generator, p_two: float = 0.5) -> Environment:
    g = make_6node_dag(rng, p_two)
    scm = random_parametrization(g, rng)
    return Environment(scm, all_arms(g, scm.domain_sizes), "dag6")
