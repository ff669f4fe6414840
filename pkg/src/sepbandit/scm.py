"""Discrete structural causal models with perfect interventions.

A model is a :class:`~sepbandit.graph.Dag` plus one conditional probability
table per system node. Context nodes carry no table: an arm assigns each of
them either ``None`` (observe) or a value, and a non-``None`` value forces
every child of that context node to the value.

Arms are plain tuples aligned with ``graph.context_nodes``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CapacityError, StructuralError
from .graph import Dag, format_graph, parse_graph, topological_order

__all__ = [
    "DiscreteScm",
    "all_arms",
    "pinned",
    "validate_arm",
    "arm_label",
    "sample",
    "sample_many",
    "exact_distribution",
    "true_mean",
    "marginal",
    "match_cpt",
    "random_parametrization",
    "format_scm",
    "parse_scm",
    "DEFAULT_STATE_CAP",
]

DEFAULT_STATE_CAP = 2 ** 20
ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteScm:
    """CPT-backed SCM.

    ``cpts[v]`` has shape ``(n_rows, domain_sizes[v])`` where rows enumerate
    assignments of ``graph.system_parents(v)`` in row-major order (last
    parent varies fastest). ``cpts[v]`` is ``None`` for context nodes.
    """

    graph: Dag
    domain_sizes: tuple
    cpts: tuple
    _plan: tuple = field(init=False, repr=False)

    def __post_init__(self):
        g = self.graph
        sizes = tuple(int(k) for k in self.domain_sizes)
        object.__setattr__(self, "domain_sizes", sizes)
        if len(sizes) != g.n_nodes or len(self.cpts) != g.n_nodes:
            raise StructuralError("domain_sizes and cpts need one entry per node")
        if sizes[g.target] != 2:
            raise StructuralError("the target must be binary")
        cpts = []
        plan = []
        for v in topological_order(g):
            if v in g.context:
                continue
            if sizes[v] < 2:
                raise StructuralError(f"node {g.names[v]} needs a domain of size >= 2")
            pa = g.system_parents(v)
            dims = [sizes[p] for p in pa]
            table = np.asarray(self.cpts[v], dtype=float).reshape(-1, sizes[v])
            if table.shape[0] != math.prod(dims):
                raise StructuralError(f"CPT of {g.names[v]} has {table.shape[0]} rows, "
                                      f"expected {math.prod(dims)}")
            if np.any(table < 0) or np.any(np.abs(table.sum(axis=1) - 1.0) > ROW_TOL):
                raise StructuralError(f"CPT rows of {g.names[v]} must be distributions")
            strides = [math.prod(dims[i + 1:]) for i in range(len(dims))]
            cum = np.cumsum(table, axis=1)[:, :-1]
            plan.append((v, pa, tuple(strides), cum, [list(r) for r in cum]))
        for v in range(g.n_nodes):
            if v in g.context:
                cpts.append(None)
            else:
                cpts.append(np.asarray(self.cpts[v], dtype=float).reshape(-1, sizes[v]))
        object.__setattr__(self, "cpts", tuple(cpts))
        object.__setattr__(self, "_plan", tuple(plan))

    def cpt(self, node) -> np.ndarray:
        return self.cpts[node]


def all_arms(g: Dag, domain_sizes) -> list:
    """Every arm: each context node is ``None`` or a value of its targets."""
    choices = []
    for c in g.context_nodes:
        targets = g.children(c)
        k = min((domain_sizes[t] for t in targets), default=0)
        choices.append((None,) + tuple(range(k)))
    return list(itertools.product(*choices))


def pinned(g: Dag, arm) -> dict:
    """Map each intervened system node to its forced value."""
    out = {}
    for c, val in zip(g.context_nodes, arm):
        if val is not None:
            for t in g.children(c):
                out[t] = val
    return out


def validate_arm(g: Dag, arm, domain_sizes) -> None:
    if len(arm) != len(g.context):
        raise ValueError(f"arm {arm!r} must assign all {len(g.context)} context nodes")
    for c, val in zip(g.context_nodes, arm):
        if val is None:
            continue
        for t in g.children(c):
            if not 0 <= val < domain_sizes[t]:
                raise ValueError(f"value {val} outside the domain of {g.names[t]}")


def arm_label(arm) -> str:
    """Compact text form: ``(None, 1) -> '_.1'``."""
    return ".".join("_" if v is None else str(v) for v in arm)


def sample(scm: DiscreteScm, arm, rng: np.random.Generator) -> np.ndarray:
    """One ancestral draw under ``arm``.

    Returns an int array over all node ids; context entries hold the arm
    value, or -1 for ``None``. One uniform is consumed per system node
    whether or not it is intervened on.
    """
    g = scm.graph
    fixed = pinned(g, arm)
    out = np.full(g.n_nodes, -1, dtype=np.int64)
    for c, val in zip(g.context_nodes, arm):
        if val is not None:
            out[c] = val
    u = rng.random(len(scm._plan)).tolist()
    vals = [0] * g.n_nodes
    for k, (v, pa, strides, _, cum) in enumerate(scm._plan):
        if v in fixed:
            x = fixed[v]
        else:
            row = 0
            for p, s in zip(pa, strides):
                row += vals[p] * s
            x = 0
            for threshold in cum[row]:
                if u[k] >= threshold:
                    x += 1
                else:
                    break
        vals[v] = x
        out[v] = x
    return out


def sample_many(scm: DiscreteScm, arm, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent draws, shape ``(n, n_nodes)``; vectorised :func:`sample`."""
    g = scm.graph
    fixed = pinned(g, arm)
    out = np.full((n, g.n_nodes), -1, dtype=np.int64)
    for c, val in zip(g.context_nodes, arm):
        if val is not None:
            out[:, c] = val
    u = rng.random((n, len(scm._plan)))
    for k, (v, pa, strides, cum, _) in enumerate(scm._plan):
        if v in fixed:
            out[:, v] = fixed[v]
            continue
        row = np.zeros(n, dtype=np.int64)
        for p, s in zip(pa, strides):
            row += out[:, p] * s
        out[:, v] = (u[:, k:k + 1] >= cum[row]).sum(axis=1)
    return out


def exact_distribution(scm: DiscreteScm, arm, cap: int = DEFAULT_STATE_CAP):
    """All system-node states reachable under ``arm`` with their probabilities.

    Returns ``(states, probs)``; ``states`` has shape ``(k, n_nodes)`` with
    context columns filled as in :func:`sample`.
    """
    g = scm.graph
    fixed = pinned(g, arm)
    free = [v for v, *_ in scm._plan if v not in fixed]
    size = math.prod(scm.domain_sizes[v] for v in free)
    if size > cap:
        raise CapacityError(f"{size} joint states exceed the cap of {cap}")
    grids = np.indices([scm.domain_sizes[v] for v in free]).reshape(len(free), -1)
    states = np.full((grids.shape[1], g.n_nodes), -1, dtype=np.int64)
    for c, val in zip(g.context_nodes, arm):
        if val is not None:
            states[:, c] = val
    for v, val in fixed.items():
        states[:, v] = val
    for i, v in enumerate(free):
        states[:, v] = grids[i]
    probs = np.ones(states.shape[0])
    for v, pa, strides, _, _ in scm._plan:
        if v in fixed:
            continue
        row = np.zeros(states.shape[0], dtype=np.int64)
        for p, s in zip(pa, strides):
            row += states[:, p] * s
        probs *= scm.cpts[v][row, states[:, v]]
    return states, probs


def true_mean(scm: DiscreteScm, arm, cap: int = DEFAULT_STATE_CAP) -> float:
    """Exact ``E[Y | I = arm]`` by enumeration."""
    states, probs = exact_distribution(scm, arm, cap)
    return float(probs[states[:, scm.graph.target] == 1].sum())


def marginal(scm: DiscreteScm, arm, nodes, cap: int = DEFAULT_STATE_CAP) -> dict:
    """Exact joint law of ``nodes`` under ``arm``, with ``P[Y=1 | nodes]``.

    Returns ``{value_tuple: (probability, conditional_mean_of_Y)}`` for every
    value tuple of positive probability.
    """
    states, probs = exact_distribution(scm, arm, cap)
    y = states[:, scm.graph.target]
    out = {}
    keys = [tuple(r) for r in states[:, list(nodes)]]
    acc = {}
    for key, p, yy in zip(keys, probs, y):
        tot, hit = acc.get(key, (0.0, 0.0))
        acc[key] = (tot + p, hit + p * yy)
    for key in sorted(acc):
        tot, hit = acc[key]
        if tot > 0:
            out[key] = (tot, hit / tot)
    return out


def match_cpt(target_vector) -> np.ndarray:
    """Binary CPT with ``P[V=1 | pa] = (1 + #matches(t, pa)) / (2 + |pa|)``."""
    t = np.asarray(target_vector, dtype=np.int64)
    k = len(t)
    rows = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int64).reshape(2 ** k, k)
    p1 = (1.0 + (rows == t).sum(axis=1)) / (2.0 + k)
    return np.column_stack([1.0 - p1, p1])


def random_parametrization(g: Dag, rng: np.random.Generator) -> DiscreteScm:
    """Binary SCM whose CPTs follow :func:`match_cpt` with uniform target vectors.

    Target vectors are drawn in topological order.
    """
    cpts = [None] * g.n_nodes
    for v in topological_order(g):
        if v in g.context:
            continue
        t = rng.integers(0, 2, size=len(g.system_parents(v)))
        cpts[v] = match_cpt(t)
    return DiscreteScm(g, tuple(2 for _ in g.nodes), tuple(cpts))


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def format_scm(scm: DiscreteScm) -> str:
    """Graph text followed by ``domain:`` and ``cpt:`` blocks.

    A ``cpt: V | P1 P2`` block lists one row per parent assignment in
    row-major order, each row giving ``P[V = 0..k-1]``.
    """
    g = scm.graph
    lines = [format_graph(g).rstrip("\n")]
    sizes = " ".join(f"{g.names[v]}={scm.domain_sizes[v]}" for v in g.system_nodes)
    lines.append(f"domain: {sizes}")
    for v in g.system_nodes:
        pa = " ".join(g.names[p] for p in g.system_parents(v))
        lines.append(f"cpt: {g.names[v]} |" + (f" {pa}" if pa else ""))
        for row in scm.cpts[v]:
            lines.append("  " + " ".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_scm(text: str) -> DiscreteScm:
    graph_lines, blocks, domain_spec = [], {}, {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("cpt:"):
            head = line[4:].split("|", 1)
            current = head[0].strip()
            blocks[current] = []
        elif line.startswith("domain:"):
            current = None
            for item in line[7:].split():
                name, _, k = item.partition("=")
                domain_spec[name] = int(k)
        elif current is not None and "->" not in line and ":" not in line:
            blocks[current].append([float(x) for x in line.split()])
        else:
            current = None
            graph_lines.append(line)
    g = parse_graph("\n".join(graph_lines))
    sizes = tuple(domain_spec.get(name, 2) for name in g.names)
    cpts = [None] * g.n_nodes
    for v in g.system_nodes:
        name = g.names[v]
        if name not in blocks:
            raise StructuralError(f"missing cpt block for {name}")
        table = np.array(blocks[name], dtype=float)
        # 12 significant digits leave rows off by ~1e-12
        cpts[v] = table / table.sum(axis=1, keepdims=True)
    return DiscreteScm(g, sizes, tuple(cpts))
