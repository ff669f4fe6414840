"""Interaction log and count-based estimators.

A :class:`Dataset` stores every ``(arm, outcome)`` pair and answers count
queries ``N(predicate)``. For a set of nodes ``S`` it keeps a lazily built
table ``counts[arm, s]`` plus the matching ``Y = 1`` counts, indexed by a
mixed-radix code of the value tuple ``s`` (first node most significant).
Tables are created on first query and updated on every later append.
"""

from __future__ import annotations

import csv
import math
from typing import Iterable, Mapping

import numpy as np

from .exceptions import NoDataError
from .graph import Dag
from .scm import arm_label

__all__ = ["Dataset", "p_hat", "mu_hat", "mu_sm", "encode", "decode"]


def _radix(sizes) -> np.ndarray:
    w = [math.prod(sizes[i + 1:]) for i in range(len(sizes))]
    return np.array(w, dtype=np.int64)


def encode(values, sizes) -> int:
    """Mixed-radix code of a value tuple (first entry most significant)."""
    code = 0
    for v, k in zip(values, sizes):
        if not 0 <= v < k:
            raise ValueError(f"value {v} outside domain of size {k}")
        code = code * k + int(v)
    return code


def decode(code: int, sizes) -> tuple:
    out = []
    for k in reversed(sizes):
        code, r = divmod(code, k)
        out.append(r)
    return tuple(reversed(out))


class _Table:
    __slots__ = ("nodes", "sizes", "radix", "counts", "ones")

    def __init__(self, nodes, sizes, n_arms):
        self.nodes = list(nodes)
        self.sizes = tuple(sizes)
        self.radix = _radix(self.sizes)
        n_codes = math.prod(self.sizes)
        self.counts = np.zeros((n_arms, n_codes), dtype=np.int64)
        self.ones = np.zeros((n_arms, n_codes), dtype=np.int64)


class Dataset:
    """Append-only log of ``(arm, outcome)`` records.

    Parameters
    ----------
    graph : the causal graph (fixes node ids and the target)
    arms : ordered arm list; records refer to arms by their ordinal
    domain_sizes : per-node domain sizes (defaults to all binary)
    """

    def __init__(self, graph: Dag, arms, domain_sizes=None, capacity: int = 256):
        self.graph = graph
        self.arms = tuple(tuple(a) for a in arms)
        self.arm_index = {a: i for i, a in enumerate(self.arms)}
        if len(self.arm_index) != len(self.arms):
            raise ValueError("duplicate arms")
        self.domain_sizes = tuple(domain_sizes) if domain_sizes is not None else (2,) * graph.n_nodes
        self.target = graph.target
        self._system = np.array(graph.system_nodes, dtype=np.int64)
        self._arm_col = np.empty(capacity, dtype=np.int64)
        self._vals = np.empty((capacity, graph.n_nodes), dtype=np.int64)
        self._n = 0
        self.arm_counts = np.zeros(len(self.arms), dtype=np.int64)
        self.arm_ones = np.zeros(len(self.arms), dtype=np.int64)
        self._tables = {}

    @classmethod
    def for_env(cls, env, capacity: int = 256) -> "Dataset":
        return cls(env.scm.graph, env.arms, env.scm.domain_sizes, capacity)

    def __len__(self):
        return self._n

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def arm_column(self) -> np.ndarray:
        return self._arm_col[:self._n]

    @property
    def values(self) -> np.ndarray:
        """``(n, n_nodes)`` view of the outcomes (context columns hold arm values)."""
        return self._vals[:self._n]

    def ordinal(self, arm) -> int:
        if isinstance(arm, (int, np.integer)):
            return int(arm)
        return self.arm_index[tuple(arm)]

    def _row(self, arm_ord, outcome) -> np.ndarray:
        g = self.graph
        row = np.full(g.n_nodes, -1, dtype=np.int64)
        if isinstance(outcome, Mapping):
            for key, val in outcome.items():
                v = g.index(key) if isinstance(key, str) else int(key)
                row[v] = val
        else:
            outcome = np.asarray(outcome, dtype=np.int64)
            if outcome.shape != (g.n_nodes,):
                raise ValueError(f"outcome must have {g.n_nodes} entries")
            row[:] = outcome
        sys_vals = row[self._system]
        if np.any(sys_vals < 0):
            missing = [g.names[v] for v in self._system[sys_vals < 0]]
            raise ValueError(f"outcome does not assign {missing}")
        for c, val in zip(g.context_nodes, self.arms[arm_ord]):
            row[c] = -1 if val is None else val
        return row

    def _grow(self, extra):
        need = self._n + extra
        if need <= len(self._arm_col):
            return
        cap = max(need, 2 * len(self._arm_col))
        self._arm_col = np.resize(self._arm_col, cap)
        vals = np.empty((cap, self.graph.n_nodes), dtype=np.int64)
        vals[:self._n] = self._vals[:self._n]
        self._vals = vals

    def append(self, arm, outcome) -> None:
        """Store one record and update every live count table."""
        a = self.ordinal(arm)
        row = self._row(a, outcome)
        self._grow(1)
        self._arm_col[self._n] = a
        self._vals[self._n] = row
        self._n += 1
        y = int(row[self.target])
        self.arm_counts[a] += 1
        self.arm_ones[a] += y
        for t in self._tables.values():
            code = int(row[t.nodes] @ t.radix)
            t.counts[a, code] += 1
            t.ones[a, code] += y

    def extend(self, arms, outcomes) -> None:
        """Bulk append; ``arms`` are arm tuples or ordinals, ``outcomes`` is ``(m, n_nodes)``."""
        ords = np.array([self.ordinal(a) for a in arms], dtype=np.int64)
        rows = np.array(outcomes, dtype=np.int64).reshape(len(ords), self.graph.n_nodes)
        if np.any(rows[:, self._system] < 0):
            raise ValueError("every outcome must assign all system nodes")
        for k, c in enumerate(self.graph.context_nodes):
            col = np.array([-1 if a[k] is None else a[k] for a in self.arms], dtype=np.int64)
            rows[:, c] = col[ords]
        m = len(ords)
        self._grow(m)
        self._arm_col[self._n:self._n + m] = ords
        self._vals[self._n:self._n + m] = rows
        self._n += m
        y = rows[:, self.target]
        self.arm_counts += np.bincount(ords, minlength=self.n_arms)
        self.arm_ones += np.bincount(ords, weights=y, minlength=self.n_arms).astype(np.int64)
        for t in self._tables.values():
            self._accumulate(t, ords, rows)

    def _accumulate(self, t, ords, rows):
        codes = rows[:, t.nodes] @ t.radix if t.nodes else np.zeros(len(ords), dtype=np.int64)
        flat = ords * t.counts.shape[1] + codes
        size = t.counts.size
        t.counts += np.bincount(flat, minlength=size).reshape(t.counts.shape)
        t.ones += np.bincount(flat, weights=rows[:, self.target], minlength=size
                              ).astype(np.int64).reshape(t.counts.shape)

    def table(self, s_vars) -> "_Table":
        """Count table for ``s_vars`` (built from the full log on first use)."""
        key = tuple(s_vars)
        t = self._tables.get(key)
        if t is None:
            t = _Table(key, [self.domain_sizes[v] for v in key], self.n_arms)
            self._accumulate(t, self.arm_column, self.values)
            self._tables[key] = t
        return t

    def code(self, s_vars, s_val) -> int:
        return encode(s_val, [self.domain_sizes[v] for v in s_vars])

    def count(self, values: Mapping | None = None, arm=None) -> int:
        """``N(predicate)`` by a full scan: conjunction of node equalities and an arm."""
        mask = np.ones(self._n, dtype=bool)
        if arm is not None:
            mask &= self.arm_column == self.ordinal(arm)
        for v, val in (values or {}).items():
            v = self.graph.index(v) if isinstance(v, str) else int(v)
            mask &= self.values[:, v] == val
        return int(mask.sum())

    def records(self) -> Iterable:
        """Yield ``(arm, outcome_tuple)`` pairs in insertion order."""
        for a, row in zip(self.arm_column.tolist(), self.values.tolist()):
            yield self.arms[a], tuple(row)

    def to_csv(self, path) -> None:
        """Dump the log: one column per context node, then one per system node."""
        g = self.graph
        sys_nodes = list(g.system_nodes)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([g.names[c] for c in g.context_nodes] + [g.names[v] for v in sys_nodes])
            for a, row in zip(self.arm_column.tolist(), self.values[:, sys_nodes].tolist()):
                w.writerow(arm_label(self.arms[a]).split(".") + row if self.arms[a] else row)


def p_hat(d: Dataset, s_vars, s_val, arm) -> float:
    """``N(S=s, I=arm) / N(I=arm)``."""
    a = d.ordinal(arm)
    n = d.arm_counts[a]
    if n == 0:
        raise NoDataError(f"no records for arm {d.arms[a]}")
    t = d.table(s_vars)
    return float(t.counts[a, d.code(s_vars, s_val)] / n)


def mu_hat(d: Dataset, s_vars, s_val) -> float:
    """Pooled mean of ``Y`` over all records with ``S = s``, whatever the arm."""
    t = d.table(s_vars)
    code = d.code(s_vars, s_val)
    n = t.counts[:, code].sum()
    if n == 0:
        raise NoDataError(f"no records with {tuple(s_vars)} = {tuple(s_val)}")
    return float(t.ones[:, code].sum() / n)


def mu_sm(d: Dataset, arm) -> float:
    """Plain sample mean of ``Y`` under ``arm``."""
    a = d.ordinal(arm)
    n = d.arm_counts[a]
    if n == 0:
        raise NoDataError(f"no records for arm {d.arms[a]}")
    return float(d.arm_ones[a] / n)
