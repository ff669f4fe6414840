"""Online separating-set discovery by direct G^2 independence tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .data import Dataset
from .graph import Dag, candidate_sets, oracle_separating_sets

__all__ = [
    "SepSetCatalog",
    "DiscoveryMetrics",
    "ARM",
    "g2_statistic",
    "g2_test",
    "discovery_threshold",
    "discover",
    "should_rerun",
    "score_discovery",
    "oracle_catalog",
    "parents_catalog",
]

ARM = "arm"
"""Variable spec selecting the joint arm (all context variables at once)."""


@dataclass
class SepSetCatalog:
    """Separating sets currently trusted by the information-sharing policies."""

    accepted: tuple = ()
    provenance: str = "direct_test"
    last_run_n: int | None = None

    def __post_init__(self):
        seen = []
        for s in self.accepted:
            s = tuple(sorted(s))
            if s not in seen:
                seen.append(s)
        self.accepted = tuple(seen)

    def __iter__(self):
        return iter(self.accepted)

    def __len__(self):
        return len(self.accepted)


@dataclass
class DiscoveryMetrics:
    sensitivity: float
    false_positive_rate: float
    n: int | None = None
    flagged: bool = field(default=False)


def g2_statistic(table) -> tuple:
    """G^2 and degrees of freedom for a ``(strata, rows, cols)`` count array.

    Each stratum contributes ``2 sum O log(O / E)`` and ``(r - 1)(c - 1)``
    where ``r`` and ``c`` count rows and columns with a positive margin;
    strata with fewer than two such rows or columns contribute nothing.
    """
    obs = np.asarray(table, dtype=float)
    if obs.ndim == 2:
        obs = obs[None]
    rows = obs.sum(axis=2)
    cols = obs.sum(axis=1)
    n = rows.sum(axis=1)
    r = (rows > 0).sum(axis=1)
    c = (cols > 0).sum(axis=1)
    live = (r >= 2) & (c >= 2)
    if not live.any():
        return 0.0, 0
    obs, rows, cols, n = obs[live], rows[live], cols[live], n[live]
    expected = rows[:, :, None] * cols[:, None, :] / n[:, None, None]
    pos = obs > 0
    g2 = 2.0 * float(np.sum(obs[pos] * np.log(obs[pos] / expected[pos])))
    df = int(np.sum((r[live] - 1) * (c[live] - 1)))
    return max(g2, 0.0), df


def _column(d: Dataset, var):
    if isinstance(var, str) and var == ARM:
        return d.arm_column, d.n_arms
    v = int(var)
    return d.values[:, v], d.domain_sizes[v]


def contingency(d: Dataset, x, y, cond=()) -> np.ndarray:
    """``(strata, |x|, |y|)`` counts, strata indexed by the code of ``cond``."""
    xs, nx = _column(d, x)
    ys, ny = _column(d, y)
    strata = np.zeros(len(d), dtype=np.int64)
    n_strata = 1
    for v in cond:
        k = d.domain_sizes[v]
        strata = strata * k + d.values[:, v]
        n_strata *= k
    flat = (strata * nx + xs) * ny + ys
    return np.bincount(flat, minlength=n_strata * nx * ny).reshape(n_strata, nx, ny)


def g2_test(d: Dataset, x, y, cond=()) -> float:
    """p-value of the G^2 test of ``x _||_ y | cond``; 1.0 when no degrees of freedom."""
    if len(d) == 0:
        raise ValueError("empty dataset")
    g2, df = g2_statistic(contingency(d, x, y, tuple(cond)))
    if df == 0:
        return 1.0
    return float(chi2.sf(g2, df))


def discovery_threshold(n: int, scale: float = 2.5) -> float:
    return scale / math.sqrt(n)


def discover(d: Dataset, variables=None, max_size: int | None = None,
             threshold: float | None = None, scale: float = 2.5) -> SepSetCatalog:
    """Accept every candidate ``S`` for which ``arm _||_ Y | S`` is not rejected.

    Candidates are subsets of ``variables`` (default: all non-target system
    nodes) of size at most ``max_size``. The test level defaults to
    ``scale / sqrt(len(d))``; a set is accepted when its p-value is at least
    that level. A level of 1 or more saturates: no sample can be that
    small, so every candidate is accepted without testing.
    """
    g = d.graph
    if len(d) == 0:
        raise ValueError("empty dataset")
    if threshold is None:
        threshold = discovery_threshold(len(d), scale)
    if variables is None:
        cands = candidate_sets(g, max_size)
    else:
        pool = sorted(v for v in variables if v != g.target)
        cands = [s for s in candidate_sets(g) if set(s) <= set(pool)
                 and (max_size is None or len(s) <= max_size)]
    if threshold >= 1:
        return SepSetCatalog(tuple(cands), "direct_test", len(d))
    accepted = [s for s in cands if g2_test(d, ARM, g.target, s) >= threshold]
    return SepSetCatalog(tuple(accepted), "direct_test", len(d))


def should_rerun(catalog: SepSetCatalog | None, n_now: int, growth: float = 1.25) -> bool:
    """True once the data has grown by ``growth`` since the last discovery run."""
    if catalog is None or catalog.last_run_n is None:
        return True
    # round() guards against 1.1 * 100 == 110.00000000000001
    return n_now >= math.ceil(round(growth * catalog.last_run_n, 9))


def score_discovery(catalog: SepSetCatalog, g: Dag, max_size: int | None = None,
                    n: int | None = None) -> DiscoveryMetrics:
    """Set-level sensitivity and false positive rate against d-separation.

    With no true separating sets, sensitivity is reported as 1 and flagged.
    """
    truth = set(oracle_separating_sets(g, max_size))
    cands = set(candidate_sets(g, max_size))
    acc = set(catalog.accepted)
    flagged = not truth
    sens = 1.0 if flagged else len(acc & truth) / len(truth)
    negatives = cands - truth
    fpr = len(acc - truth) / len(negatives) if negatives else 0.0
    return DiscoveryMetrics(sens, fpr, n, flagged)


def oracle_catalog(g: Dag, max_size: int | None = None) -> SepSetCatalog:
    """All true separating sets (d-separation), bypassing any testing."""
    return SepSetCatalog(tuple(oracle_separating_sets(g, max_size)), "oracle", None)


def parents_catalog(g: Dag) -> SepSetCatalog:
    """The system parents of the target as the single known separating set."""
    return SepSetCatalog((g.system_parents(g.target),), "oracle", None)
