"""Information-sharing estimator and its confidence bounds.

Given a separating set ``S`` the mean reward of an arm factors as
``sum_s P[S=s | arm] * E[Y | S=s]``. The first factor is estimated from the
arm's own records only; the second is pooled over every record, which is
where other arms' data helps.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, decode
from .exceptions import IncompleteSupportError, NoDataError
from .graph import Dag
from .scm import DiscreteScm, marginal, pinned, sample_many

__all__ = [
    "mu_is",
    "effective_domain",
    "domain_mask",
    "idx",
    "lcb_idx",
    "bound_from_counts",
    "l1_deviation_bound",
    "sepset_bounds",
    "VarianceDiagnostics",
    "variance_diagnostics",
]


def mu_is(d: Dataset, s_vars, arm) -> float:
    """``sum_s mu_hat(s) * p_hat(s | arm)`` over values seen under ``arm``."""
    a = d.ordinal(arm)
    n = d.arm_counts[a]
    if n == 0:
        raise NoDataError(f"no records for arm {d.arms[a]}")
    t = d.table(s_vars)
    row = t.counts[a]
    seen = row > 0
    pooled_n = t.counts[:, seen].sum(axis=0)
    pooled_y = t.ones[:, seen].sum(axis=0)
    return float(np.sum((pooled_y / pooled_n) * row[seen]) / n)


def effective_domain(g: Dag, s_vars, arm, domain_sizes=None) -> list:
    """Value tuples of ``s_vars`` compatible with the perfect interventions of ``arm``."""
    sizes = domain_sizes if domain_sizes is not None else (2,) * g.n_nodes
    fixed = pinned(g, arm)
    axes = [(fixed[v],) if v in fixed else range(sizes[v]) for v in s_vars]
    return list(itertools.product(*axes))


@functools.lru_cache(maxsize=4096)
def domain_mask(g: Dag, s_vars: tuple, arms: tuple, domain_sizes: tuple) -> np.ndarray:
    """Boolean ``(n_arms, n_codes)`` mask of each arm's effective domain."""
    sizes = [domain_sizes[v] for v in s_vars]
    n_codes = math.prod(sizes)
    mask = np.zeros((len(arms), n_codes), dtype=bool)
    for i, arm in enumerate(arms):
        for s in effective_domain(g, s_vars, arm, domain_sizes):
            code = 0
            for v, k in zip(s, sizes):
                code = code * k + v
            mask[i, code] = True
    mask.setflags(write=False)
    return mask


def l1_deviation_bound(k: int, n: int, delta: float) -> float:
    """Radius ``sqrt(2 k log(2/delta) / n)`` that the L1 error of an empirical
    distribution over ``k`` values from ``n`` draws exceeds with probability
    at most ``delta``."""
    return math.sqrt(2 * k * math.log(2 / delta) / n)


def bound_from_counts(p_hat, mu_hat, n_s, n_arm, delta, lower=False) -> float:
    """Closed-form bound for one arm over its effective domain.

    ``p_hat``, ``mu_hat`` and ``n_s`` are aligned vectors over the effective
    domain; ``n_arm`` is ``N(I = arm)``. Hoeffding widths use
    ``log(2K/delta)`` and the multinomial correction uses
    ``sqrt(K log(4/delta) / (2 n_arm))`` with ``K`` the domain size, which is
    half of :func:`l1_deviation_bound` at level ``delta / 2``.
    """
    p_hat = np.asarray(p_hat, dtype=float)
    mu_hat = np.asarray(mu_hat, dtype=float)
    n_s = np.asarray(n_s, dtype=float)
    k = len(p_hat)
    widths = np.sqrt(math.log(2 * k / delta) / (2 * n_s))
    spread = 0.5 * l1_deviation_bound(k, n_arm, delta / 2)
    if lower:
        b = mu_hat - widths
        return float(p_hat @ b - spread * (b.max() - b.min()))
    b = mu_hat + widths
    return float(p_hat @ b + spread * (b.max() - b.min()))


def _arm_inputs(d: Dataset, g: Dag, s_vars, arm):
    a = d.ordinal(arm)
    n_arm = d.arm_counts[a]
    if n_arm == 0:
        raise NoDataError(f"no records for arm {d.arms[a]}")
    t = d.table(s_vars)
    codes = [d.code(s_vars, s) for s in effective_domain(g, s_vars, d.arms[a], d.domain_sizes)]
    n_s = t.counts[:, codes].sum(axis=0)
    if np.any(n_s == 0):
        missing = [decode(c, t.sizes) for c, n in zip(codes, n_s) if n == 0]
        raise IncompleteSupportError(f"no records with {tuple(s_vars)} in {missing}")
    mu = t.ones[:, codes].sum(axis=0) / n_s
    p = t.counts[a, codes] / n_arm
    return p, mu, n_s, n_arm


def idx(d: Dataset, g: Dag, s_vars, arm, delta: float) -> float:
    """Upper confidence index of ``arm`` through separating set ``s_vars``.

    Raises :class:`IncompleteSupportError` when some value in the arm's
    effective domain has never been observed.
    """
    return bound_from_counts(*_arm_inputs(d, g, s_vars, arm), delta)


def lcb_idx(d: Dataset, g: Dag, s_vars, arm, delta: float) -> float:
    """Symmetric lower confidence bound; see :func:`idx`."""
    return bound_from_counts(*_arm_inputs(d, g, s_vars, arm), delta, lower=True)


def sepset_bounds(d: Dataset, g: Dag, s_vars, delta: float, lower: bool = False):
    """Vectorised :func:`idx` / :func:`mu_is` over every arm of ``d``.

    Returns ``(bound, estimate, valid)``; entries where ``valid`` is False
    (no data for the arm, or an unobserved value in its effective domain)
    hold NaN.
    """
    s_vars = tuple(s_vars)
    t = d.table(s_vars)
    mask = domain_mask(g, s_vars, d.arms, d.domain_sizes)
    n_s = t.counts.sum(axis=0)
    n_arm = d.arm_counts
    valid = (n_arm > 0) & ~np.any(mask & (n_s == 0), axis=1)
    k = mask.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = t.ones.sum(axis=0) / n_s
        p = t.counts / n_arm[:, None]
        widths = np.sqrt(np.log(2 * k / delta)[:, None] / (2 * n_s[None, :]))
        spread = np.sqrt(k * math.log(4 / delta) / (2 * n_arm))
    b = mu[None, :] - widths if lower else mu[None, :] + widths
    b_max = np.where(mask, b, -np.inf).max(axis=1)
    b_min = np.where(mask, b, np.inf).min(axis=1)
    with np.errstate(invalid="ignore"):
        inner = np.where(mask, p * b, 0.0).sum(axis=1)
        est = np.where(p > 0, p * mu[None, :], 0.0).sum(axis=1)
        bound = inner - spread * (b_max - b_min) if lower else inner + spread * (b_max - b_min)
    bound = np.where(valid, bound, np.nan)
    est = np.where(valid, est, np.nan)
    return bound, est, valid


@dataclass
class VarianceDiagnostics:
    """Quantities in the variance decomposition of the estimator for one arm.

    ``predicted_variance`` is
    ``(term_between + (1 - alpha_star) * term_within) / N(I = arm)``.
    """

    alpha_per_s: dict
    alpha_star: float
    term_between: float
    term_within: float
    n_arm: int

    @property
    def predicted_variance(self) -> float:
        return (self.term_between + (1 - self.alpha_star) * self.term_within) / self.n_arm


def variance_diagnostics(d: Dataset, scm: DiscreteScm, s_vars, arm, n_reps: int = 1000,
                         rng: np.random.Generator | None = None) -> VarianceDiagnostics:
    """Sharing weights from ``d`` and exact variance terms from ``scm``.

    ``alpha(s) = N(S=s, I != arm) / N(S=s)`` is read off ``d`` for every
    observed ``s``. ``alpha_star`` is an expectation over datasets, so it is
    estimated by redrawing ``n_reps`` datasets with the per-arm counts of
    ``d`` held fixed.
    """
    rng = rng if rng is not None else np.random.default_rng()
    s_vars = tuple(s_vars)
    a = d.ordinal(arm)
    t = d.table(s_vars)
    n_s = t.counts.sum(axis=0)
    alpha = {}
    for code in np.flatnonzero(n_s):
        alpha[decode(int(code), t.sizes)] = float((n_s[code] - t.counts[a, code]) / n_s[code])

    law = marginal(scm, d.arms[a], s_vars)
    probs = np.array([p for p, _ in law.values()])
    means = np.array([m for _, m in law.values()])
    overall = probs @ means
    term_between = float(probs @ (means - overall) ** 2)
    term_within = float(probs @ (means * (1 - means)))

    n_codes = t.counts.shape[1]
    weight = np.zeros(n_codes)
    for s, (_, m) in law.items():
        weight[d.code(s_vars, s)] = m * (1 - m)
    radix = np.array([math.prod(t.sizes[i + 1:]) for i in range(len(t.sizes))], dtype=np.int64)
    per_arm = np.zeros((n_reps, d.n_arms, n_codes))
    for b, n_b in enumerate(d.arm_counts):
        if n_b == 0:
            continue
        draws = sample_many(scm, d.arms[b], int(n_b) * n_reps, rng)
        codes = (draws[:, list(s_vars)] @ radix).reshape(n_reps, int(n_b))
        flat = (np.arange(n_reps)[:, None] * n_codes + codes).ravel()
        per_arm[:, b, :] = np.bincount(flat, minlength=n_reps * n_codes).reshape(n_reps, n_codes)
    own = per_arm[:, a, :]
    total = per_arm.sum(axis=1)
    p_rep = own / d.arm_counts[a]
    with np.errstate(invalid="ignore", divide="ignore"):
        alpha_rep = np.where(total > 0, (total - own) / total, 0.0)
    num = (p_rep * alpha_rep).mean(axis=0) @ weight
    den = p_rep.mean(axis=0) @ weight
    alpha_star = float(num / den) if den > 0 else 0.0
    return VarianceDiagnostics(alpha, alpha_star, term_between, term_within, int(d.arm_counts[a]))
