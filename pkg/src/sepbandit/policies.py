"""Bandit policies: UCB, Thompson sampling and their information-sharing variants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .discovery import SepSetCatalog
from .estimators import domain_mask, sepset_bounds
from .exceptions import ConfigError
from .graph import Dag

__all__ = [
    "PolicyConfig",
    "RoundLog",
    "KINDS",
    "DISCOVERY_MODES",
    "delta_schedule",
    "ucb_indices",
    "choose_ucb",
    "choose_ts",
    "best_widths",
    "choose_is_ucb",
    "choose_is_ts",
    "is_ts_indices",
    "initial_phase_arm",
]

KINDS = ("ucb", "ts", "is_ucb", "is_ts", "oracle")
DISCOVERY_MODES = ("none", "direct_test", "oracle_sepsets", "oracle_parents")


@dataclass
class PolicyConfig:
    """One policy in an experiment.

    ``kind="oracle"`` always plays the best arm after the initial phase; it
    is a reference line, not a learner.
    """

    kind: str = "ucb"
    discovery: str = "none"
    initial_pulls: int | None = None
    max_sepset_size: int | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if self.discovery not in DISCOVERY_MODES:
            raise ConfigError(f"unknown discovery mode {self.discovery!r}")
        if self.kind.startswith("is_") and self.discovery == "none":
            raise ConfigError(f"{self.kind} needs a discovery mode")
        if self.name is None:
            self.name = self.kind if self.discovery == "none" else f"{self.kind}:{self.discovery}"

    @classmethod
    def parse(cls, spec: str) -> "PolicyConfig":
        """``"ucb"``, ``"is_ucb:direct_test"`` and the like."""
        kind, _, disc = spec.strip().partition(":")
        return cls(kind=kind, discovery=disc or "none")


@dataclass
class RoundLog:
    t: int
    arm: tuple
    chosen_index: float
    width_used: object  # "standard" or the winning separating set
    reward: int | None = None
    width: float = math.nan
    standard_width: float = math.nan

    @property
    def width_kind(self) -> str:
        return "standard" if self.width_used == "standard" else "sepset"


def delta_schedule(n: int) -> float:
    """``1 / (1 + n log(n)^2)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1.0 / (1.0 + n * math.log(n) ** 2)


def _ordinals(d: Dataset, arms) -> np.ndarray | None:
    if arms is None or arms is d.arms or list(arms) == list(d.arms):
        return None
    return np.array([d.arm_index[tuple(a)] for a in arms], dtype=np.int64)


def ucb_indices(d: Dataset, n: int):
    """Sample-mean UCB index and width for every arm of ``d``."""
    counts = d.arm_counts
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = d.arm_ones / counts
        width = np.sqrt(math.log(1.0 / delta_schedule(n)) / (2.0 * counts))
    width = np.where(counts > 0, width, np.inf)
    mean = np.where(counts > 0, mean, 0.0)
    return mean + width, width


def _argmax(values, ords, arms, d):
    sub = values if ords is None else values[ords]
    i = int(np.argmax(sub))
    arm = d.arms[i] if ords is None else tuple(arms[i])
    return arm, i if ords is None else int(ords[i])


def choose_ucb(d: Dataset, arms, n: int):
    """Arm with the highest sample-mean UCB; ties go to the first arm."""
    index, _ = ucb_indices(d, n)
    arm, _ = _argmax(index, _ordinals(d, arms), arms, d)
    return arm


def choose_ts(d: Dataset, arms, rng: np.random.Generator):
    """Beta(successes + 1, failures + 1) Thompson draw per arm."""
    ords = _ordinals(d, arms)
    ones = d.arm_ones if ords is None else d.arm_ones[ords]
    zeros = (d.arm_counts - d.arm_ones) if ords is None else (d.arm_counts - d.arm_ones)[ords]
    draws = rng.beta(ones + 1, zeros + 1)
    i = int(np.argmax(draws))
    return d.arms[i] if ords is None else tuple(arms[i])


def best_widths(d: Dataset, g: Dag, catalog, n: int):
    """Width competition shared by both information-sharing policies.

    Returns ``(index, width, winner, standard_width)`` over the arms of
    ``d``; ``winner[i]`` is -1 when the standard width is kept, otherwise
    the catalog position of the winning set. A set only replaces the
    current best when its width is strictly smaller.
    """
    delta = delta_schedule(n)
    index, std_width = ucb_indices(d, n)
    index = index.copy()
    width = std_width.copy()
    winner = np.full(d.n_arms, -1, dtype=np.int64)
    for k, s in enumerate(catalog or ()):
        bound, est, valid = sepset_bounds(d, g, s, delta)
        new_width = bound - est
        better = valid & (new_width < width)
        if better.any():
            index[better] = bound[better]
            width[better] = new_width[better]
            winner[better] = k
    return index, width, winner, std_width


def choose_is_ucb(d: Dataset, g: Dag, catalog: SepSetCatalog, arms, n: int):
    """Information-sharing UCB; returns ``(arm, RoundLog)``."""
    catalog = tuple(catalog or ())
    index, width, winner, std_width = best_widths(d, g, catalog, n)
    arm, a = _argmax(index, _ordinals(d, arms), arms, d)
    used = "standard" if winner[a] < 0 else catalog[winner[a]]
    log = RoundLog(n + 1, arm, float(index[a]), used, None, float(width[a]), float(std_width[a]))
    return arm, log


def is_ts_indices(d: Dataset, g: Dag, catalog, n: int, rng: np.random.Generator):
    """Thompson indices of every arm plus the winning-set vector of :func:`best_widths`.

    Every arm first gets a plain Beta draw; arms whose width competition is
    won by a separating set then get ``p~ . mu~`` with
    ``p~ ~ Dirichlet(N(S=s, I=arm) + 0.5)`` over the arm's effective domain
    and ``mu~_s ~ Beta(N(Y=1, S=s) + 1, N(Y=0, S=s) + 1)``.
    """
    catalog = tuple(catalog or ())
    ones = d.arm_ones
    zeros = d.arm_counts - d.arm_ones
    index = rng.beta(ones + 1, zeros + 1)
    if not catalog:
        return index, np.full(d.n_arms, -1, dtype=np.int64)
    _, _, winner, _ = best_widths(d, g, catalog, n)
    for k, s in enumerate(catalog):
        rows = np.flatnonzero(winner == k)
        if rows.size == 0:
            continue
        t = d.table(s)
        mask = domain_mask(g, tuple(s), d.arms, d.domain_sizes)[rows]
        conc = np.where(mask, t.counts[rows] + 0.5, 1.0)
        gam = np.where(mask, rng.gamma(conc), 0.0)
        p = gam / gam.sum(axis=1, keepdims=True)
        s_ones = t.ones.sum(axis=0)
        s_zeros = t.counts.sum(axis=0) - s_ones
        mu = rng.beta(np.broadcast_to(s_ones + 1, mask.shape), np.broadcast_to(s_zeros + 1, mask.shape))
        index[rows] = (p * mu).sum(axis=1)
    return index, winner


def choose_is_ts(d: Dataset, g: Dag, catalog: SepSetCatalog, arms, n: int,
                 rng: np.random.Generator):
    """Information-sharing Thompson sampling; with no sets this is :func:`choose_ts`."""
    index, _ = is_ts_indices(d, g, catalog, n, rng)
    arm, _ = _argmax(index, _ordinals(d, arms), arms, d)
    return arm


def initial_phase_arm(d: Dataset, arms, pulls: int):
    """Round-robin warm-up: the least-pulled arm while any is below ``pulls``.

    Ties go to the lowest ordinal, so a fresh dataset starts at arm 0 and the
    phase cycles through the arms in order. Returns ``None`` once every arm
    has its quota.
    """
    ords = _ordinals(d, arms)
    counts = d.arm_counts if ords is None else d.arm_counts[ords]
    if counts.min() >= pulls:
        return None
    i = int(np.argmin(counts))
    return d.arms[i] if ords is None else tuple(arms[i])
