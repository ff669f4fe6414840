"""Replicated bandit experiments: environments, runs, regret traces and CSV output.

Every (run, policy) pair is an independent task. Its random streams are
derived from ``(seed, run, policy)`` alone, so serial and parallel
execution give the same numbers. Outcome noise depends on ``(seed, run)``
only: all policies of a run face common random numbers.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .discovery import (
    SepSetCatalog,
    discover,
    oracle_catalog,
    parents_catalog,
    score_discovery,
    should_rerun,
)
from .envs import (
    Environment,
    enumerate_4node_suite,
    make_dag4_env,
    make_game_env,
    make_6node_env,
)
from .exceptions import ConfigError
from .policies import (
    PolicyConfig,
    RoundLog,
    choose_is_ts,
    choose_is_ucb,
    choose_ts,
    choose_ucb,
    initial_phase_arm,
    ucb_indices,
)
from .scm import all_arms, arm_label, parse_scm, sample

__all__ = [
    "ENVS",
    "ExperimentConfig",
    "RegretTrace",
    "ExperimentResult",
    "PolicyRun",
    "stream",
    "build_env",
    "simulate",
    "run_experiment",
    "aggregate",
    "parse_config",
    "load_config",
    "write_regret_csv",
    "write_agg_csv",
    "write_discovery_csv",
    "write_round_log",
    "write_diagnostics_csv",
    "write_outputs",
    "discovery_bench",
]

ENVS = ("game", "dag4_suite", "dag6", "file")
DEFAULT_HORIZON = {"game": 10_000, "dag4_suite": 10_000, "dag6": 20_000, "file": 10_000}

# spawn-key prefixes keep the stream families apart
_ENV_KEY, _OUTCOME_KEY, _SUITE_KEY, _POLICY_KEY, _BENCH_KEY = 1, 2, 3, 4, 5


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for the stream named by ``key``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _fmt(x) -> str:
    return format(float(x), ".12g")


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment's output.

    ``initial_pulls`` and ``max_sepset_size`` default per environment
    (10 pulls, or 3 on ``dag6``; all candidate sets, or size 3 on ``dag6``)
    and can be overridden per policy.
    """

    env: str = "game"
    horizon: int | None = None
    runs: int = 1
    seed: int = 0
    policies: list = field(default_factory=lambda: [PolicyConfig("ucb")])
    out: str | None = None
    initial_pulls: int | None = None
    max_sepset_size: int | None = None
    growth: float = 1.25
    threshold_scale: float = 2.5
    p_two: float = 0.5
    env_file: str | None = None
    workers: int = 1
    log_rounds: bool = False
    dump_data: bool = False
    experiment: str | None = None

    def __post_init__(self):
        if self.env not in ENVS:
            raise ConfigError(f"unknown env {self.env!r}; expected one of {ENVS}")
        if self.env == "file" and not self.env_file:
            raise ConfigError("env=file needs env_file")
        if self.horizon is None:
            self.horizon = DEFAULT_HORIZON[self.env]
        self.policies = [PolicyConfig.parse(p) if isinstance(p, str) else p for p in self.policies]
        if not self.policies:
            raise ConfigError("no policies configured")
        names = [p.name for p in self.policies]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate policy names in {names}")
        for label, val, lo in (("horizon", self.horizon, 1), ("runs", self.runs, 1),
                               ("workers", self.workers, 1)):
            if not isinstance(val, int) or val < lo:
                raise ConfigError(f"{label} must be an integer >= {lo}, got {val!r}")
        if self.initial_pulls is not None and self.initial_pulls < 1:
            raise ConfigError("initial_pulls must be >= 1")
        if self.growth <= 1:
            raise ConfigError("growth must exceed 1")
        if not 0 <= self.p_two <= 1:
            raise ConfigError("p_two must lie in [0, 1]")
        if self.experiment is None:
            self.experiment = self.env

    def pulls_for(self, policy: PolicyConfig) -> int:
        if policy.initial_pulls is not None:
            return policy.initial_pulls
        if self.initial_pulls is not None:
            return self.initial_pulls
        return 3 if self.env == "dag6" else 10

    def max_size_for(self, policy: PolicyConfig) -> int | None:
        if policy.max_sepset_size is not None:
            return policy.max_sepset_size
        if self.max_sepset_size is not None:
            return self.max_sepset_size
        return 3 if self.env == "dag6" else None


@dataclass
class PolicyRun:
    """Outcome of one policy on one environment."""

    arms: np.ndarray  # arm ordinal per round
    rewards: np.ndarray
    inst_regret: np.ndarray
    logs: list
    discovery: list  # (n, DiscoveryMetrics) per discovery run
    dataset: Dataset

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.inst_regret)


@dataclass
class RegretTrace:
    """Cumulative expected regret, ``cum[policy]`` of shape ``(runs, horizon)``."""

    policies: list
    cum: dict

    def aggregate(self) -> dict:
        return {p: aggregate(self.cum[p]) for p in self.policies}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    envs: list
    trace: RegretTrace
    runs: dict  # (policy name, run) -> PolicyRun


def build_env(cfg: ExperimentConfig, run: int, graph_ids=None) -> Environment:
    """Fresh environment for ``run``; depends on ``(seed, run)`` only."""
    rng = stream(cfg.seed, _ENV_KEY, run)
    if cfg.env == "game":
        return make_game_env()
    if cfg.env == "dag6":
        return make_6node_env(rng, cfg.p_two)
    if cfg.env == "file":
        scm = parse_scm(Path(cfg.env_file).read_text())
        return Environment(scm, all_arms(scm.graph, scm.domain_sizes), Path(cfg.env_file).stem)
    suite = enumerate_4node_suite()
    gid = graph_ids[run] if graph_ids is not None else run % len(suite)
    return make_dag4_env(suite[gid], rng)


def suite_graph_ids(cfg: ExperimentConfig) -> list:
    """Graph index per run: distinct graphs while they last, then cycling."""
    n = len(enumerate_4node_suite())
    if cfg.runs <= n:
        order = stream(cfg.seed, _SUITE_KEY).permutation(n)
        return sorted(order[:cfg.runs].tolist()) if cfg.runs < n else list(range(n))
    return [r % n for r in range(cfg.runs)]


def _initial_catalog(policy: PolicyConfig, g, max_size):
    if policy.discovery == "oracle_sepsets":
        return oracle_catalog(g, max_size)
    if policy.discovery == "oracle_parents":
        return parents_catalog(g)
    return None


def simulate(env: Environment, policy: PolicyConfig, horizon: int,
             outcome_rng: np.random.Generator, policy_rng: np.random.Generator, *,
             initial_pulls: int = 10, max_sepset_size: int | None = None,
             growth: float = 1.25, threshold_scale: float = 2.5,
             catalog: SepSetCatalog | None = None, log_rounds: bool = True) -> PolicyRun:
    """Play ``policy`` on ``env`` for ``horizon`` rounds.

    Outcomes come from ``outcome_rng`` and any policy randomness from
    ``policy_rng``, so two policies that pick the same arms see the same
    outcomes. ``catalog`` overrides the policy's own source of separating
    sets (useful to force an empty catalog).
    """
    g = env.graph
    d = Dataset.for_env(env, capacity=horizon)
    arms = d.arms
    means = env.means
    best = env.best_mean
    fixed = catalog is not None
    cat = catalog if fixed else _initial_catalog(policy, g, max_sepset_size)
    discovery = []
    chosen = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=np.int64)
    logs = []
    for t in range(1, horizon + 1):
        n = len(d)
        log = None
        arm = initial_phase_arm(d, arms, initial_pulls)
        if arm is not None:
            if log_rounds:
                log = RoundLog(t, arm, math.nan, "standard")
        else:
            if (not fixed and policy.discovery == "direct_test"
                    and should_rerun(cat, n, growth)):
                cat = discover(d, max_size=max_sepset_size, scale=threshold_scale)
                discovery.append((n, score_discovery(cat, g, max_sepset_size, n)))
            if policy.kind == "ucb":
                arm = choose_ucb(d, arms, n)
            elif policy.kind == "ts":
                arm = choose_ts(d, arms, policy_rng)
            elif policy.kind == "is_ucb":
                arm, log = choose_is_ucb(d, g, cat, arms, n)
                log.t = t
            elif policy.kind == "is_ts":
                arm = choose_is_ts(d, g, cat, arms, n, policy_rng)
            else:
                arm = env.best_arm
            if log is None and log_rounds:
                index = math.nan
                if policy.kind == "ucb":
                    index = float(ucb_indices(d, n)[0][d.arm_index[arm]])
                log = RoundLog(t, arm, index, "standard")
        outcome = sample(env.scm, arm, outcome_rng)
        d.append(arm, outcome)
        a = d.arm_index[arm]
        chosen[t - 1] = a
        rewards[t - 1] = outcome[g.target]
        if log is not None:
            log.reward = int(outcome[g.target])
            logs.append(log)
    inst = best - means[chosen]
    return PolicyRun(chosen, rewards, inst, logs, discovery, d)


def _task(args):
    cfg, env, run, p_idx = args
    policy = cfg.policies[p_idx]
    return simulate(
        env, policy, cfg.horizon,
        stream(cfg.seed, _OUTCOME_KEY, run),
        stream(cfg.seed, _POLICY_KEY, run, p_idx),
        initial_pulls=cfg.pulls_for(policy),
        max_sepset_size=cfg.max_size_for(policy),
        growth=cfg.growth,
        threshold_scale=cfg.threshold_scale,
        log_rounds=cfg.log_rounds or policy.kind == "is_ucb",
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every (run, policy) task; outputs are written when ``cfg.out`` is set."""
    graph_ids = suite_graph_ids(cfg) if cfg.env == "dag4_suite" else None
    envs = [build_env(cfg, r, graph_ids) for r in range(cfg.runs)]
    for env in envs:
        phase = len(env.arms) * min(cfg.pulls_for(p) for p in cfg.policies)
        if cfg.horizon < phase:
            raise ConfigError(f"horizon {cfg.horizon} is shorter than the initial phase ({phase})")
    tasks = [(cfg, envs[r], r, p) for p in range(len(cfg.policies)) for r in range(cfg.runs)]
    if cfg.workers > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(cfg.workers) as pool:
            results = pool.map(_task, tasks, chunksize=1)
    else:
        results = [_task(t) for t in tasks]
    runs = {(cfg.policies[p].name, r): res for (_, _, r, p), res in zip(tasks, results)}
    names = [p.name for p in cfg.policies]
    cum = {name: np.vstack([runs[name, r].cum_regret for r in range(cfg.runs)]) for name in names}
    result = ExperimentResult(cfg, envs, RegretTrace(names, cum), runs)
    if cfg.out is not None:
        write_outputs(result, cfg.out)
    return result


def aggregate(cum) -> tuple:
    """Pointwise ``(mean, stderr)`` over runs; ``stderr`` is None with fewer than 2 runs."""
    cum = np.atleast_2d(np.asarray(cum, dtype=float))
    mean = cum.mean(axis=0)
    if cum.shape[0] < 2:
        return mean, None
    return mean, cum.std(axis=0, ddof=1) / math.sqrt(cum.shape[0])


def discovery_bench(cfg: ExperimentConfig) -> list:
    """Discovery quality under uniformly random arms, no bandit policy involved.

    For each run, ``cfg.horizon`` samples are drawn with arms chosen
    uniformly at random; discovery is scored whenever the rerun cadence
    fires (starting once every arm could have been seen) and at the final
    sample size. Returns ``("uniform", run, n, DiscoveryMetrics)`` rows and
    writes ``discovery.csv`` when ``cfg.out`` is set.
    """
    graph_ids = suite_graph_ids(cfg) if cfg.env == "dag4_suite" else None
    policy = cfg.policies[0] if cfg.policies else PolicyConfig("ucb")
    max_size = cfg.max_size_for(policy)
    rows = []
    for r in range(cfg.runs):
        env = build_env(cfg, r, graph_ids)
        rng = stream(cfg.seed, _BENCH_KEY, r)
        d = Dataset.for_env(env, capacity=cfg.horizon)
        picks = rng.integers(0, len(env.arms), size=cfg.horizon)
        cat = None
        for k, a in enumerate(picks.tolist(), 1):
            d.append(a, sample(env.scm, env.arms[a], rng))
            if k < len(env.arms) or not (should_rerun(cat, k, cfg.growth) or k == cfg.horizon):
                continue
            cat = discover(d, max_size=max_size, scale=cfg.threshold_scale)
            rows.append(("uniform", r, k, score_discovery(cat, env.graph, max_size, k)))
    if cfg.out is not None:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        write_discovery_csv(rows, out / "discovery.csv")
    return rows


# ---------------------------------------------------------------- output

def _open(path):
    return open(path, "w", newline="")


def write_regret_csv(result: ExperimentResult, path) -> None:
    exp = result.config.experiment
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "policy", "run", "t", "arm", "inst_regret", "cum_regret"])
        for name in result.trace.policies:
            for r in range(result.config.runs):
                pr = result.runs[name, r]
                arms = result.envs[r].arms
                labels = [arm_label(arms[a]) for a in pr.arms.tolist()]
                for t, (lab, inst, cum) in enumerate(zip(labels, pr.inst_regret.tolist(),
                                                         pr.cum_regret.tolist()), 1):
                    w.writerow([exp, name, r, t, lab, _fmt(inst), _fmt(cum)])


def write_agg_csv(trace: RegretTrace, path) -> None:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "t", "mean", "stderr"])
        for name, (mean, se) in trace.aggregate().items():
            for t in range(len(mean)):
                w.writerow([name, t + 1, _fmt(mean[t]), "" if se is None else _fmt(se[t])])


def write_discovery_csv(rows, path) -> None:
    """``rows`` are ``(policy, run, n, DiscoveryMetrics)`` tuples."""
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "run", "n", "sensitivity", "fpr"])
        for policy, run, n, m in rows:
            w.writerow([policy, run, n, _fmt(m.sensitivity), _fmt(m.false_positive_rate)])


def write_round_log(logs, g, path) -> None:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "arm", "index", "width_kind", "sepset", "reward"])
        for log in logs:
            sep = "" if log.width_kind == "standard" else "{" + ",".join(g.names[v] for v in log.width_used) + "}"
            reward = "" if log.reward is None else log.reward
            w.writerow([log.t, arm_label(log.arm), _fmt(log.chosen_index), log.width_kind, sep, reward])


def write_diagnostics_csv(rows, path) -> None:
    """``rows`` are ``(arm, VarianceDiagnostics)`` pairs; one line per ``(arm, s)``."""
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["arm", "s", "alpha", "alpha_star", "term_between", "term_within",
                    "n_arm", "predicted_variance"])
        for arm, diag in rows:
            for s, alpha in sorted(diag.alpha_per_s.items()):
                w.writerow([arm_label(arm), "".join(map(str, s)), _fmt(alpha), _fmt(diag.alpha_star),
                            _fmt(diag.term_between), _fmt(diag.term_within), diag.n_arm,
                            _fmt(diag.predicted_variance)])


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)


def discovery_rows(result: ExperimentResult) -> list:
    rows = []
    for name in result.trace.policies:
        for r in range(result.config.runs):
            for n, m in result.runs[name, r].discovery:
                rows.append((name, r, n, m))
    return rows


def write_outputs(result: ExperimentResult, out) -> None:
    """regret.csv, agg.csv, discovery.csv and regret.svg, plus optional per-task files."""
    from .plotting import emit_plot

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    write_regret_csv(result, out / "regret.csv")
    write_agg_csv(result.trace, out / "agg.csv")
    write_discovery_csv(discovery_rows(result), out / "discovery.csv")
    emit_plot(result.trace.aggregate(), out / "regret.svg")
    cfg = result.config
    if cfg.log_rounds:
        (out / "rounds").mkdir(exist_ok=True)
    if cfg.dump_data:
        (out / "data").mkdir(exist_ok=True)
    for (name, r), pr in result.runs.items():
        stem = f"{_safe(name)}_run{r}.csv"
        if cfg.log_rounds:
            write_round_log(pr.logs, result.envs[r].graph, out / "rounds" / stem)
        if cfg.dump_data:
            pr.dataset.to_csv(out / "data" / stem)


# ---------------------------------------------------------------- config files

_INT_KEYS = {"horizon", "runs", "seed", "initial_pulls", "max_sepset_size", "workers"}
_FLOAT_KEYS = {"growth", "threshold_scale", "p_two"}
_BOOL_KEYS = {"log_rounds", "dump_data"}
_STR_KEYS = {"env", "out", "env_file", "experiment"}
_POLICY_KEYS = {"kind", "discovery", "initial_pulls", "max_sepset_size"}


def _convert(key, raw, lineno):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects a number, got {raw!r}") from None
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"line {lineno}: {key} expects true/false, got {raw!r}")
        return low in ("true", "1", "yes")
    return raw


def parse_config(text: str) -> dict:
    """Parse the flat ``key = value`` config format into keyword arguments.

    Policies are declared by ``policy.<name>.<field> = value`` lines, with
    fields ``kind``, ``discovery``, ``initial_pulls`` and
    ``max_sepset_size``; they keep the order of their first appearance.
    A ``policies = ucb, is_ucb:oracle_sepsets`` line is the short form.
    """
    out, blocks = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key.startswith("policy."):
            name, _, fld = key[len("policy."):].rpartition(".")
            if not name or fld not in _POLICY_KEYS:
                raise ConfigError(f"line {lineno}: bad policy key {key!r}")
            blocks.setdefault(name, {})[fld] = (
                _convert(fld, value, lineno) if fld in _INT_KEYS else value)
        elif key == "policies":
            out["policies"] = [p.strip() for p in value.split(",") if p.strip()]
        elif key in _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _STR_KEYS:
            out[key] = _convert(key, value, lineno)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if blocks:
        if "policies" in out:
            raise ConfigError("use either 'policies =' or policy.<name> blocks, not both")
        out["policies"] = []
        for name, fields in blocks.items():
            if "kind" not in fields:
                raise ConfigError(f"policy {name!r} has no kind")
            out["policies"].append(PolicyConfig(name=name, **fields))
    return out


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a config file; keyword ``overrides`` that are not None win."""
    text = Path(path).read_text()
    kwargs = parse_config(text)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)
