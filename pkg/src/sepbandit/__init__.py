"""Causal bandits that share reward information through separating sets.

Arms are joint assignments of context (intervention) variables. When a set
``S`` d-separates the context from the reward ``Y``, rewards observed under
one arm inform every other arm through ``E[Y | S]``; the policies here
exploit that, with ``S`` either known or discovered online by G^2 tests.
"""

from .data import Dataset, mu_hat, mu_sm, p_hat
from .discovery import (
    DiscoveryMetrics,
    SepSetCatalog,
    discover,
    g2_test,
    oracle_catalog,
    parents_catalog,
    score_discovery,
    should_rerun,
)
from .envs import Environment, enumerate_4node_suite, make_6node_env, make_dag4_env, make_game_env
from .estimators import idx, lcb_idx, mu_is, variance_diagnostics
from .exceptions import CapacityError, ConfigError, IncompleteSupportError, NoDataError, StructuralError
from .graph import Dag, d_separated, oracle_separating_sets, parse_graph, format_graph
from .harness import ExperimentConfig, aggregate, run_experiment
from .policies import (
    PolicyConfig,
    RoundLog,
    choose_is_ts,
    choose_is_ucb,
    choose_ts,
    choose_ucb,
    delta_schedule,
    initial_phase_arm,
)
from .scm import DiscreteScm, all_arms, format_scm, parse_scm, sample, true_mean

__version__ = "0.1.0"
