import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from sepbandit.data import Dataset, mu_sm
from sepbandit.envs import with_context_nodes
from sepbandit.estimators import (
    bound_from_counts,
    effective_domain,
    idx,
    lcb_idx,
    mu_is,
    sepset_bounds,
    variance_diagnostics,
)
from sepbandit.exceptions import IncompleteSupportError, NoDataError
from sepbandit.graph import Dag
from sepbandit.scm import DiscreteScm, all_arms, sample


def rec(a, b, s, y):
    return {"A": a, "B": b, "S": s, "Y": y}


@pytest.fixture
def golden_log(game):
    """Arm (_, _) has 4 records split evenly over S; each S value has 8 records overall,
    with 2 of 8 rewarded at S=0 and 6 of 8 at S=1."""
    d = Dataset.for_env(game)
    obs = game.arms[0]
    for s, y in [(0, 0), (0, 1), (1, 1), (1, 1)]:
        d.append(obs, rec(0, 0, s, y))
    other = game.arms[4]
    for y in [0] * 5 + [1]:
        d.append(other, rec(0, 0, 0, y))
    for y in [1] * 4 + [0] * 2:
        d.append(other, rec(0, 0, 1, y))
    return d


def test_idx_golden_value(game, golden_log):
    s = (game.graph.index("S"),)
    w = math.sqrt(math.log(40) / 16)
    ucb = (0.25 + w, 0.75 + w)
    delta_p = math.sqrt(2 * math.log(40) / 8)
    expected = 0.5 * ucb[0] + 0.5 * ucb[1] + delta_p * (ucb[1] - ucb[0])
    assert idx(golden_log, game.graph, s, game.arms[0], 0.1) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(1.46032279131992, rel=1e-12)


def test_lcb_golden_value(game, golden_log):
    s = (game.graph.index("S"),)
    w = math.sqrt(math.log(40) / 16)
    delta_p = math.sqrt(2 * math.log(40) / 8)
    expected = 0.5 * (0.25 - w) + 0.5 * (0.75 - w) - delta_p * 0.5
    got = lcb_idx(golden_log, game.graph, s, game.arms[0], 0.1)
    assert got == pytest.approx(expected, rel=1e-14)
    assert got < mu_is(golden_log, s, game.arms[0]) < idx(golden_log, game.graph, s, game.arms[0], 0.1)


def test_bound_from_counts_direct():
    w = math.sqrt(math.log(40) / 16)
    d = math.sqrt(2 * math.log(40) / 8)
    got = bound_from_counts([0.5, 0.5], [0.25, 0.75], [8, 8], 4, 0.1)
    assert got == pytest.approx(0.5 + w + 0.5 * d)


def test_delta_one_limit():
    got = bound_from_counts([0.5, 0.5], [0.25, 0.75], [8, 8], 4, 1.0)
    assert got == pytest.approx(0.5 + math.sqrt(math.log(4) / 16) + math.sqrt(2 * math.log(4) / 8) * 0.5)


def test_single_element_domain(game):
    """Arm pins every member of S: idx is the ucb of the single pooled mean."""
    g = game.graph
    d = Dataset.for_env(game)
    arm = (1, None)
    for y in [1, 0, 1, 1]:
        d.append(arm, rec(1, 0, 0, y))
    for y in [0, 0]:
        d.append((None, None), rec(1, 1, 1, y))
    s = (g.index("A"),)
    assert effective_domain(g, s, arm) == [(1,)]
    mu = 3 / 6
    assert idx(d, g, s, arm, 0.2) == pytest.approx(mu + math.sqrt(math.log(2 / 0.2) / 12))
    assert lcb_idx(d, g, s, arm, 0.2) == pytest.approx(mu - math.sqrt(math.log(2 / 0.2) / 12))


def test_effective_domain_sizes():
    g = with_context_nodes(4, [(0, 3), (1, 3), (2, 3)], 3)
    v2, v3 = 1, 2
    pin_v2 = (None, 1, None)
    assert effective_domain(g, (v2, v3), pin_v2) == [(1, 0), (1, 1)]
    assert len(effective_domain(g, (v2, v3), (1, None, None))) == 4
    assert effective_domain(g, (v2, v3), (None, 0, 1)) == [(0, 1)]


def test_mu_is_pooling_example(game):
    d = Dataset.for_env(game)
    a_arm, b_arm = game.arms[6], game.arms[2]
    d.append(a_arm, rec(1, 0, 1, 1))
    d.append(b_arm, rec(0, 1, 1, 0))
    s = (game.graph.index("S"),)
    assert mu_is(d, s, a_arm) == 0.5


def test_mu_is_arithmetic(game):
    d = Dataset.for_env(game)
    arm = game.arms[0]
    # p_hat = (.5, .5); pooled mu_hat(S=0) = 1/5, mu_hat(S=1) = 4/5
    d.append(arm, rec(0, 0, 0, 1))
    d.append(arm, rec(0, 0, 1, 1))
    for y in [0, 0, 0, 0]:
        d.append(game.arms[1], rec(0, 0, 0, y))
    for y in [1, 1, 1, 0]:
        d.append(game.arms[1], rec(0, 0, 1, y))
    assert mu_is(d, (game.graph.index("S"),), arm) == pytest.approx(0.5)


def test_mu_is_equals_mu_sm_on_single_arm_logs(game):
    rng = np.random.default_rng(0)
    s = (game.graph.index("S"),)
    for _ in range(30):
        arm = game.arms[int(rng.integers(9))]
        d = Dataset.for_env(game)
        for _ in range(int(rng.integers(1, 40))):
            d.append(arm, sample(game.scm, arm, rng))
        assert mu_is(d, s, arm) == pytest.approx(mu_sm(d, arm), abs=1e-15)


def test_errors(game):
    d = Dataset.for_env(game)
    s = (game.graph.index("S"),)
    with pytest.raises(NoDataError):
        mu_is(d, s, game.arms[0])
    d.append(game.arms[0], rec(0, 0, 0, 1))
    with pytest.raises(IncompleteSupportError):
        idx(d, game.graph, s, game.arms[0], 0.1)
    with pytest.raises(NoDataError):
        idx(d, game.graph, s, game.arms[1], 0.1)


def _random_log(env, rng, n):
    d = Dataset.for_env(env)
    for k in rng.integers(0, len(env.arms), n):
        d.append(env.arms[k], sample(env.scm, env.arms[k], rng))
    return d


@given(st.integers(0, 2**31), st.integers(5, 120), st.sampled_from([0.01, 0.1, 0.5]))
def test_vectorised_bounds_match_scalar(game, seed, n, delta):
    rng = np.random.default_rng(seed)
    d = _random_log(game, rng, n)
    g = game.graph
    for s in [(g.index("S"),), (g.index("A"), g.index("B")), ()]:
        up, est, valid = sepset_bounds(d, g, s, delta)
        lo, _, _ = sepset_bounds(d, g, s, delta, lower=True)
        for i, arm in enumerate(game.arms):
            try:
                expected = idx(d, g, s, arm, delta)
            except NoDataError:
                assert not valid[i]
                continue
            assert valid[i]
            assert up[i] == pytest.approx(expected, rel=1e-12)
            assert lo[i] == pytest.approx(lcb_idx(d, g, s, arm, delta), rel=1e-12, abs=1e-12)
            assert est[i] == pytest.approx(mu_is(d, s, arm), rel=1e-12)
            assert lo[i] <= est[i] <= up[i]


probs = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5)


@st.composite
def bound_inputs(draw):
    weights = draw(probs)
    k = len(weights)
    p = np.array(weights) / sum(weights)
    mu = np.array(draw(st.lists(st.floats(0, 1), min_size=k, max_size=k)))
    n_s = np.array(draw(st.lists(st.integers(1, 500), min_size=k, max_size=k)))
    return p, mu, n_s, draw(st.integers(1, 500)), draw(st.floats(0.001, 0.9))


@given(bound_inputs(), st.integers(1, 100))
def test_bound_nonincreasing_in_arm_count(inputs, extra):
    p, mu, n_s, n_arm, delta = inputs
    base = bound_from_counts(p, mu, n_s, n_arm, delta)
    assert bound_from_counts(p, mu, n_s, n_arm + extra, delta) <= base + 1e-12
    assert bound_from_counts(p, mu, n_s, n_arm + extra, delta, lower=True) >= (
        bound_from_counts(p, mu, n_s, n_arm, delta, lower=True) - 1e-12)


@given(bound_inputs())
def test_bound_brackets_point_estimate(inputs):
    p, mu, n_s, n_arm, delta = inputs
    assert bound_from_counts(p, mu, n_s, n_arm, delta) >= p @ mu - 1e-12
    assert bound_from_counts(p, mu, n_s, n_arm, delta, lower=True) <= p @ mu + 1e-12


@given(bound_inputs(), st.data())
def test_bound_nonincreasing_in_value_counts_when_spread_term_is_small(inputs, data):
    """Raising one N(S=s) lowers that ucb; idx falls whenever Delta <= min p."""
    p, mu, n_s, n_arm, delta = inputs
    k = len(p)
    spread = math.sqrt(k * math.log(4 / delta) / (2 * n_arm))
    assume(spread <= p.min())
    j = data.draw(st.integers(0, k - 1))
    more = n_s.copy()
    more[j] += data.draw(st.integers(1, 100))
    assert bound_from_counts(p, mu, more, n_arm, delta) <= bound_from_counts(p, mu, n_s, n_arm, delta) + 1e-12


def test_bound_can_rise_with_more_value_data():
    """With a large spread factor, shrinking the lowest ucb widens max - min."""
    before = bound_from_counts([0.5, 0.5], [0.0, 0.0], [1, 1], 1, 0.5)
    after = bound_from_counts([0.5, 0.5], [0.0, 0.0], [2, 1], 1, 0.5)
    assert after > before


def test_variance_diagnostics_no_off_arm_data(game):
    rng = np.random.default_rng(0)
    arm = game.arms[0]
    d = Dataset.for_env(game)
    for _ in range(20):
        d.append(arm, sample(game.scm, arm, rng))
    diag = variance_diagnostics(d, game.scm, (game.graph.index("S"),), arm, n_reps=50, rng=rng)
    assert all(a == 0 for a in diag.alpha_per_s.values())
    assert diag.alpha_star == 0
    assert diag.term_between >= 0 and diag.term_within >= 0


@pytest.mark.parametrize("c", [1, 2, 3])
def test_alpha_star_lower_bound(game, c):
    """Off-arm data pinned to the same S value: alpha* >= c / (1 + c)."""
    rng = np.random.default_rng(c)
    g = game.graph
    own = (1, None)
    d = Dataset.for_env(game)
    for _ in range(10):
        d.append(own, sample(game.scm, own, rng))
    for other in [(1, 0), (1, 1)]:
        for _ in range(5 * c):
            d.append(other, sample(game.scm, other, rng))
    diag = variance_diagnostics(d, game.scm, (g.index("A"),), own, n_reps=200, rng=rng)
    assert diag.alpha_star >= c / (1 + c) - 1e-12
    assert all(0 <= a <= 1 for a in diag.alpha_per_s.values())
    assert 0 <= diag.alpha_star < 1


def test_deterministic_reward_has_no_within_term():
    g = Dag.from_names([("I", "X"), ("X", "Y")], context=["I"], target="Y", nodes=["X", "Y", "I"])
    scm = DiscreteScm(g, (2, 2, 2), (np.array([[0.3, 0.7]]), np.array([[1.0, 0.0], [0.0, 1.0]]), None))
    arms = all_arms(g, scm.domain_sizes)
    d = Dataset(g, arms, scm.domain_sizes)
    rng = np.random.default_rng(0)
    for arm in arms:
        for _ in range(10):
            d.append(arm, sample(scm, arm, rng))
    diag = variance_diagnostics(d, scm, (0,), (None,), n_reps=100, rng=rng)
    assert diag.term_within == 0
    assert diag.term_between == pytest.approx(0.21)
