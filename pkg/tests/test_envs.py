import itertools

import networkx as nx
import numpy as np
import pytest

from sepbandit.envs import (
    canonical_code,
    enumerate_4node_suite,
    make_6node_dag,
    make_6node_env,
    make_dag4_env,
    make_game_env,
)
from sepbandit.graph import oracle_separating_sets, topological_order


def _system_digraph(g, target=3):
    h = nx.DiGraph()
    for v in range(4):
        h.add_node(v, y=(v == target))
    h.add_edges_from((p, c) for p, c in g.edges if p < 4 and c < 4)
    return h


def _same(h1, h2):
    return nx.is_isomorphic(h1, h2, node_match=lambda a, b: a["y"] == b["y"])


@pytest.fixture(scope="module")
def suite():
    return enumerate_4node_suite()


@pytest.fixture(scope="module")
def oracle_classes():
    """Isomorphism classes of 4-node DAGs with a parent of Y, built with networkx."""
    reps = []
    nodes = range(4)
    pairs = list(itertools.combinations(nodes, 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        h = nx.DiGraph()
        h.add_nodes_from((v, {"y": v == 3}) for v in nodes)
        for (i, j), s in zip(pairs, states):
            if s == 1:
                h.add_edge(i, j)
            elif s == 2:
                h.add_edge(j, i)
        if not nx.is_directed_acyclic_graph(h) or h.in_degree(3) == 0:
            continue
        if not any(_same(h, r) for r in reps):
            reps.append(h)
    return reps


def test_game_env_shape(game):
    assert len(game.arms) == 9
    g = game.graph
    ix = {g.names[c]: k for k, c in enumerate(g.context_nodes)}
    best = [None, None]
    best[ix["I_A"]] = 1
    best[ix["I_B"]] = 1
    assert game.best_arm == tuple(best)
    assert game.best_mean == pytest.approx(7 / 12)
    assert (g.index("S"),) in oracle_separating_sets(g)


def test_game_means_span(game):
    assert game.means.min() == pytest.approx(5 / 12)
    assert game.means.max() == pytest.approx(7 / 12)
    assert np.all(game.gaps >= 0)


def test_suite_every_graph_has_parent_of_y(suite):
    for g in suite:
        assert g.system_parents(g.target)


def test_suite_pairwise_non_isomorphic(suite):
    hs = [_system_digraph(g) for g in suite]
    for i, j in itertools.combinations(range(len(hs)), 2):
        assert not _same(hs[i], hs[j])


def test_suite_covers_every_class(suite, oracle_classes):
    hs = [_system_digraph(g) for g in suite]
    assert len(hs) == len(oracle_classes)
    for r in oracle_classes:
        assert sum(_same(r, h) for h in hs) == 1


def test_suite_deterministic(suite):
    assert enumerate_4node_suite() == suite


def test_suite_arms_and_context(suite):
    rng = np.random.default_rng(0)
    env = make_dag4_env(suite[5], rng)
    assert len(env.arms) == 27
    g = env.graph
    assert len(g.context_nodes) == 3
    assert all(len(g.children(c)) == 1 for c in g.context_nodes)


def test_canonical_code_invariant_under_relabelling():
    edges = [(0, 1), (1, 3), (2, 3)]
    for perm in itertools.permutations(range(3)):
        m = dict(zip(range(3), perm))
        m[3] = 3
        assert canonical_code([(m[p], m[c]) for p, c in edges]) == canonical_code(edges)


def test_6node_structure():
    rng = np.random.default_rng(1)
    for _ in range(50):
        g = make_6node_dag(rng)
        assert g.target == 5 and g.names[5] == "V6"
        assert not g.system_parents(0)
        for v in range(1, 6):
            pa = g.system_parents(v)
            assert 1 <= len(pa) <= 2 and all(p < v for p in pa)
        assert topological_order(g)


def test_6node_p_two_knob():
    rng = np.random.default_rng(2)
    g = make_6node_dag(rng, p_two=0.0)
    assert all(len(g.system_parents(v)) == 1 for v in range(1, 6))
    g = make_6node_dag(rng, p_two=1.0)
    assert len(g.system_parents(1)) == 1
    assert all(len(g.system_parents(v)) == 2 for v in range(2, 6))


def test_6node_env_arms():
    env = make_6node_env(np.random.default_rng(3))
    assert len(env.arms) == 243
    assert np.all((env.means >= 0) & (env.means <= 1))
