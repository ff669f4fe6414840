import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sepbandit.envs import make_game_env
from sepbandit.exceptions import StructuralError
from sepbandit.graph import (
    Dag,
    candidate_sets,
    d_separated,
    format_graph,
    oracle_separating_sets,
    parse_graph,
    topological_order,
)

from oracles import brute_d_separated, random_dag_edges


def chain(*names):
    return Dag.from_names(list(zip(names, names[1:])), context=[], target=names[-1])


def test_topological_order_chain():
    g = chain("A", "B", "C")
    assert [g.names[v] for v in topological_order(g)] == ["A", "B", "C"]


def test_topological_order_single_node():
    g = Dag(1, frozenset(), frozenset(), 0)
    assert topological_order(g) == (0,)


def test_topological_order_game_graph():
    g = make_game_env().graph
    pos = {g.names[v]: i for i, v in enumerate(topological_order(g))}
    assert pos["I_A"] < pos["A"] and pos["I_B"] < pos["B"]
    assert max(pos["A"], pos["B"]) < pos["S"] < pos["Y"]


def test_topological_order_ties_by_id():
    g = Dag(4, frozenset({(3, 0)}), frozenset(), 0)
    assert topological_order(g) == (1, 2, 3, 0)


def test_cycle_rejected():
    with pytest.raises(StructuralError):
        Dag.from_names([("A", "B"), ("B", "C"), ("C", "A")], context=[], target="C")


def test_context_node_with_parent_rejected():
    with pytest.raises(StructuralError):
        Dag.from_names([("A", "I"), ("I", "Y")], context=["I"], target="Y")


def test_target_cannot_be_context():
    with pytest.raises(StructuralError):
        Dag.from_names([("I", "Y")], context=["I", "Y"], target="Y")


def test_self_loop_rejected():
    with pytest.raises(StructuralError):
        Dag(2, frozenset({(0, 0)}), frozenset(), 1)


def test_dsep_game_caption():
    g = make_game_env().graph
    ix = g.index
    assert d_separated(g, [ix("I_A"), ix("I_B")], [ix("Y")], [ix("S")])
    assert not d_separated(g, [ix("I_A"), ix("I_B")], [ix("Y")], [])


def test_dsep_direct_edge():
    g = chain("X", "Y")
    assert not d_separated(g, [0], [1], [])


def test_dsep_collider():
    g = Dag.from_names([("A", "C"), ("B", "C")], context=[], target="C")
    a, b, c = g.index("A"), g.index("B"), g.index("C")
    assert d_separated(g, [a], [b], [])
    assert not d_separated(g, [a], [b], [c])


def test_dsep_collider_descendant_opens_path():
    g = Dag.from_names([("A", "C"), ("B", "C"), ("C", "D")], context=[], target="D")
    ix = g.index
    assert not d_separated(g, [ix("A")], [ix("B")], [ix("D")])


def test_dsep_rejects_overlap():
    g = chain("A", "B", "C")
    with pytest.raises(ValueError):
        d_separated(g, [0], [0], [])
    with pytest.raises(ValueError):
        d_separated(g, [0], [2], [0])


def test_dsep_matches_path_oracle_exhaustively_on_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(150):
        n = int(rng.integers(2, 6))
        edges = random_dag_edges(rng, n)
        g = Dag(n, frozenset(edges), frozenset(), 0)
        for a, b in itertools.permutations(range(n), 2):
            rest = [v for v in range(n) if v not in (a, b)]
            for k in range(len(rest) + 1):
                for c in itertools.combinations(rest, k):
                    assert d_separated(g, [a], [b], c) == brute_d_separated(n, edges, [a], [b], c)


@st.composite
def dag_and_query(draw, max_nodes=5):
    n = draw(st.integers(2, max_nodes))
    order = draw(st.permutations(range(n)))
    pairs = [(order[i], order[j]) for i in range(n) for j in range(i + 1, n)]
    edges = {p for p in pairs if draw(st.booleans())}
    roles = draw(st.lists(st.sampled_from("abc-"), min_size=n, max_size=n))
    a = [v for v, r in enumerate(roles) if r == "a"]
    b = [v for v, r in enumerate(roles) if r == "b"]
    c = [v for v, r in enumerate(roles) if r == "c"]
    return n, edges, a, b, c


@given(dag_and_query())
def test_dsep_set_queries_match_oracle(q):
    n, edges, a, b, c = q
    g = Dag(n, frozenset(edges), frozenset(), 0)
    assert d_separated(g, a, b, c) == brute_d_separated(n, edges, a, b, c)


@given(dag_and_query())
def test_dsep_symmetric(q):
    n, edges, a, b, c = q
    g = Dag(n, frozenset(edges), frozenset(), 0)
    assert d_separated(g, a, b, c) == d_separated(g, b, a, c)


@given(dag_and_query(max_nodes=4))
def test_isolated_node_changes_nothing(q):
    n, edges, a, b, c = q
    g = Dag(n, frozenset(edges), frozenset(), 0)
    g2 = Dag(n + 1, frozenset(edges), frozenset(), 0)
    assert d_separated(g, a, b, c) == d_separated(g2, a, b, c)


def test_oracle_sepsets_game():
    g = make_game_env().graph
    found = oracle_separating_sets(g, 2)
    assert (g.index("S"),) in found
    assert () not in found


def test_oracle_sepsets_direct_edge_empty():
    g = Dag.from_names([("I", "X"), ("I", "Y"), ("X", "Y")], context=["I"], target="Y")
    assert oracle_separating_sets(g) == []


def test_oracle_sepsets_chain():
    g = Dag.from_names([("I", "X"), ("X", "Y")], context=["I"], target="Y")
    found = oracle_separating_sets(g)
    assert found == [(g.index("X"),)]


def test_oracle_sepsets_is_powerset_filter():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n_sys = int(rng.integers(2, 5))
        sys_edges = random_dag_edges(rng, n_sys)
        target = int(rng.integers(n_sys))
        ctx = [v for v in range(n_sys) if v != target]
        edges = set(sys_edges) | {(n_sys + k, v) for k, v in enumerate(ctx)}
        n = n_sys + len(ctx)
        context = frozenset(range(n_sys, n))
        g = Dag(n, frozenset(edges), context, target)
        pool = [v for v in range(n_sys) if v != target]
        expected = [s for k in range(len(pool) + 1) for s in itertools.combinations(pool, k)
                    if brute_d_separated(n, edges, sorted(context), [target], s)]
        assert oracle_separating_sets(g) == expected


def test_candidate_sets_order_and_cap():
    g = make_game_env().graph
    cands = candidate_sets(g)
    assert cands[0] == ()
    assert [len(s) for s in cands] == sorted(len(s) for s in cands)
    assert len(cands) == 8
    assert all(len(s) <= 1 for s in candidate_sets(g, 1))


def test_graph_text_round_trip():
    g = make_game_env().graph
    text = format_graph(g)
    assert parse_graph(text) == g


def test_parse_graph_without_nodes_line():
    g = parse_graph("""
        # the game
        context: I_A I_B
        target: Y
        I_A->A
        I_B->B
        A->S
        B->S
        S->Y
    """)
    assert g.names[:3] == ("I_A", "I_B", "Y")
    assert g.context_nodes == (0, 1)
    ix = g.index
    assert d_separated(g, [ix("I_A"), ix("I_B")], [ix("Y")], [ix("S")])


@pytest.mark.parametrize("text", [
    "target: Y\nA->",
    "context: I\nI->Y",  # no target
    "target: Y\nfoo: bar",
    "target: Y Z",
    "target: Y\nA->B\nB->A",
])
def test_parse_graph_errors(text):
    with pytest.raises(StructuralError):
        parse_graph(text)
