"""How direct testing finds separating sets as data accumulates.

Samples arrive under uniformly random arms on one graph of the 4-node
suite. Discovery reruns each time the data has grown by 25 %, and every
run is scored against the true separating sets of the graph.

    python demos/discovery_cadence.py
"""

import numpy as np

from sepbandit import Dataset, discover, enumerate_4node_suite, make_dag4_env, score_discovery
from sepbandit.discovery import should_rerun
from sepbandit.graph import format_graph, oracle_separating_sets
from sepbandit.scm import sample

rng = np.random.default_rng(3)
env = make_dag4_env(enumerate_4node_suite()[40], rng)
g = env.graph
print(format_graph(g))
print("true separating sets:", [tuple(g.names[v] for v in s) for s in oracle_separating_sets(g)])

d = Dataset.for_env(env)
cat = None
for n in range(1, 20_001):
    arm = env.arms[rng.integers(len(env.arms))]
    d.append(arm, sample(env.scm, arm, rng))
    if n >= 100 and should_rerun(cat, n):
        cat = discover(d)
        m = score_discovery(cat, g, n=n)
        print(f"n={n:6d}  accepted {len(cat):2d}  sensitivity {m.sensitivity:.2f}  fpr {m.false_positive_rate:.2f}")
