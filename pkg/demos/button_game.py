"""Information sharing on the two-button game.

Two buttons feed a screen S, and the reward depends on S only. Every arm's
reward data therefore says something about every other arm, once it is
split by the value of S. This script shows the effect on one estimate and
then on cumulative regret.

    python demos/button_game.py
"""

import numpy as np

from sepbandit import Dataset, ExperimentConfig, make_game_env, mu_is, mu_sm, run_experiment
from sepbandit.scm import arm_label, sample_many

env = make_game_env()
g = env.graph
s = (g.index("S"),)
rng = np.random.default_rng(0)

# a thin arm with 5 records, every other arm with 200
thin = env.arms[0]
reps = 2000
plain, shared = [], []
for _ in range(reps):
    d = Dataset.for_env(env)
    for arm in env.arms:
        n = 5 if arm == thin else 200
        d.extend([arm] * n, sample_many(env.scm, arm, n, rng))
    plain.append(mu_sm(d, thin))
    shared.append(mu_is(d, s, thin))

print(f"arm {arm_label(thin)}: true mean {env.means[0]:.4f}")
print(f"  sample mean         mean {np.mean(plain):.4f}  sd {np.std(plain):.4f}")
print(f"  shared through S    mean {np.mean(shared):.4f}  sd {np.std(shared):.4f}")

policies = ["ucb", "is_ucb:oracle_parents", "ts", "is_ts:oracle_parents"]
res = run_experiment(ExperimentConfig("game", horizon=3000, runs=10, seed=1, policies=policies))
print("\ncumulative regret after 3000 rounds (10 runs)")
for name, (mean, se) in res.trace.aggregate().items():
    print(f"  {name:24s} {mean[-1]:7.1f} +/- {se[-1]:.1f}")
