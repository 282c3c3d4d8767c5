"""Simulated competitive bids against the threshold rule and two forests.

Collusive tenders receive 0 to 5 bids drawn from the competitive period's
deviations. The threshold rule loses the cartels quickly; forests on subgroup
summaries hold up better than forests on whole-tender screens.

Usage: python demos/contamination_ladder.py [seed] [repetitions]
"""

import sys

from bidscreen.evaluation import ladder_report, ladder_table
from bidscreen.simulate import build_ladder
from bidscreen.synthetic import two_period_market

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
reps = int(sys.argv[2]) if len(sys.argv) > 2 else 5

collusive, competitive = two_period_market(seed)
ladder = build_ladder(collusive, competitive, seed=seed)
params = {"n_trees": 300}
columns = {
    "Rule": ladder_report(ladder, "M1", "benchmark", seed=seed, repetitions=reps),
    "M1": ladder_report(ladder, "M1", "forest", seed=seed, repetitions=reps, learner_params=params),
    "M4": ladder_report(ladder, "M4", "forest", seed=seed, repetitions=reps, learner_params=params),
}
header, rows = ladder_table(columns)
print("  ".join(f"{h:>7s}" for h in header))
for m, kind, *rates in rows:
    print(f"{m:>7d}  {kind:>7s}  " + "  ".join(f"{r:7.3f}" for r in rates))
