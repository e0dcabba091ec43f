"""
Watching WSU-UX on the hard sequence
====================================

Arm 1 loses for the first T/100 rounds and arm 2 loses afterwards. The
mean probability of arm 1 dips, then climbs back once exploration pulls
of arm 2 start paying off. The sub-phase boundaries are marked.
"""

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from selfish_bandits import HyperParams, lower_bound_sequence, phase_plan
from selfish_bandits.environments import derived_quantities
from selfish_bandits.learners import LearnerKind
from selfish_bandits.simlab import claim_statistics, monte_carlo

T = 2**15
params = HyperParams(T ** (-2 / 3), T ** (-1 / 3), 2, T)
print("regime:", params.regime.value)
print("derived:", derived_quantities(params))

stats = monte_carlo(LearnerKind.WSU_UX, lower_bound_sequence(T), params, n_trials=100, base_seed=1)
rounds = np.array(sorted(stats.mean_checkpoints))
mean_pi1 = np.array([stats.mean_checkpoints[r] for r in rounds])

fig = Figure(figsize=(6, 4))
ax = fig.add_subplot()
ax.plot(rounds, mean_pi1)
for b in phase_plan(T).boundaries[:3]:
    ax.axvline(b, linestyle=":", color="grey")
ax.set_xscale("log")
ax.set_xlabel("round t")
ax.set_ylabel("mean probability of arm 1")
out = Path(__file__).with_name("figures")
out.mkdir(exist_ok=True)
fig.savefig(out / "pi1_dynamics.svg")

rep = claim_statistics(stats)
for name in ("claim1", "claim2", "claim3", "phase1_decay"):
    c = getattr(rep, name)
    print(f"{name:13s} statistic {c.statistic:12.5g}  gate {c.gate:12.5g}  passed {c.passed}")
