"""
Who benefits from lying?
========================

An expert with belief b picks a report r to maximize the probability the
learner gives it next round. This walk-through evaluates that expectation
exactly for WSU, WSU-UX, and the normalized Hedge and MWU rules.
"""

import numpy as np

from selfish_bandits import ProbVector
from selfish_bandits.ic_audit import (
    AuditAlgo,
    AuditConfig,
    best_response,
    expected_next_prob_grid,
    ic_verdict,
)
from selfish_bandits.scoring import LossFn, properness_audit

# squared loss is strictly proper, absolute loss is not
print("squared :", properness_audit(LossFn.SQUARED))
print("absolute:", properness_audit(LossFn.ABSOLUTE))

# one scenario, four learners: two experts, the rival reports 1.0
grid = np.linspace(0.0, 1.0, 1001)
pi = ProbVector([0.5, 0.5])
for algo in AuditAlgo:
    eta = 0.02 if algo is AuditAlgo.WSU_UX else 0.45
    cfg = AuditConfig(algo, pi, eta, 0.2, (1.0,), 0.3, 0)
    vals = expected_next_prob_grid(cfg, grid)
    r_star, v = best_response(cfg)
    print(f"{algo.value:18s} best report {r_star:.3f} (belief 0.3), value {v:.6f}, spread {np.ptp(vals):.2e}")

# random audit: 200 scenarios each
for algo in AuditAlgo:
    v = ic_verdict(algo, n_configs=200)
    print(f"{algo.value:18s} {v.label:13s} max |r* - b| = {v.max_deviation:.4f}")
