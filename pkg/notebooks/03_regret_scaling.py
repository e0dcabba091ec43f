"""
Regret exponents at desk scale
==============================

Mean pseudo-regret of WSU-UX (eta = T^-2/3, gamma = T^-1/3) against EXP3
with its usual tuning, both on the hard sequence. On a log-log plot the
slopes land near 2/3 and 1/2.
"""

from selfish_bandits import lower_bound_sequence, HyperParams
from selfish_bandits.learners import LearnerKind, exp3_default_params
from selfish_bandits.simlab import monte_carlo, scaling_fit, upper_bound_formula

horizons = [2**11, 2**13, 2**15]
points = {"wsu-ux": [], "exp3": []}
for T in horizons:
    model = lower_bound_sequence(T)
    ux = HyperParams(T ** (-2 / 3), T ** (-1 / 3), 2, T)
    s = monte_carlo(LearnerKind.WSU_UX, model, ux, 100, base_seed=3)
    r = s.scalars["pseudo_regret"]
    points["wsu-ux"].append((T, r.mean, r.se))
    print(f"T={T:6d} WSU-UX regret {r.mean:9.1f} +- {r.se:5.1f}   bound {upper_bound_formula(ux):9.1f}")
    s = monte_carlo(LearnerKind.EXP3, model, exp3_default_params(2, T), 100, base_seed=3)
    r = s.scalars["pseudo_regret"]
    points["exp3"].append((T, r.mean, r.se))
    print(f"T={T:6d} EXP3   regret {r.mean:9.1f} +- {r.se:5.1f}")

for name, pts in points.items():
    fit = scaling_fit(pts)
    print(f"{name}: slope {fit.slope:.3f}, r^2 {fit.r_squared:.4f}")

# the same experiment through the command line, with plots:
#   selfish-bandits scaling --learner wsu-ux --learner exp3 --T 2^11 --T 2^13 --T 2^15 --trials 100
#   selfish-bandits plot results/runs.csv
