"""
Checking the closed-form index with dynamic programming
=======================================================

The DP oracle never uses the closed form. On lattice states it bisects on the
subsidy until crawling within k periods stops being optimal; off the lattice
it solves the discounted problem (delta = 0.9999) on a grid.
"""

import numpy as np

from whittlecrawl import table1_fleet, whittle_index
from whittlecrawl.dp_oracle import (SubsidyProblem, estimate_boundary_subsidies, oracle_index,
                                    passive_set_sweep, solve_average_lattice, solve_discounted)

p = table1_fleet().sources[1]

for k in (1, 2, 3, 5, 10, 20):
    x = p.lattice(k)
    print(f"k={k:>2}  closed form {whittle_index(x, p):10.6f}   oracle {oracle_index(x, p):10.6f}")

x = 0.5 * (p.lattice(2) + p.lattice(3))
print(f"off lattice x={x:.2f}: closed form {whittle_index(x, p):.4f}, "
      f"discounted oracle {oracle_index(x, p, tol=1e-6):.4f}")

# passive set [u, a) grows with the subsidy
lambdas = np.linspace(0, 2 * p.u_star / p.cost, 15)
for part in passive_set_sweep(p, lambdas):
    print(f"lambda={part.lambda_subsidy:7.2f}  threshold a={part.threshold_a:8.2f}")
print("all-active up to / all-passive from:", estimate_boundary_subsidies(passive_set_sweep(p, lambdas)))

# vanishing discount: (1 - delta) V(u) approaches the optimal average reward
prob = SubsidyProblem(p, whittle_index(p.lattice(4), p))
beta, period = solve_average_lattice(prob)
for delta in (0.9, 0.99, 0.999):
    print(f"delta={delta}: (1-delta)V(u) = {(1 - delta) * solve_discounted(prob, delta).values[0]:.4f}")
print(f"average reward {beta:.4f} with crawl period {period}")
