"""
Whittle index of the four example sources
==========================================

After its first crawl a source only visits the states x_k = (1 - alpha^k) u_star,
k passive periods after a reset. The index rises along this lattice toward
u_star / C.
"""

import numpy as np

from whittlecrawl import eta, lattice_index, table1_fleet, whittle_index

fleet = table1_fleet(budget=1.0)

for i, p in enumerate(fleet.sources):
    print(f"source {i}: alpha={p.alpha:.4f} u={p.u:.2f} u_star={p.u_star:.2f}")

# index at the first few lattice states, one column per source
print("\n k " + "".join(f"{'source ' + str(i):>12}" for i in range(fleet.n)))
for k in range(1, 9):
    print(f"{k:>2} " + "".join(f"{lattice_index(k, p):>12.2f}" for p in fleet.sources))

# off the lattice the index is piecewise linear; the general formula and the
# lattice shortcut meet at every x_k
p = fleet.sources[0]
xs = np.linspace(p.u, p.u_star, 9)
for x in xs:
    print(f"x={x:8.2f}  eta={eta(x, p):>3}  gamma={whittle_index(x, p):8.2f}")
