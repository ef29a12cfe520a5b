"""How many steps buy how much ancilla: smallest ancilla dimension for an
instrument of total Kraus rank r_T with growth factor g, as the number of
steps N increases, followed by a concrete smallest-ancilla sequence."""
import numpy as np

from iqseq import min_ancilla, resource_report, verify_equivalence
from iqseq.random_objects import random_instrument
from iqseq.resources import minimal_ancilla_n_step, optimal_partition

print("r_T  g  | N=1  N=2  N=3  N=4")
for r, g in [(4, 1), (9, 1), (16, 1), (6, 2), (12, 3)]:
    row = "  ".join(f"{minimal_ancilla_n_step(r, g, n):3d}" for n in (1, 2, 3, 4))
    print(f"{r:3d}  {g}  | {row}")

part, cost = optimal_partition(10, 2)
print(f"\nbalanced grouping of 10 detailed outcomes for g = 2: sizes {part.sizes}, ancilla {cost}")

rng = np.random.default_rng(3)
t = random_instrument(rng, 2, 3, [2, 2, 1])
asi = min_ancilla(t)
rep = resource_report(asi)
print(f"\nrandom 2 -> 3 instrument of rank {rep.r_t}: "
      f"{asi.n_steps} steps with ancilla {rep.d_a} (g = {rep.g}); "
      f"N * n_A = {asi.n_steps * rep.n_a} >= log2(g r_T) = {rep.tradeoff:.2f}")
print(f"recomposition distance {verify_equivalence(asi, t).max_distance:.1e}")
