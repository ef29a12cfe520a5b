"""Measure a qubit SIC POVM one bit at a time and compare with closed forms.

The four outcomes are labelled "j,k"; the first step reveals j, the second k.
The Kraus operators found numerically match the Pauli-basis closed forms, and
sampling the sequence on I/2 gives each outcome a quarter of the time.
"""
import numpy as np

from iqseq import ROOT, luders, product_outcomes, run, verify_equivalence
from iqseq.generators import qubit4, qubit4_closed_form

target = luders(qubit4())
asi = product_outcomes(target)
cf = qubit4_closed_form()

err1 = max(np.abs(asi.steps[0][ROOT][j][0] - cf.step1[j]).max() for j in "01")
err2 = max(np.abs(asi.steps[1][lab[0]][lab][0] - cf.step2[lab]).max() for lab in target.outcomes)
print(f"closed-form agreement: first step {err1:.1e}, second step {err2:.1e}")
print(f"recomposition distance {verify_equivalence(asi, target).max_distance:.1e}")

stats, trajectories = run(asi, np.eye(2) / 2, shots=100_000, seed=2024, record_intermediate=True)
print("first-step counts:", stats.intermediate[0])
print("final frequencies:", {k: round(v, 4) for k, v in stats.frequencies.items()})
print("first trajectory:", trajectories[0].outcomes, f"p = {trajectories[0].probability:.3f}")
