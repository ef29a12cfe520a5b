"""Split a qutrit measurement into a coarse first step and a refining second step.

The target is the Luders instrument of A_i = (P_i + P_{i+1}) / 2.  The first
step only tells whether the outcome was in {0, 1} or was 2; the second step,
chosen by that answer, finishes the job.  Run with ``python3 demos/three_outcome_split.py``.
"""
import numpy as np

from iqseq import luders, resource_report, run, two_step, verify_equivalence
from iqseq.generators import three_outcome, three_outcome_postproc

np.set_printoptions(precision=4, suppress=True)

target = luders(three_outcome())
dec = two_step(target, three_outcome_postproc())

print("first step (Luders instrument of the merged POVM):")
for j, (k,) in dec.initial.items():
    print(f"  outcome {j}: diag {np.diag(k).real}")

print("\nsecond step, one instrument per first outcome:")
for j, residual in dec.residuals.items():
    for k, ops in residual.items():
        for q in ops:
            print(f"  after {j}, outcome {k}: diag {np.diag(q).real}")

report = verify_equivalence(dec.as_sequence(), target)
print(f"\nrecomposition distance {report.max_distance:.2e} (passed: {report.passed})")

res = resource_report(dec.as_sequence())
print(f"ancilla dimension {res.d_a} ({res.n_a} qubit), total Kraus rank {res.r_t}")

stats, _ = run(dec.as_sequence(), np.eye(3) / 3, shots=30000, seed=11)
print("\nsampled frequencies on the maximally mixed state (expected 1/3 each):")
for k, f in stats.frequencies.items():
    print(f"  {k}: {f:.4f}")
