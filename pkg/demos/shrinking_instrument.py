"""A two-qubit to one-qubit instrument: when the output is smaller than the input,
the second step needs extra Kraus operators to stay trace preserving.

Compares the plain split with the variant that routes the first step through a
smaller intermediate space.
"""
from iqseq import kraus_rank, resource_report, two_step, two_step_reduced, verify_equivalence
from iqseq.generators import shrinking, shrinking_postproc

target, nu = shrinking(), shrinking_postproc()

for name, build in (("plain", two_step), ("reduced", two_step_reduced)):
    dec = build(target, nu)
    asi = dec.as_sequence()
    ranks = {j: kraus_rank(r) for j, r in dec.residuals.items()}
    rep = resource_report(asi)
    dist = verify_equivalence(asi, target).max_distance
    print(f"{name:8s} dims {asi.dims}  extra Kraus {dict(dec.additional_kraus)}  "
          f"residual ranks {ranks}  ancilla {rep.d_a}  distance {dist:.1e}")
