import numpy as np
import pytest

from iqseq.decompose import product_outcomes, two_step
from iqseq.generators import qubit4, three_outcome, three_outcome_postproc
from iqseq.quantum import ROOT, AdaptiveSequence, Instrument, luders
from iqseq.random_objects import random_instrument, random_state
from iqseq.runtime import make_rng, run, total_instrument, verify_equivalence


def test_total_of_single_step_is_itself(rng):
    t = random_instrument(rng, 2, 3, [1, 2])
    assert verify_equivalence(AdaptiveSequence.single(t), t).max_distance < 1e-12


def test_total_instrument_rejects_invalid_sequence():
    bad = Instrument(2, 2, ("a",), ((0.5 * np.eye(2),),))
    with pytest.raises(ValueError):
        total_instrument(AdaptiveSequence.single(bad))


def test_total_is_compressed(rng):
    t = random_instrument(rng, 3, 3, [1, 1, 1])
    total = total_instrument(two_step(t, three_outcome_postproc()).as_sequence())
    assert all(len(op) == 1 for op in total.operations)


def test_verify_equivalence_detects_difference(rng):
    t = random_instrument(rng, 2, 2, [1, 1])
    u = random_instrument(rng, 2, 2, [1, 1])
    rep = verify_equivalence(AdaptiveSequence.single(t), u)
    assert not rep.passed and rep.max_distance > 1e-3
    assert set(rep.to_dict()) >= {"passed", "distances", "povm_distance", "channel_distance"}


def test_verify_equivalence_shape_mismatch(rng):
    t = random_instrument(rng, 2, 2, [1, 1])
    with pytest.raises(ValueError):
        verify_equivalence(AdaptiveSequence.single(t), random_instrument(rng, 2, 3, [1, 1]))


def test_philox_stream_is_reproducible():
    assert np.array_equal(make_rng(7).random(5), make_rng(7).random(5))
    assert not np.array_equal(make_rng(7).random(5), make_rng(8).random(5))


def test_run_is_deterministic_and_seed_sensitive():
    asi = two_step(luders(three_outcome()), three_outcome_postproc()).as_sequence()
    rho = np.eye(3) / 3
    a, _ = run(asi, rho, 2000, seed=1)
    b, _ = run(asi, rho, 2000, seed=1)
    c, _ = run(asi, rho, 2000, seed=2)
    assert a.counts == b.counts
    assert a.counts != c.counts
    assert sum(a.counts.values()) == 2000


def test_run_matches_born_rule(rng):
    t = random_instrument(rng, 3, 2, [1, 1, 2])
    rho = random_state(rng, 3)
    probs = {k: sum(np.trace(q @ rho @ q.conj().T).real for q in op) for k, op in t.items()}
    shots = 40000
    stats, _ = run(AdaptiveSequence.single(t), rho, shots, seed=3)
    for k, p in probs.items():
        assert abs(stats.frequencies[k] - p) <= 5 * np.sqrt(p * (1 - p) / shots) + 1e-12


def test_deterministic_outcome():
    asi = product_outcomes(luders(qubit4()))
    # dead branches never fire, so every final label extends its first outcome
    stats, trajs = run(asi, np.eye(2) / 2, 500, seed=0, record_intermediate=True, keep=20)
    assert len(trajs) == 20
    for tr in trajs:
        assert tr.outcomes[1].startswith(tr.outcomes[0] + ",")
        assert np.trace(tr.state).real == pytest.approx(1.0)
    first = stats.intermediate[0]
    assert sum(first.values()) == 500
    assert first["0"] == sum(v for k, v in stats.counts.items() if k.startswith("0,"))


def test_zero_probability_outcome_never_sampled():
    p0 = np.diag([1.0, 0.0])
    ins = Instrument(2, 2, ("a", "b", "c"), ((p0,), (), (np.diag([0.0, 1.0]),)))
    stats, _ = run(AdaptiveSequence.single(ins), np.diag([1.0, 0.0]), 1000, seed=4)
    assert stats.counts == {"a": 1000, "b": 0, "c": 0}


def test_run_rejects_bad_arguments(rng):
    asi = AdaptiveSequence.single(random_instrument(rng, 2, 2, [1]))
    with pytest.raises(ValueError):
        run(asi, np.eye(3) / 3, 10, seed=0)
    with pytest.raises(ValueError):
        run(asi, np.eye(2) / 2, 0, seed=0)


def test_final_map_relabels_counts(rng):
    t = random_instrument(rng, 2, 2, [1, 1, 1])
    asi = AdaptiveSequence(({ROOT: t},), final_map={"0": "x", "1": "x", "2": "y"},
                           final_outcomes=("x", "y"))
    stats, _ = run(asi, np.eye(2) / 2, 100, seed=5)
    assert set(stats.counts) == {"x", "y"}
    assert sum(stats.counts.values()) == 100
