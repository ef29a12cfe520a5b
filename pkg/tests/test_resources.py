import math

import pytest

from iqseq.decompose import min_ancilla, product_outcomes, two_step
from iqseq.generators import shrinking, shrinking_postproc, three_outcome, three_outcome_postproc
from iqseq.quantum import StochasticMatrix, luders
from iqseq.random_objects import random_instrument
from iqseq.resources import (
    Partition,
    ancilla_dimension,
    ancilla_qubits,
    dimension_factor,
    exhaustive_partition_oracle,
    hard_coarse_graining,
    m_values,
    min_steps,
    minimal_ancilla_n_step,
    minimal_ancilla_two_step,
    optimal_partition,
    partition_cost,
    rank_upper_bound,
    resource_report,
    set_partitions,
    tradeoff_bound,
)


def bell(n):
    # Bell numbers by the triangle recurrence, an independent count of set partitions
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def test_dimension_factor():
    assert dimension_factor(2, 2) == 1
    assert dimension_factor(2, 3) == 2
    assert dimension_factor(4, 2) == 1
    with pytest.raises(ValueError):
        dimension_factor(0, 2)


def test_m_values_three_outcome():
    t = luders(three_outcome())
    assert m_values(t, three_outcome_postproc()) == {"0": 2, "1": 1}


def test_ancilla_dimension_three_outcome():
    assert ancilla_dimension(luders(three_outcome()), three_outcome_postproc()) == 2


def test_ancilla_dimension_rejects_shrinking():
    with pytest.raises(ValueError):
        ancilla_dimension(shrinking(), shrinking_postproc())


@pytest.mark.parametrize("r,g,want", [(1, 1, 1), (4, 1, 2), (5, 1, 3), (9, 1, 3), (8, 2, 4),
                                      (9, 2, 6), (3, 3, 3), (4, 3, 6)])
def test_minimal_ancilla_two_step_values(r, g, want):
    assert minimal_ancilla_two_step(r, g) == want


def test_minimal_ancilla_n_step_reduces_to_two_step():
    for r in range(1, 30):
        for g in (1, 2, 3):
            assert minimal_ancilla_n_step(r, g, 2) == minimal_ancilla_two_step(r, g)
            assert minimal_ancilla_n_step(r, g, 1) == g * r


def test_minimal_ancilla_n_step_matches_float_formula():
    for r in range(1, 40):
        for g in (1, 2, 3):
            for n in (2, 3, 4):
                want = g * math.ceil((g * r) ** (1 / n) / g - 1e-12)
                assert minimal_ancilla_n_step(r, g, n) == want


def test_min_steps():
    assert min_steps(16, 1, 2) == 4
    assert min_steps(1, 1, 1) == 1
    assert min_steps(5, 2, 2) == 4
    with pytest.raises(ValueError):
        min_steps(2, 1, 1)
    with pytest.raises(ValueError):
        min_steps(3, 3, 2)


def test_tradeoff_and_qubits():
    assert tradeoff_bound(16, 1) == 4
    assert ancilla_qubits(1) == 0
    assert ancilla_qubits(3) == 2
    assert ancilla_qubits(4) == 2


def test_rank_upper_bound():
    assert rank_upper_bound(2, 2, [2, 2, 2]) == 8
    assert rank_upper_bound(3, 4, [4, 2]) == 3 * 6


def test_set_partitions_count_bell_numbers():
    for n in range(8):
        assert sum(1 for _ in set_partitions(n)) == bell(n)


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition(((0, 1), (1,)))
    with pytest.raises(ValueError):
        Partition(((0,), ()))


def test_optimal_partition_reaches_oracle():
    for r in range(1, 11):
        for g in (1, 2, 3):
            part, cost = optimal_partition(r, g)
            assert cost == exhaustive_partition_oracle(r, g)
            assert cost == partition_cost(part.sizes, g)


def test_oracle_refuses_large_inputs():
    with pytest.raises(ValueError):
        exhaustive_partition_oracle(13, 1)


def test_hard_coarse_graining():
    nu = StochasticMatrix(("a", "b"), ("x", "y"), [[0.3, 0.7], [0.5, 0.5]])
    h = hard_coarse_graining(nu)
    assert h.matrix.tolist() == [[0, 1], [1, 0]]


def test_report_three_outcome():
    dec = two_step(luders(three_outcome()), three_outcome_postproc())
    rep = resource_report(dec.as_sequence())
    assert (rep.g, rep.r_t, rep.d_a, rep.n_a, rep.n_steps) == (1, 3, 2, 1, 2)
    assert rep.rank_bound_ok and rep.tradeoff_ok
    d = rep.to_dict()
    assert d["d_A"] == 2 and "m" not in d


def test_report_min_ancilla_uses_g(rng):
    t = random_instrument(rng, 2, 3, [2, 2, 1])
    rep = resource_report(min_ancilla(t))
    assert rep.g == 2 and rep.d_a == 2 and rep.r_t == 5
    assert rep.step_bound_ok and rep.tradeoff_ok and rep.rank_bound_ok


def test_report_product_is_rank_bounded(rng):
    labels = ("0,0", "0,1", "1,0", "1,1")
    t = random_instrument(rng, 2, 2, [1, 1, 1, 1], labels)
    rep = resource_report(product_outcomes(t))
    assert rep.r_t <= rep.rank_bound
