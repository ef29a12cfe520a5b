"""Property tests: random objects are drawn from seeds that hypothesis explores."""
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from iqseq import io
from iqseq.decompose import n_step, povm_two_step, two_step
from iqseq.linalg import matrix_power, pauli_power, support_projector
from iqseq.quantum import (
    choi,
    choi_distance,
    induced_povm,
    luders,
    minimal_kraus,
    validate,
)
from iqseq.random_objects import (
    random_povm,
    random_psd,
    random_small_instrument,
    random_state,
    random_stochastic,
)
from iqseq.resources import (
    exhaustive_partition_oracle,
    min_steps,
    minimal_ancilla_n_step,
    minimal_ancilla_two_step,
    resource_report,
)
from iqseq.runtime import run, verify_equivalence

PROPS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def feasible_ranks(rng, dim, n):
    ranks = rng.integers(1, dim + 1, size=n)
    while ranks.sum() < dim:
        ranks[rng.integers(n)] = dim
    return ranks.tolist()


@PROPS
@given(seeds)
def test_two_step_recomposes(seed):
    rng = np.random.default_rng(seed)
    t = random_small_instrument(rng)
    nu = random_stochastic(rng, t.outcomes, int(rng.integers(1, 4)))
    dec = two_step(t, nu)
    assert verify_equivalence(dec.as_sequence(), t).passed
    for r in dec.residuals.values():
        assert validate(r) == []


@PROPS
@given(seeds, st.integers(1, 3))
def test_n_step_recomposes_and_respects_rank_bound(seed, links):
    rng = np.random.default_rng(seed)
    t = random_small_instrument(rng)
    chain, rows = [], t.outcomes
    for _ in range(links):
        c = random_stochastic(rng, rows, int(rng.integers(1, 4)))
        chain.append(c)
        rows = c.cols
    asi = n_step(t, chain)
    assert asi.n_steps == links + 1
    assert verify_equivalence(asi, t).passed
    assert resource_report(asi).rank_bound_ok


@PROPS
@given(seeds)
def test_minimal_kraus_preserves_operation(seed):
    rng = np.random.default_rng(seed)
    d_in, d_out, n = (int(x) for x in rng.integers(1, 4, size=3))
    kraus = [rng.standard_normal((d_out, d_in)) + 1j * rng.standard_normal((d_out, d_in))
             for _ in range(n)]
    if rng.random() < 0.5:
        kraus.append(kraus[0] * 0.3 + kraus[-1] * 0.5j)
    out = minimal_kraus(kraus)
    assert len(out) <= min(len(kraus), d_in * d_out)
    assert len(out) == np.linalg.matrix_rank(choi(kraus), tol=1e-9 * np.abs(choi(kraus)).max())
    scale = max(1.0, float(np.linalg.norm(choi(kraus))))
    assert choi_distance(out, kraus) < 1e-10 * scale


@PROPS
@given(seeds, st.integers(1, 4), st.integers(1, 5))
def test_luders_induces_its_povm(seed, dim, n):
    rng = np.random.default_rng(seed)
    a = random_povm(rng, dim, n, ranks=feasible_ranks(rng, dim, n))
    t = luders(a)
    assert validate(t) == []
    back = induced_povm(t)
    for k in a.outcomes:
        assert np.abs(back[k] - a[k]).max() < 1e-10


@PROPS
@given(seeds)
def test_povm_two_step_effective_povm(seed):
    rng = np.random.default_rng(seed)
    dim, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    a = random_povm(rng, dim, n, ranks=feasible_ranks(rng, dim, n))
    nu = random_stochastic(rng, a.outcomes, int(rng.integers(1, 4)))
    eff = povm_two_step(a, nu).effective_povm()
    for k in a.outcomes:
        assert np.abs(eff[k] - a[k]).max() < 1e-9


@PROPS
@given(seeds, st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_matrix_power_semigroup(seed, a, b):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    h = random_psd(rng, d, int(rng.integers(1, d + 1)))
    h = h / np.abs(h).max()
    lhs = matrix_power(h, a) @ matrix_power(h, b)
    assert np.abs(lhs - matrix_power(h, a + b)).max() < 1e-8


@PROPS
@given(seeds)
def test_pseudo_inverse_square_root(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    h = random_psd(rng, d, int(rng.integers(1, d + 1)))
    half, inv_half = matrix_power(h, 0.5), matrix_power(h, -0.5)
    p = support_projector(h)
    assert np.abs(half @ inv_half - p).max() < 1e-8
    assert np.abs(half @ half - h).max() < 1e-10 * max(1.0, np.abs(h).max())


@PROPS
@given(st.floats(0, 3), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0]))
def test_pauli_power_on_bloch_ball(alpha, x, y, z, gamma):
    r = np.array([x, y, z])
    norm = np.linalg.norm(r)
    if norm > 1:
        r = r / norm
    r = alpha * r
    h = np.array([[alpha + r[2], r[0] - 1j * r[1]], [r[0] + 1j * r[1], alpha - r[2]]])
    try:
        ref = matrix_power(h, gamma)
    except OverflowError:
        # unrepresentable results must be reported the same way by both paths
        with pytest.raises(OverflowError):
            pauli_power(h, gamma)
        return
    assert np.abs(pauli_power(h, gamma) - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())


@PROPS
@given(seeds)
def test_json_roundtrip_exact(seed):
    rng = np.random.default_rng(seed)
    t = random_small_instrument(rng)
    back = io.from_json(io.loads(io.dumps(io.to_json(t))))
    assert all(np.array_equal(x, y) for x, y in zip(t.all_kraus(), back.all_kraus()))


@PROPS
@given(seeds, st.integers(1, 200), st.integers(0, 2**31))
def test_run_counts_and_determinism(seed, shots, run_seed):
    rng = np.random.default_rng(seed)
    t = random_small_instrument(rng, max_dim=3)
    nu = random_stochastic(rng, t.outcomes, 2)
    asi = two_step(t, nu).as_sequence()
    rho = random_state(rng, t.dim_in)
    a, _ = run(asi, rho, shots, run_seed)
    b, _ = run(asi, rho, shots, run_seed)
    assert a.counts == b.counts and sum(a.counts.values()) == shots


@settings(deadline=None)
@given(st.integers(1, 8), st.integers(1, 3))
def test_two_step_minimum_matches_oracle(r, g):
    assert exhaustive_partition_oracle(r, g) == minimal_ancilla_two_step(r, g)


@given(st.integers(1, 500), st.integers(1, 4), st.integers(1, 6))
def test_n_step_minimum_is_smallest_feasible(r, g, n):
    d = minimal_ancilla_n_step(r, g, n)
    s = d // g
    assert d % g == 0
    assert g ** (n - 1) * s**n >= r
    assert s == 1 or g ** (n - 1) * (s - 1) ** n < r


@given(st.integers(1, 500), st.integers(1, 4), st.integers(0, 6))
def test_min_steps_is_smallest(r, g, extra):
    d_a = max(g + extra, 2)
    n = min_steps(r, g, d_a)
    assert d_a**n >= g * r
    assert n == 1 or d_a ** (n - 1) < g * r
    assert n >= math.log2(g * r) / math.log2(d_a) - 1e-12
