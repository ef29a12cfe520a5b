"""Random states, POVMs, instruments and stochastic matrices for tests and demos."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .linalg import dagger
from .quantum import Instrument, Povm, StochasticMatrix


def _labels(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-random isometry ``C^cols -> C^rows`` (requires ``rows >= cols``)."""
    q, r = np.linalg.qr(ginibre(rng, rows, cols))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    return random_isometry(rng, dim, dim)


def random_psd(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    g = ginibre(rng, dim, dim if rank is None else rank)
    return g @ dagger(g)


def random_state(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    rho = random_psd(rng, dim, rank)
    return rho / np.trace(rho).real


def random_instrument(rng: np.random.Generator, dim_in: int, dim_out: int,
                      ranks: Sequence[int], labels: Sequence[str] | None = None) -> Instrument:
    """Instrument whose outcome ``i`` has ``ranks[i]`` generic Kraus operators.

    All Kraus operators are cut from one random isometry
    ``C^dim_in -> C^(dim_out * sum(ranks))``; the total rank must satisfy
    ``dim_out * sum(ranks) >= dim_in``.
    """
    total = sum(ranks)
    if dim_out * total < dim_in:
        raise ValueError("total rank too small for a trace-preserving instrument")
    v = random_isometry(rng, dim_out * total, dim_in)
    blocks = [v[i * dim_out:(i + 1) * dim_out] for i in range(total)]
    ops, start = [], 0
    for r in ranks:
        ops.append(tuple(blocks[start:start + r]))
        start += r
    labels = tuple(labels) if labels is not None else _labels(len(ranks))
    return Instrument(dim_in, dim_out, labels, tuple(ops))


def random_povm(rng: np.random.Generator, dim: int, n: int,
                ranks: Sequence[int] | None = None, labels: Sequence[str] | None = None) -> Povm:
    """Random POVM; ``ranks`` fixes the rank of each effect (default full rank).

    The ranks must add up to at least ``dim`` so that the effects can sum to
    the identity.
    """
    ranks = list(ranks) if ranks is not None else [dim] * n
    if len(ranks) != n or sum(ranks) < dim:
        raise ValueError(f"need {n} ranks summing to at least dim = {dim}, got {ranks}")
    gs = [random_psd(rng, dim, r) for r in ranks]
    s = sum(gs)
    w, v = np.linalg.eigh(s)
    s_inv = (v / np.sqrt(w)) @ dagger(v)
    effects = [s_inv @ g @ s_inv for g in gs]
    effects = [(e + dagger(e)) / 2 for e in effects]
    return Povm(tuple(labels) if labels is not None else _labels(n), tuple(effects))


def random_stochastic(rng: np.random.Generator, rows: Sequence[str], n_cols: int,
                      sparsity: float = 0.5, cols: Sequence[str] | None = None) -> StochasticMatrix:
    """Row-stochastic matrix; each entry is zeroed with probability ``sparsity``
    (every row keeps at least one positive entry)."""
    m = rng.random((len(rows), n_cols))
    m[rng.random(m.shape) < sparsity] = 0.0
    for i in range(len(rows)):
        if not m[i].any():
            m[i, rng.integers(n_cols)] = 1.0
    m = m / m.sum(axis=1, keepdims=True)
    return StochasticMatrix(tuple(rows), tuple(cols) if cols is not None else _labels(n_cols), m)


def random_coarse_graining(rng: np.random.Generator, rows: Sequence[str],
                           n_cols: int) -> StochasticMatrix:
    """0/1 merge of ``rows`` into ``n_cols`` groups (some may stay empty)."""
    m = np.zeros((len(rows), n_cols))
    m[np.arange(len(rows)), rng.integers(n_cols, size=len(rows))] = 1.0
    return StochasticMatrix(tuple(rows), _labels(n_cols), m)


def random_small_instrument(rng: np.random.Generator, max_dim: int = 4, max_outcomes: int = 4,
                            max_rank: int = 6) -> Instrument:
    """Random instrument with dims, outcome count and total Kraus rank within the bounds.

    Outcomes may carry zero operations; the total rank is drawn from the
    feasible range ``ceil(dim_in / dim_out) .. max_rank``.
    """
    while True:
        d_in, d_out = (int(x) for x in rng.integers(1, max_dim + 1, size=2))
        low = -(-d_in // d_out)
        if low <= max_rank:
            break
    n = int(rng.integers(1, max_outcomes + 1))
    total = int(rng.integers(max(low, 1), max_rank + 1))
    ranks = np.bincount(rng.integers(n, size=total), minlength=n)
    return random_instrument(rng, d_in, d_out, ranks.tolist())
