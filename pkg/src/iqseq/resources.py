"""Ancilla-dimension bookkeeping for adaptive sequences.

``g = ceil(d_out / d_in)`` is the factor by which an instrument enlarges its
system; every ancilla dimension reported here is a multiple of ``g`` so that
the ancilla factorises into the part that becomes output and a resettable
rest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .linalg import DEFAULT_TOL
from .quantum import (
    AdaptiveSequence,
    Instrument,
    StochasticMatrix,
    kraus_rank,
    kraus_ranks,
)


def _positive(**kwargs) -> None:
    for name, value in kwargs.items():
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")


def dimension_factor(dim_in: int, dim_out: int) -> int:
    _positive(dim_in=dim_in, dim_out=dim_out)
    return -(-dim_out // dim_in)


def m_values(t: Instrument, nu: StochasticMatrix, tol: float = DEFAULT_TOL) -> dict[str, int]:
    """``m_j = sum of r_k over k with nu[k, j] > 0``."""
    ranks = kraus_ranks(t, tol)
    return {j: sum(ranks[k] for k in nu.positive_rows(j)) for j in nu.cols}


def ancilla_dimension(t: Instrument, nu: StochasticMatrix, tol: float = DEFAULT_TOL) -> int:
    """Ancilla dimension of the two-step plan ``(t, nu)`` when the output does not shrink.

    ``max(g * ceil(|Omega_B| / g), g * m_j)``.
    """
    if t.dim_in > t.dim_out:
        raise ValueError("the two-step plan formula only covers dim_in <= dim_out")
    g = dimension_factor(t.dim_in, t.dim_out)
    m = m_values(t, nu, tol)
    return max([g * math.ceil(len(nu.cols) / g)] + [g * v for v in m.values()])


def _smallest(predicate, start: int = 1) -> int:
    s = start
    while not predicate(s):
        s += 1
    return s


def minimal_ancilla_two_step(r_t: int, g: int) -> int:
    """``g * ceil(sqrt(r_t / g))``, computed in integers."""
    _positive(r_t=r_t, g=g)
    return g * _smallest(lambda s: g * s * s >= r_t)


def minimal_ancilla_n_step(r_t: int, g: int, n: int) -> int:
    """``g * ceil((g r_t)**(1/n) / g)``, computed in integers."""
    _positive(r_t=r_t, g=g, n=n)
    return g * _smallest(lambda s: g ** (n - 1) * s**n >= r_t)


def min_steps(r_t: int, g: int, d_a: int) -> int:
    """Smallest ``N`` with ``g * r_t <= d_a**N``."""
    _positive(r_t=r_t, g=g, d_a=d_a)
    if d_a < g:
        raise ValueError(f"ancilla dimension {d_a} is smaller than g = {g}")
    if d_a == 1:
        if r_t == 1:
            return 1
        raise ValueError("a one-dimensional ancilla realises only rank-one instruments")
    return _smallest(lambda n: d_a**n >= g * r_t)


def tradeoff_bound(r_t: int, g: int) -> float:
    """Lower bound ``log2(g r_t)`` on ``N * n_A``."""
    _positive(r_t=r_t, g=g)
    return math.log2(g * r_t)


def rank_upper_bound(d_a: int, d0: int, dims: Sequence[int]) -> int:
    """``prod_k floor(d0 d_a / d_k)`` over the step output dimensions ``d_1..d_N``."""
    _positive(d_a=d_a, d0=d0)
    out = 1
    for d in dims:
        _positive(d_k=d)
        out *= (d0 * d_a) // d
    return out


def ancilla_qubits(d_a: int) -> int:
    return math.ceil(math.log2(d_a)) if d_a > 1 else 0


@dataclass(frozen=True)
class Partition:
    """Disjoint groups of detailed-outcome indices ``0..r-1`` covering all of them."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        items = [i for grp in self.groups for i in grp]
        if any(not grp for grp in self.groups):
            raise ValueError("partition groups must be nonempty")
        if sorted(items) != list(range(len(items))):
            raise ValueError("groups must be disjoint and cover 0..r-1")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(grp) for grp in self.groups)


def partition_cost(sizes: Sequence[int], g: int) -> int:
    """``g * max(ceil(#groups / g), largest group)``."""
    return g * max(math.ceil(len(sizes) / g), max(sizes))


def optimal_partition(r_t: int, g: int) -> tuple[Partition, int]:
    """Balanced partition reaching the two-step minimum ``g * ceil(sqrt(r_t / g))``."""
    d_a = minimal_ancilla_two_step(r_t, g)
    n = min(d_a, r_t)
    base, extra = divmod(r_t, n)
    groups, start = [], 0
    for i in range(n):
        size = base + (1 if i < extra else 0)
        groups.append(tuple(range(start, start + size)))
        start += size
    part = Partition(tuple(groups))
    return part, partition_cost(part.sizes, g)


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length ``n``: ``a[0] = 0``, ``a[i] <= 1 + max(a[:i])``."""
    if n == 0:
        yield ()
        return
    a = [0] * n

    def gen(i: int, top: int):
        if i == n:
            yield tuple(a)
            return
        for v in range(top + 2):
            a[i] = v
            yield from gen(i + 1, max(top, v))

    yield from gen(1, 0)


def exhaustive_partition_oracle(r_t: int, g: int) -> int:
    """Minimum of :func:`partition_cost` over every set partition of ``r_t`` items."""
    _positive(r_t=r_t, g=g)
    if r_t > 12:
        raise ValueError("exhaustive enumeration is limited to r_t <= 12")
    best = None
    for rgs in set_partitions(r_t):
        sizes = np.bincount(rgs)
        cost = partition_cost(sizes.tolist(), g)
        best = cost if best is None else min(best, cost)
    return best


def hard_coarse_graining(nu: StochasticMatrix) -> StochasticMatrix:
    """0/1 matrix sending each row to its largest column (lowest index on ties)."""
    m = np.zeros_like(nu.matrix)
    m[np.arange(len(nu.rows)), np.argmax(nu.matrix, axis=1)] = 1.0
    return StochasticMatrix(nu.rows, nu.cols, m)


@dataclass(frozen=True)
class ResourceReport:
    g: int
    ranks: dict[str, int]
    r_t: int
    d_a: int
    n_a: int
    n_steps: int
    dims: tuple[int, ...]
    available: tuple[int, ...]
    step_ranks: tuple[dict[str, int], ...]
    rank_bound: int
    min_steps: int | None
    tradeoff: float
    m: dict[str, int] | None = None

    @property
    def rank_bound_ok(self) -> bool:
        return self.r_t <= self.rank_bound

    @property
    def step_bound_ok(self) -> bool:
        return self.min_steps is None or self.n_steps >= self.min_steps

    @property
    def tradeoff_ok(self) -> bool:
        return self.n_steps * self.n_a >= self.tradeoff - 1e-12

    def to_dict(self) -> dict:
        out = {
            "g": self.g, "ranks": self.ranks, "r_T": self.r_t, "d_A": self.d_a,
            "n_A": self.n_a, "N": self.n_steps, "dims": list(self.dims),
            "available_ancilla": list(self.available),
            "step_ranks": [dict(s) for s in self.step_ranks],
            "rank_bound": self.rank_bound, "rank_bound_ok": self.rank_bound_ok,
            "min_steps": self.min_steps, "step_bound_ok": self.step_bound_ok,
            "tradeoff_bound": self.tradeoff, "tradeoff_ok": self.tradeoff_ok,
        }
        if self.m is not None:
            out["m"] = self.m
        return out


def step_requirement(ins: Instrument, tol: float = DEFAULT_TOL) -> int:
    """Ancilla dimension one instrument needs on its own: ``ceil(d_out / d_in)`` times its rank."""
    return dimension_factor(ins.dim_in, ins.dim_out) * max(kraus_rank(ins, tol), 1)


def resource_report(asi: AdaptiveSequence, m: dict[str, int] | None = None,
                    tol: float = DEFAULT_TOL) -> ResourceReport:
    """Resources of a concrete sequence.

    ``d_A`` is the largest single-instrument requirement, rounded up to a
    multiple of the overall ``g``.
    """
    from .runtime import total_instrument

    total = total_instrument(asi)
    ranks = kraus_ranks(total, tol)
    r_t = sum(ranks.values())
    dims = asi.dims
    g = dimension_factor(dims[0], dims[-1])
    step_ranks = tuple({prev: kraus_rank(ins, tol) for prev, ins in table.items()}
                       for table in asi.steps)
    need = max(step_requirement(ins, tol) for table in asi.steps for ins in table.values())
    d_a = g * math.ceil(need / g)
    available = tuple((dims[0] * d_a) // d for d in dims[1:])
    bound = rank_upper_bound(d_a, dims[0], dims[1:])
    n = None
    if r_t >= 1:
        try:
            n = min_steps(r_t, g, d_a)
        except ValueError:
            n = None
    return ResourceReport(
        g=g, ranks=ranks, r_t=r_t, d_a=d_a, n_a=ancilla_qubits(d_a), n_steps=asi.n_steps,
        dims=dims, available=available, step_ranks=step_ranks, rank_bound=bound,
        min_steps=n, tradeoff=tradeoff_bound(max(r_t, 1), g), m=m)
