"""POVMs, stochastic postprocessings, instruments and adaptive sequences.

Outcome labels are strings.  Composite outcomes (cartesian products) join the
component labels with ``","``.  A zero operation is kept as an empty Kraus
list so that impossible branches stay visible.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    as_matrix,
    dagger,
    fix_phase,
    matrix_power,
    operator_norm,
)

ROOT = "1"
"""Label of the single outcome that precedes the first step of a sequence."""

# Choi eigenvalues below this are noise from products of exact zeros.
ZERO_FLOOR = 1e-20


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def join_labels(*parts: str) -> str:
    return ",".join(parts)


@dataclass(frozen=True)
class Povm:
    outcomes: tuple[str, ...]
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        outcomes = tuple(str(o) for o in self.outcomes)
        effects = tuple(_frozen(as_matrix(e)) for e in self.effects)
        if len(outcomes) != len(effects):
            raise ValueError("number of outcomes and effects differ")
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("duplicate outcome labels")
        if not effects:
            raise ValueError("a POVM needs at least one outcome")
        d = effects[0].shape[0]
        for e in effects:
            if e.shape != (d, d):
                raise ValueError(f"effect shape {e.shape} differs from ({d}, {d})")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "effects", effects)

    @classmethod
    def from_dict(cls, effects: Mapping[str, np.ndarray]) -> "Povm":
        return cls(tuple(effects), tuple(effects.values()))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __getitem__(self, label: str) -> np.ndarray:
        return self.effects[self.outcomes.index(label)]

    def items(self):
        return zip(self.outcomes, self.effects)


@dataclass(frozen=True)
class StochasticMatrix:
    """Row-stochastic matrix ``nu[k, j]`` from source outcomes to target outcomes."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        rows = tuple(str(r) for r in self.rows)
        cols = tuple(str(c) for c in self.cols)
        m = np.array(self.matrix, dtype=float)
        if m.shape != (len(rows), len(cols)):
            raise ValueError(f"matrix shape {m.shape} does not match labels "
                             f"({len(rows)}, {len(cols)})")
        m.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "matrix", m)

    def __getitem__(self, key: tuple[str, str]) -> float:
        k, j = key
        return float(self.matrix[self.rows.index(k), self.cols.index(j)])

    def column(self, j: str) -> dict[str, float]:
        c = self.cols.index(j)
        return {k: float(self.matrix[i, c]) for i, k in enumerate(self.rows)}

    def positive_rows(self, j: str, tol: float = 0.0) -> list[str]:
        """Source outcomes ``k`` with ``nu[k, j] > tol``, in row order."""
        return [k for k, v in self.column(j).items() if v > tol]

    def then(self, other: "StochasticMatrix") -> "StochasticMatrix":
        """Matrix product ``self @ other`` (first ``self``, then ``other``)."""
        if self.cols != other.rows:
            raise ValueError("label mismatch when chaining stochastic matrices")
        return StochasticMatrix(self.rows, other.cols, self.matrix @ other.matrix)

    @classmethod
    def identity(cls, labels: Sequence[str]) -> "StochasticMatrix":
        return cls(tuple(labels), tuple(labels), np.eye(len(labels)))

    @classmethod
    def from_assignment(cls, assignment: Mapping[str, str],
                        cols: Sequence[str] | None = None) -> "StochasticMatrix":
        """0/1 coarse-graining matrix sending row label ``k`` to ``assignment[k]``."""
        rows = tuple(assignment)
        if cols is None:
            cols = tuple(dict.fromkeys(assignment.values()))
        cols = tuple(cols)
        m = np.zeros((len(rows), len(cols)))
        for i, k in enumerate(rows):
            m[i, cols.index(assignment[k])] = 1.0
        return cls(rows, cols, m)


@dataclass(frozen=True)
class Instrument:
    """Finite-outcome quantum instrument given by Kraus operators per outcome.

    ``operations[i]`` is the Kraus list of outcome ``outcomes[i]``; each Kraus
    matrix has shape ``(dim_out, dim_in)``.
    """

    dim_in: int
    dim_out: int
    outcomes: tuple[str, ...]
    operations: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        outcomes = tuple(str(o) for o in self.outcomes)
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("duplicate outcome labels")
        if len(outcomes) != len(self.operations):
            raise ValueError("number of outcomes and operations differ")
        ops = []
        for label, op in zip(outcomes, self.operations):
            kraus = tuple(_frozen(as_matrix(k)) for k in op)
            for k in kraus:
                if k.shape != (self.dim_out, self.dim_in):
                    raise ValueError(f"Kraus operator of outcome {label!r} has shape "
                                     f"{k.shape}, expected {(self.dim_out, self.dim_in)}")
            ops.append(kraus)
        object.__setattr__(self, "dim_in", int(self.dim_in))
        object.__setattr__(self, "dim_out", int(self.dim_out))
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "operations", tuple(ops))

    @classmethod
    def from_dict(cls, operations: Mapping[str, Sequence[np.ndarray]],
                  dim_in: int | None = None, dim_out: int | None = None) -> "Instrument":
        if dim_in is None or dim_out is None:
            first = next((np.asarray(k) for op in operations.values() for k in op), None)
            if first is None:
                raise ValueError("cannot infer dimensions from an all-zero instrument")
            dim_out, dim_in = first.shape
        return cls(dim_in, dim_out, tuple(operations), tuple(tuple(op) for op in operations.values()))

    def __getitem__(self, label: str) -> tuple[np.ndarray, ...]:
        return self.operations[self.outcomes.index(label)]

    def items(self):
        return zip(self.outcomes, self.operations)

    def all_kraus(self) -> list[np.ndarray]:
        """Kraus operators of the induced channel."""
        return [k for op in self.operations for k in op]

    @property
    def shape(self) -> tuple[int, int]:
        return self.dim_out, self.dim_in


@dataclass(frozen=True)
class AdaptiveSequence:
    """N-step adaptive sequence of instruments.

    ``steps[k]`` maps each outcome label of step ``k - 1`` to the instrument
    applied at step ``k``; the first table is keyed by :data:`ROOT`.
    ``final_map`` optionally relabels the last step's outcomes (classical
    coarse-graining applied after the run).
    """

    steps: tuple[Mapping[str, Instrument], ...]
    final_map: Mapping[str, str] | None = None
    final_outcomes: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        steps = tuple(dict(t) for t in self.steps)
        if not steps:
            raise ValueError("an adaptive sequence needs at least one step")
        object.__setattr__(self, "steps", steps)
        if self.final_map is not None:
            object.__setattr__(self, "final_map", dict(self.final_map))
            if self.final_outcomes is None:
                object.__setattr__(self, "final_outcomes",
                                   tuple(dict.fromkeys(self.final_map.values())))
            else:
                object.__setattr__(self, "final_outcomes", tuple(self.final_outcomes))

    @classmethod
    def single(cls, ins: Instrument) -> "AdaptiveSequence":
        return cls(({ROOT: ins},))

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def _first(self, k: int) -> Instrument:
        return next(iter(self.steps[k].values()))

    @property
    def dims(self) -> tuple[int, ...]:
        """Hilbert space dimensions ``d_0, ..., d_N``."""
        return (self._first(0).dim_in,) + tuple(self._first(k).dim_out
                                                for k in range(self.n_steps))

    @property
    def outcome_sets(self) -> tuple[tuple[str, ...], ...]:
        """Outcome sets ``Omega_1, ..., Omega_N``."""
        return tuple(self._first(k).outcomes for k in range(self.n_steps))

    def instrument(self, step: int, previous: str) -> Instrument:
        """Instrument applied at 1-based ``step`` after outcome ``previous``."""
        return self.steps[step - 1][previous]


@dataclass(frozen=True)
class Diagnostic:
    invariant: str
    residual: float
    where: str = ""

    def __str__(self):
        loc = f" [{self.where}]" if self.where else ""
        return f"{self.invariant}{loc}: residual {self.residual:.3e}"


def _hermitian_residual(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m)), initial=0.0))


@functools.singledispatch
def validate(obj, tol: float = DEFAULT_TOL) -> list[Diagnostic]:
    """List the violated invariants of ``obj``; empty when it is valid."""
    raise TypeError(f"cannot validate object of type {type(obj).__name__}")


@validate.register
def _(obj: Povm, tol: float = DEFAULT_TOL) -> list[Diagnostic]:
    out = []
    eye = np.eye(obj.dim)
    for label, e in obj.items():
        h = _hermitian_residual(e)
        if h > tol:
            out.append(Diagnostic("effect is Hermitian", h, label))
            continue
        w = np.linalg.eigvalsh((e + dagger(e)) / 2)
        low, high = -float(w[0]), float(w[-1]) - 1.0
        if low > tol:
            out.append(Diagnostic("effect is positive", low, label))
        if high > tol:
            out.append(Diagnostic("effect is below identity", high, label))
    res = operator_norm(sum(obj.effects) - eye)
    if res > tol:
        out.append(Diagnostic("effects sum to identity", res))
    return out


@validate.register
def _(obj: StochasticMatrix, tol: float = DEFAULT_TOL) -> list[Diagnostic]:
    out = []
    neg = -float(np.min(obj.matrix, initial=0.0))
    if neg > tol:
        out.append(Diagnostic("entries are nonnegative", neg))
    for k, row in zip(obj.rows, obj.matrix):
        res = abs(float(row.sum()) - 1.0)
        if res > tol:
            out.append(Diagnostic("row sums to one", res, k))
    return out


@validate.register
def _(obj: Instrument, tol: float = DEFAULT_TOL) -> list[Diagnostic]:
    total = np.zeros((obj.dim_in, obj.dim_in), dtype=complex)
    for k in obj.all_kraus():
        total += dagger(k) @ k
    res = operator_norm(total - np.eye(obj.dim_in))
    if res > tol:
        return [Diagnostic("sum of K^dag K is identity", res)]
    return []


@validate.register
def _(obj: AdaptiveSequence, tol: float = DEFAULT_TOL) -> list[Diagnostic]:
    out = []
    previous_labels: tuple[str, ...] = (ROOT,)
    previous_dim = None
    for k, table in enumerate(obj.steps, start=1):
        if set(table) != set(previous_labels):
            out.append(Diagnostic("step is keyed by previous outcomes",
                                  float(len(set(table) ^ set(previous_labels))), f"step {k}"))
        outcomes = None
        for prev, ins in table.items():
            where = f"step {k}, after {prev!r}"
            for d in validate(ins, tol):
                out.append(Diagnostic(d.invariant, d.residual, where))
            if previous_dim is not None and ins.dim_in != previous_dim:
                out.append(Diagnostic("dimensions chain", float(abs(ins.dim_in - previous_dim)), where))
            if outcomes is None:
                outcomes = ins.outcomes
            elif set(ins.outcomes) != set(outcomes):
                out.append(Diagnostic("instruments of a step share outcomes", 1.0, where))
        first = next(iter(table.values()))
        dims_out = {ins.dim_out for ins in table.values()}
        if len(dims_out) > 1:
            out.append(Diagnostic("instruments of a step share output dimension",
                                  float(max(dims_out) - min(dims_out)), f"step {k}"))
        previous_dim = first.dim_out
        previous_labels = first.outcomes
    if obj.final_map is not None:
        missing = set(previous_labels) - set(obj.final_map)
        if missing:
            out.append(Diagnostic("final relabelling covers last outcomes", float(len(missing))))
    return out


def validate_state(rho, tol: float = DEFAULT_TOL) -> list[Diagnostic]:
    rho = as_matrix(rho)
    out = []
    if rho.shape[0] != rho.shape[1]:
        return [Diagnostic("state is square", 1.0)]
    h = _hermitian_residual(rho)
    if h > tol:
        return [Diagnostic("state is Hermitian", h)]
    low = -float(np.linalg.eigvalsh((rho + dagger(rho)) / 2)[0])
    if low > tol:
        out.append(Diagnostic("state is positive", low))
    tr = abs(float(np.real(np.trace(rho))) - 1.0)
    if tr > tol:
        out.append(Diagnostic("state has unit trace", tr))
    return out


def effect_of(kraus: Iterable[np.ndarray], dim_in: int) -> np.ndarray:
    e = np.zeros((dim_in, dim_in), dtype=complex)
    for k in kraus:
        e += dagger(k) @ k
    return (e + dagger(e)) / 2


def induced_povm(ins: Instrument) -> Povm:
    """POVM with effects ``sum_m T_{k,m}^dag T_{k,m}``."""
    return Povm(ins.outcomes, tuple(effect_of(op, ins.dim_in) for op in ins.operations))


def induced_channel(ins: Instrument) -> Instrument:
    """The instrument's channel, as a single-outcome instrument."""
    return Instrument(ins.dim_in, ins.dim_out, (ROOT,), (tuple(ins.all_kraus()),))


def apply(op, rho) -> tuple[np.ndarray, float]:
    """Apply a quantum operation to a state.

    ``op`` is either a Kraus list or an :class:`Instrument`, in which case its
    induced channel is applied.  Returns the unnormalised output state and its
    trace, the probability of the operation.
    """
    rho = as_matrix(rho)
    kraus = op.all_kraus() if isinstance(op, Instrument) else list(op)
    if isinstance(op, Instrument):
        d_in, d_out = op.dim_in, op.dim_out
    elif kraus:
        d_out, d_in = np.shape(kraus[0])
    else:
        return np.zeros_like(rho), 0.0
    if rho.shape != (d_in, d_in):
        raise ValueError(f"state of shape {rho.shape} does not fit input dimension {d_in}")
    out = np.zeros((d_out, d_out), dtype=complex)
    for k in kraus:
        out += k @ rho @ dagger(k)
    return out, float(np.real(np.trace(out)))


def luders(povm: Povm, tol: float = DEFAULT_TOL) -> Instrument:
    """Luders instrument with the single Kraus operator ``sqrt(A_i)`` per outcome."""
    ops = []
    for e in povm.effects:
        root = matrix_power(e, 0.5, tol)
        ops.append((root,) if np.max(np.abs(root), initial=0.0) > 0 and
                   np.linalg.norm(root) ** 2 > ZERO_FLOOR else ())
    return Instrument(povm.dim, povm.dim, povm.outcomes, tuple(ops))


def postprocess_povm(povm: Povm, nu: StochasticMatrix) -> Povm:
    """``B_j = sum_k nu[k, j] A_k``."""
    if set(nu.rows) != set(povm.outcomes) or len(nu.rows) != len(povm.outcomes):
        raise ValueError("stochastic matrix rows do not match the POVM outcomes")
    effects = []
    for c in range(len(nu.cols)):
        b = np.zeros((povm.dim, povm.dim), dtype=complex)
        for r, k in enumerate(nu.rows):
            if nu.matrix[r, c] != 0:
                b += nu.matrix[r, c] * povm[k]
        effects.append(b)
    return Povm(nu.cols, tuple(effects))


def choi(kraus: Sequence[np.ndarray], shape: tuple[int, int] | None = None) -> np.ndarray:
    """Unnormalised Choi matrix ``sum_ab N(|a><b|) (x) |a><b|``.

    With this ordering the Choi matrix of a single Kraus operator ``K`` is
    ``vec(K) vec(K)^dag`` where ``vec`` is row-major flattening, so the Kraus
    rank equals the matrix rank.  ``shape`` is ``(dim_out, dim_in)`` and is
    required for an empty Kraus list.
    """
    if shape is None:
        if not kraus:
            raise ValueError("shape is required for an empty Kraus list")
        shape = np.shape(kraus[0])
    d_out, d_in = shape
    if not kraus:
        return np.zeros((d_out * d_in, d_out * d_in), dtype=complex)
    vecs = np.column_stack([np.asarray(k, dtype=complex).reshape(-1) for k in kraus])
    if vecs.shape[0] != d_out * d_in:
        raise ValueError("Kraus operators do not match the requested shape")
    return vecs @ dagger(vecs)


def choi_distance(a: Sequence[np.ndarray], b: Sequence[np.ndarray],
                  shape: tuple[int, int] | None = None) -> float:
    """Frobenius distance between the Choi matrices of two operations."""
    if shape is None:
        ref = list(a) or list(b)
        if not ref:
            return 0.0
        shape = np.shape(ref[0])
    return float(np.linalg.norm(choi(a, shape) - choi(b, shape)))


def minimal_kraus(kraus: Sequence[np.ndarray], shape: tuple[int, int] | None = None,
                  tol: float = DEFAULT_TOL) -> tuple[np.ndarray, ...]:
    """A minimal Kraus representation of the operation.

    Linearly independent inputs are returned unchanged.  Otherwise the Choi
    matrix is diagonalised and eigenvalues above ``tol * max`` are kept.
    """
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    if not kraus:
        return ()
    shape = shape or kraus[0].shape
    c = choi(kraus, shape)
    w, v = np.linalg.eigh(c)
    w, v = w[::-1], v[:, ::-1]
    top = float(w[0]) if len(w) else 0.0
    keep = (w > tol * top) & (w > ZERO_FLOOR)
    r = int(np.count_nonzero(keep))
    nonzero = [k for k in kraus if np.linalg.norm(k) ** 2 > ZERO_FLOOR]
    if len(nonzero) == r:
        return tuple(nonzero)
    v = fix_phase(v[:, keep])
    return tuple(np.sqrt(w[keep][i]) * v[:, i].reshape(shape) for i in range(r))


def operation_rank(kraus: Sequence[np.ndarray], shape: tuple[int, int] | None = None,
                   tol: float = DEFAULT_TOL) -> int:
    return len(minimal_kraus(kraus, shape, tol))


def kraus_ranks(ins: Instrument, tol: float = DEFAULT_TOL) -> dict[str, int]:
    return {label: operation_rank(op, ins.shape, tol) for label, op in ins.items()}


def kraus_rank(ins: Instrument, tol: float = DEFAULT_TOL) -> int:
    """Total Kraus rank: the sum of minimal ranks over outcomes."""
    return sum(kraus_ranks(ins, tol).values())


def minimize(ins: Instrument, tol: float = DEFAULT_TOL) -> Instrument:
    """Same instrument with a minimal Kraus list per outcome."""
    return Instrument(ins.dim_in, ins.dim_out, ins.outcomes,
                      tuple(minimal_kraus(op, ins.shape, tol) for op in ins.operations))


def detailed_instrument(ins: Instrument, tol: float = DEFAULT_TOL
                        ) -> tuple[Instrument, dict[str, str]]:
    """Minimal detailed instrument and its coarse-graining map.

    Every Kraus operator of a minimal representation becomes its own outcome,
    labelled ``"k,m"`` (``m`` counts from zero).  Zero operations contribute
    no detailed outcomes.
    """
    labels, ops, back = [], [], {}
    for k, op in ins.items():
        for m, kr in enumerate(minimal_kraus(op, ins.shape, tol)):
            label = join_labels(k, str(m))
            labels.append(label)
            ops.append((kr,))
            back[label] = k
    return Instrument(ins.dim_in, ins.dim_out, tuple(labels), tuple(ops)), back


def coarse_grain(ins: Instrument, mapping: Mapping[str, str],
                 outcomes: Sequence[str] | None = None) -> Instrument:
    """Merge outcomes by concatenating the Kraus lists of each preimage."""
    if outcomes is None:
        outcomes = tuple(dict.fromkeys(mapping[o] for o in ins.outcomes))
    merged: dict[str, list[np.ndarray]] = {o: [] for o in outcomes}
    for label, op in ins.items():
        target = mapping[label]
        if target not in merged:
            raise ValueError(f"coarse-graining target {target!r} not among outcomes")
        merged[target].extend(op)
    return Instrument(ins.dim_in, ins.dim_out, tuple(merged),
                      tuple(tuple(v) for v in merged.values()))


def compose(first: Instrument, second: Instrument) -> Instrument:
    """Apply ``first`` then ``second``; outcomes are pairs ``"a,b"``."""
    if first.dim_out != second.dim_in:
        raise ValueError(f"cannot compose: output dimension {first.dim_out} "
                         f"differs from input dimension {second.dim_in}")
    labels, ops = [], []
    for (a, op_a), (b, op_b) in itertools.product(first.items(), second.items()):
        labels.append(join_labels(a, b))
        ops.append(tuple(s @ t for t in op_a for s in op_b))
    return Instrument(first.dim_in, second.dim_out, tuple(labels), tuple(ops))


def identity_channel(dim: int) -> Instrument:
    return Instrument(dim, dim, (ROOT,), ((np.eye(dim),),))


def povm_as_instrument(povm: Povm, tol: float = DEFAULT_TOL) -> Instrument:
    """Instrument with one-dimensional output whose induced POVM is ``povm``.

    Kraus operators are the rows ``sqrt(lambda_m) <v_m|`` of the spectral
    decomposition of each effect.
    """
    from .linalg import spectral_decomposition

    ops = []
    for e in povm.effects:
        spec = spectral_decomposition(e, tol)
        keep = ~spec.zero & (spec.eigenvalues > 0)
        ops.append(tuple(np.sqrt(lam) * dagger(v.reshape(-1, 1))
                         for lam, v in zip(spec.eigenvalues[keep], spec.eigenvectors[:, keep].T)))
    return Instrument(povm.dim, 1, povm.outcomes, tuple(ops))


def instrument_distance(a: Instrument, b: Instrument) -> dict[str, float]:
    """Per-outcome Choi distance between two instruments on the same outcomes."""
    if a.shape != b.shape:
        raise ValueError(f"instrument shapes differ: {a.shape} vs {b.shape}")
    if set(a.outcomes) != set(b.outcomes):
        raise ValueError("instruments have different outcome sets")
    return {k: choi_distance(a[k], b[k], a.shape) for k in a.outcomes}
