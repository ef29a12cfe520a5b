"""Constructive decompositions of instruments into adaptive sequences.

The basic move splits a total instrument ``T`` into an initial Luders
instrument of a postprocessed POVM ``B`` followed by residual instruments
``R^j`` conditioned on the first outcome ``j``.  Everything else (N-step
chains, product outcomes, smallest ancilla) is built by iterating it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    complete_basis,
    dagger,
    fix_phase,
    matrix_power,
    spectral_decomposition,
    svd,
)
from .quantum import (
    ROOT,
    ZERO_FLOOR,
    AdaptiveSequence,
    Instrument,
    Povm,
    StochasticMatrix,
    induced_povm,
    join_labels,
    luders,
    minimal_kraus,
    postprocess_povm,
    validate,
)


class PreconditionError(ValueError):
    """The requested construction does not apply to the given input."""


class InvariantError(ValueError):
    """An input object violates one of its invariants."""

    def __init__(self, what: str, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__(f"invalid {what}: " + "; ".join(str(d) for d in self.diagnostics))


def _require_valid(obj, what: str, tol: float) -> None:
    diags = validate(obj, tol)
    if diags:
        raise InvariantError(what, diags)


def _is_zero(k: np.ndarray) -> bool:
    return float(np.linalg.norm(k)) ** 2 <= ZERO_FLOOR


Weights = Mapping[tuple[str, str, int], complex]


@dataclass(frozen=True)
class AuxInstrumentPolicy:
    """How the orthocomplement of ``supp B_j`` is covered when the output is smaller.

    Orthocomplement basis vectors are first absorbed into existing residual
    Kraus operators, largest free image dimension first, by mapping them onto
    output vectors orthogonal to the operator's image.  Whatever is left is
    packed into groups of at most ``dim_out`` vectors, one extra Kraus
    operator per group, attached to ``target`` (default: the first outcome
    ``k`` with ``nu[k, j] > 0``).
    """

    target: str | None = None
    absorb: bool = True

    def complete(self, main: list[tuple[str, np.ndarray]], complement: np.ndarray,
                 dim_out: int, default_target: str, tol: float = DEFAULT_TOL
                 ) -> tuple[list[tuple[str, np.ndarray]], int]:
        """Return the completed Kraus list and the number of extra Kraus operators.

        ``main`` lists ``(outcome, kraus)`` pairs; ``complement`` has
        orthonormal columns spanning the part of the input that ``main`` does
        not cover.
        """
        out = [(k, np.array(r, dtype=complex)) for k, r in main]
        remaining = [complement[:, i] for i in range(complement.shape[1])]
        if self.absorb and remaining:
            room = []
            for idx, (_, r) in enumerate(out):
                dec = svd(r, tol)
                room.append((dim_out - dec.rank, idx, dec.left))
            room.sort(key=lambda t: (-t[0], t[1]))
            for cap, idx, left in room:
                if not remaining or cap <= 0:
                    continue
                take = min(cap, len(remaining))
                free = complete_basis(left, dim_out)[:, left.shape[1]:left.shape[1] + take]
                k, r = out[idx]
                for w, q in zip(free.T, remaining[:take]):
                    r = r + np.outer(w, q.conj())
                out[idx] = (k, r)
                remaining = remaining[take:]
        target = self.target if self.target is not None else default_target
        extra = 0
        for start in range(0, len(remaining), dim_out):
            group = remaining[start:start + dim_out]
            aux = np.zeros((dim_out, complement.shape[0]), dtype=complex)
            for i, q in enumerate(group):
                aux[i] += q.conj()
            out.append((target, aux))
            extra += 1
        return out, extra


@dataclass(frozen=True)
class TwoStepDecomposition:
    """Initial instrument, residual instruments and the data that produced them."""

    target: Instrument
    initial: Instrument
    residuals: Mapping[str, Instrument]
    postproc: StochasticMatrix
    weights: Mapping[tuple[str, str, int], complex] = field(default_factory=dict)
    additional_kraus: Mapping[str, int] = field(default_factory=dict)

    def as_sequence(self) -> AdaptiveSequence:
        return AdaptiveSequence(({ROOT: self.initial}, dict(self.residuals)))

    def branch(self, k: str, j: str) -> list[np.ndarray]:
        """Kraus operators of ``R^j_k o J_j``."""
        return [r @ q for q in self.initial[j] for r in self.residuals[j][k]]


def _default_weights(t_ops: Mapping[str, tuple[np.ndarray, ...]], nu: StochasticMatrix,
                     j: str) -> dict[tuple[str, str, int], complex]:
    positive = nu.positive_rows(j)
    for k in positive:
        return {(k, j, 0): 1.0}
    return {(nu.rows[0], j, 0): 1.0}


def _check_weights(weights: Weights, j: str, tol: float) -> None:
    total = sum(abs(c) ** 2 for (_, jj, _), c in weights.items() if jj == j)
    if abs(total - 1.0) > tol:
        raise ValueError(f"path weights for outcome {j!r} have squared norm {total:.6g}, expected 1")


def _complete_residual(main: list[tuple[str, int, np.ndarray, np.ndarray]], proj: np.ndarray,
                       outcomes: Sequence[str], dim_in: int, dim_out: int,
                       weights: Weights, j: str, policy: AuxInstrumentPolicy,
                       default_target: str, tol: float) -> tuple[Instrument, int]:
    """Turn Kraus operators with ``sum R^dag R = proj`` into a full instrument.

    ``main`` holds ``(k, m, R, source)`` where ``source`` is the operator whose
    singular vectors define the completing isometry.
    """
    # eigenvalues of a projector are 0 or 1, so split at 1/2 rather than relatively
    w, v = np.linalg.eigh(np.eye(dim_in) - proj)
    complement = fix_phase(v[:, w > 0.5][:, ::-1])
    ops: dict[str, list[np.ndarray]] = {k: [] for k in outcomes}
    extra = 0
    if dim_in <= dim_out:
        keyed = {(k, m): (r, src) for k, m, r, src in main}
        for (k, jj, m), c in weights.items():
            if jj != j or c == 0:
                continue
            zero = np.zeros((dim_out, dim_in), complex)
            r, src = keyed.get((k, m), (zero, zero))
            dec = svd(src, tol)
            right = complete_basis(dec.right, src.shape[1])
            left = complete_basis(dec.left, dim_out, src.shape[1])
            v = left @ dagger(right)
            keyed[(k, m)] = (r + c * v @ (np.eye(dim_in) - proj), src)
        for (k, m), (r, _) in sorted(keyed.items(), key=lambda t: (outcomes.index(t[0][0]), t[0][1])):
            if not _is_zero(r):
                ops[k].append(r)
    else:
        pairs = [(k, r) for k, _, r, _ in main if not _is_zero(r)]
        completed, extra = policy.complete(pairs, complement, dim_out, default_target, tol)
        for k, r in completed:
            ops[k].append(r)
    ins = Instrument(dim_in, dim_out, tuple(outcomes), tuple(tuple(v) for v in ops.values()))
    return ins, extra


def _split_kraus(t: Instrument, tol: float) -> dict[str, tuple[np.ndarray, ...]]:
    return {k: minimal_kraus(op, t.shape, tol) for k, op in t.items()}


def _check_postproc(t: Instrument, nu: StochasticMatrix, tol: float) -> None:
    _require_valid(nu, "stochastic matrix", tol)
    if tuple(nu.rows) != tuple(t.outcomes):
        if sorted(nu.rows) != sorted(t.outcomes):
            raise ValueError("stochastic matrix rows do not match the instrument outcomes")


def two_step(t: Instrument, nu: StochasticMatrix, weights: Weights | None = None,
             policy: AuxInstrumentPolicy | None = None,
             tol: float = DEFAULT_TOL) -> TwoStepDecomposition:
    """Split ``t`` into the Luders instrument of ``B = nu(A^t)`` and residuals.

    Residual Kraus operators are ``T_{k,jm} B_j^{-1/2}`` with
    ``T_{k,jm} = sqrt(nu[k, j]) T'_{k,m}`` and ``T'`` a minimal Kraus list.
    The part of the input outside ``supp B_j`` is covered by an isometry
    weighted by ``weights`` when the output is at least as large as the
    input, and by ``policy`` otherwise.

    :param t: total instrument.
    :param nu: postprocessing with rows labelled by ``t``'s outcomes.
    :param weights: complex path weights ``c[(k, j, m)]``; defaults to all
        weight on the first ``(k, m)`` with ``nu[k, j] > 0``.
    :param policy: orthocomplement policy for the shrinking case.
    """
    _require_valid(t, "instrument", tol)
    _check_postproc(t, nu, tol)
    policy = policy or AuxInstrumentPolicy()
    t_ops = _split_kraus(t, tol)
    a = induced_povm(t)
    b = postprocess_povm(a, nu)
    initial = luders(b, tol)
    d, dd = t.dim_in, t.dim_out
    all_weights: dict[tuple[str, str, int], complex] = {}
    residuals, extra = {}, {}
    for j, bj in b.items():
        if weights is None:
            wj = _default_weights(t_ops, nu, j)
        else:
            wj = {key: c for key, c in weights.items() if key[1] == j}
            _check_weights(wj, j, tol)
        all_weights.update(wj)
        b_inv = matrix_power(bj, -0.5, tol)
        proj = matrix_power(bj, 0.0, tol)
        main = []
        for k in t.outcomes:
            scale = math.sqrt(max(nu[k, j], 0.0))
            for m, tp in enumerate(t_ops[k]):
                tk = scale * tp
                if scale > 0 and np.max(np.abs(tk @ proj - tk), initial=0.0) > 1e3 * tol * max(1.0, np.abs(tk).max()):
                    raise AssertionError("Kraus operator leaves the support of B_j")
                main.append((k, m, tk @ b_inv, tk))
        positive = nu.positive_rows(j)
        default_target = positive[0] if positive else t.outcomes[0]
        residuals[j], extra[j] = _complete_residual(main, proj, t.outcomes, d, dd, wj, j,
                                                    policy, default_target, tol)
    return TwoStepDecomposition(t, initial, residuals, nu, all_weights, extra)


def count_additional_kraus(t: Instrument, nu: StochasticMatrix, j: str,
                           tol: float = DEFAULT_TOL) -> int:
    """Number of extra Kraus operators needed for residual ``j`` when the output shrinks.

    Zero when the free image dimensions ``sum (d_out - rank T_{k,jm})`` over
    ``nu[k, j] > 0`` cover ``dim ker B_j``; otherwise the ceiling of the
    deficit divided by ``d_out``.  Always zero when ``dim_in <= dim_out``.
    """
    if t.dim_in <= t.dim_out:
        return 0
    b = postprocess_povm(induced_povm(t), nu)
    missing = t.dim_in - spectral_decomposition(b[j], tol).rank
    room = 0
    for k in nu.positive_rows(j):
        for tp in minimal_kraus(t[k], t.shape, tol):
            room += t.dim_out - svd(tp, tol).rank
    if room >= missing:
        return 0
    return math.ceil((missing - room) / t.dim_out)


def two_step_reduced(t: Instrument, nu: StochasticMatrix, weights: Weights | None = None,
                     policy: AuxInstrumentPolicy | None = None,
                     tol: float = DEFAULT_TOL) -> TwoStepDecomposition:
    """Two-step split through an intermediate space of dimension ``max_j rank B_j``.

    The initial Kraus operators are ``K_j = M_j sqrt(B_j)`` with
    ``M_j = sum_k |k><v^j_k|`` over the support eigenvectors of ``B_j``; the
    residuals use ``T_{k,jm} B_j^{-1/2} M_j^dag`` and are completed on
    ``span{|rank B_j>, ..., |d_1 - 1>}`` like :func:`two_step` does.

    Raises:
        PreconditionError: if some ``B_j`` has full rank.
    """
    _require_valid(t, "instrument", tol)
    _check_postproc(t, nu, tol)
    policy = policy or AuxInstrumentPolicy()
    t_ops = _split_kraus(t, tol)
    b = postprocess_povm(induced_povm(t), nu)
    specs = {j: spectral_decomposition(bj, tol) for j, bj in b.items()}
    d1 = max(s.rank for s in specs.values())
    if d1 >= t.dim_in:
        raise PreconditionError(
            f"largest rank of the postprocessed POVM is {d1}, not below the input dimension "
            f"{t.dim_in}; use two_step instead")
    d, dd = t.dim_in, t.dim_out
    init_ops, residuals, extra, all_weights = [], {}, {}, {}
    for j, bj in b.items():
        spec = specs[j]
        vecs = spec.support()
        m_j = np.zeros((d1, d), dtype=complex)
        m_j[: vecs.shape[1]] = dagger(vecs)
        k_j = m_j @ matrix_power(bj, 0.5, tol)
        init_ops.append(() if _is_zero(k_j) else (k_j,))
        b_inv = matrix_power(bj, -0.5, tol)
        proj = np.zeros((d1, d1), dtype=complex)
        proj[: spec.rank, : spec.rank] = np.eye(spec.rank)
        main = []
        for k in t.outcomes:
            scale = math.sqrt(max(nu[k, j], 0.0))
            for m, tp in enumerate(t_ops[k]):
                r = scale * tp @ b_inv @ dagger(m_j)
                main.append((k, m, r, r))
        if weights is None:
            wj = _default_weights(t_ops, nu, j)
        else:
            wj = {key: c for key, c in weights.items() if key[1] == j}
            _check_weights(wj, j, tol)
        all_weights.update(wj)
        positive = nu.positive_rows(j)
        default_target = positive[0] if positive else t.outcomes[0]
        residuals[j], extra[j] = _complete_residual(main, proj, t.outcomes, d1, dd, wj, j,
                                                    policy, default_target, tol)
    initial = Instrument(d, d1, b.outcomes, tuple(init_ops))
    return TwoStepDecomposition(t, initial, residuals, nu, all_weights, extra)


def n_step(t: Instrument, chain: Sequence[StochasticMatrix],
           tol: float = DEFAULT_TOL) -> AdaptiveSequence:
    """Iterate :func:`two_step` along a chain of postprocessings.

    ``chain[0]`` maps ``t``'s outcomes to ``B^{N-1}``, ``chain[1]`` maps those
    to ``B^{N-2}`` and so on; the resulting sequence has ``len(chain) + 1``
    steps, the first being the Luders instrument of the last POVM in the chain.
    """
    if not chain:
        return AdaptiveSequence.single(t)
    if sorted(chain[0].rows) != sorted(t.outcomes):
        raise ValueError("first chain link does not start from the instrument outcomes")
    for prev, nxt in zip(chain, chain[1:]):
        if sorted(nxt.rows) != sorted(prev.cols):
            raise ValueError("consecutive chain links have mismatched labels")
    dec = two_step(t, chain[0], tol=tol)
    head = n_step(dec.initial, chain[1:], tol)
    return AdaptiveSequence(head.steps + (dict(dec.residuals),))


def split_label(label: str) -> tuple[str, ...]:
    return tuple(label.split(","))


def product_factors(outcomes: Sequence[str]) -> list[tuple[str, ...]]:
    """Factor sets ``lambda_1, ..., lambda_N`` of product-shaped labels.

    Raises:
        ValueError: if the labels do not form a full cartesian product.
    """
    parts = [split_label(o) for o in outcomes]
    n = len(parts[0])
    if any(len(p) != n for p in parts):
        raise ValueError("outcome labels have different numbers of components")
    factors = [tuple(dict.fromkeys(p[i] for p in parts)) for i in range(n)]
    if len(set(parts)) != len(parts) or set(parts) != set(itertools.product(*factors)):
        raise ValueError("outcome labels do not form a full cartesian product")
    return factors


def marginal_matrix(rows: Sequence[str], length: int) -> StochasticMatrix:
    """0/1 matrix sending each label to its prefix with ``length`` components."""
    return StochasticMatrix.from_assignment(
        {r: join_labels(*split_label(r)[:length]) for r in rows})


def _prefix_chain(outcomes: Sequence[str], depth: int) -> list[StochasticMatrix]:
    chain = []
    rows = tuple(outcomes)
    for length in range(depth - 1, 0, -1):
        nu = marginal_matrix(rows, length)
        chain.append(nu)
        rows = nu.cols
    return chain


def product_outcomes(t: Instrument, tol: float = DEFAULT_TOL) -> AdaptiveSequence:
    """Sequence that reveals one component of a product outcome per step.

    Step ``k`` has outcomes ``"a1,...,ak"``; after the history ``p`` only the
    extensions ``p,ak`` carry nonzero operations, so each step effectively
    outputs one component.
    """
    factors = product_factors(t.outcomes)
    return n_step(t, _prefix_chain(t.outcomes, len(factors)), tol)


def _digits(i: int, base: int, width: int) -> tuple[str, ...]:
    out = []
    for _ in range(width):
        i, r = divmod(i, base)
        out.append(str(r))
    return tuple(reversed(out))


def min_ancilla(t: Instrument, tol: float = DEFAULT_TOL) -> AdaptiveSequence:
    """Sequence needing only a ``g``-dimensional ancilla, ``g = ceil(d_out / d_in)``.

    The minimal detailed instrument's ``r`` outcomes are indexed by base-``g``
    strings of length ``N - 1`` with ``N`` the smallest integer such that
    ``r <= g**(N - 1)``.  The first ``N - 1`` steps reveal one digit each on
    the input space; the last step applies one isometry per string.  The
    sequence's ``final_map`` takes the detailed labels back to ``t``'s outcomes.

    Raises:
        PreconditionError: if ``g == 1``.
    """
    from .quantum import detailed_instrument

    _require_valid(t, "instrument", tol)
    g = math.ceil(t.dim_out / t.dim_in)
    if g <= 1:
        raise PreconditionError(
            f"smallest-ancilla construction needs g > 1, got g = {g} "
            f"(dim_in = {t.dim_in}, dim_out = {t.dim_out})")
    detailed, back = detailed_instrument(t, tol)
    r = len(detailed.outcomes)
    if r <= 1:
        return AdaptiveSequence.single(t)
    n = 1
    while g ** (n - 1) < r:
        n += 1
    assignment = {label: join_labels(*_digits(i, g, n - 1))
                  for i, label in enumerate(detailed.outcomes)}
    first = StochasticMatrix.from_assignment(assignment)
    chain = [first] + _prefix_chain(first.cols, n - 1)
    asi = n_step(detailed, chain, tol)
    return AdaptiveSequence(asi.steps, final_map=back, final_outcomes=t.outcomes)


@dataclass(frozen=True)
class PovmDecomposition:
    """Luders instrument of ``B`` followed by conditional POVMs ``C^j``."""

    target: Povm
    initial: Instrument
    conditional: Mapping[str, Povm]
    postproc: StochasticMatrix

    def effective_povm(self) -> Povm:
        """``sum_j sqrt(B_j) C^j_k sqrt(B_j)`` per outcome ``k``."""
        effects = []
        for k in self.target.outcomes:
            e = np.zeros((self.target.dim, self.target.dim), dtype=complex)
            for j, c in self.conditional.items():
                for q in self.initial[j]:
                    e += dagger(q) @ c[k] @ q
            effects.append(e)
        return Povm(self.target.outcomes, tuple(effects))


def povm_two_step(a: Povm, nu: StochasticMatrix, tol: float = DEFAULT_TOL) -> PovmDecomposition:
    """``C^j_k = B_j^{-1/2} nu[k, j] A_k B_j^{-1/2}`` plus ``I - Pi_j`` on the first
    outcome ``k`` with ``nu[k, j] > 0`` (the first outcome if there is none)."""
    _require_valid(a, "POVM", tol)
    _require_valid(nu, "stochastic matrix", tol)
    b = postprocess_povm(a, nu)
    conditional = {}
    eye = np.eye(a.dim)
    for j, bj in b.items():
        b_inv = matrix_power(bj, -0.5, tol)
        proj = matrix_power(bj, 0.0, tol)
        positive = nu.positive_rows(j)
        k0 = positive[0] if positive else a.outcomes[0]
        effects = []
        for k, ak in a.items():
            c = nu[k, j] * b_inv @ ak @ b_inv
            if k == k0:
                c = c + eye - proj
            effects.append((c + dagger(c)) / 2)
        conditional[j] = Povm(a.outcomes, tuple(effects))
    return PovmDecomposition(a, luders(b, tol), conditional, nu)


def _history_key(key, first: bool) -> tuple[str, ...]:
    # the root label is also a valid outcome label, so only the first step may use it
    if first:
        if key not in ((), "", ROOT):
            raise ValueError(f"first step must be keyed by the empty history, got {key!r}")
        return ()
    if isinstance(key, str):
        return split_label(key)
    return tuple(str(x) for x in key)


def lift_history_dependence(raw: Sequence[Mapping]) -> AdaptiveSequence:
    """Turn history-dependent instrument tables into an adaptive sequence.

    ``raw[k]`` maps the full history ``(b_1, ..., b_k)`` (a tuple, or a
    comma-joined string; the empty history for the first step) to the
    instrument applied next.  In the result step ``k < N`` has outcomes
    ``b_1,...,b_k``; after history ``h`` every outcome not extending ``h``
    carries the zero operation.  The last step keeps the plain labels.
    """
    if not raw:
        raise ValueError("need at least one step")
    tables = [{_history_key(h, k == 0): ins for h, ins in step.items()}
              for k, step in enumerate(raw)]
    n = len(tables)
    factors = []
    for k, table in enumerate(tables, start=1):
        outs = {ins.outcomes for ins in table.values()}
        if len(outs) != 1:
            raise ValueError(f"instruments at step {k} have different outcome sets")
        factors.append(next(iter(outs)))
        dims = {(ins.dim_in, ins.dim_out) for ins in table.values()}
        if len(dims) != 1:
            raise ValueError(f"instruments at step {k} have different dimensions")
    for k in range(1, n):
        d_prev = next(iter(tables[k - 1].values())).dim_out
        d_next = next(iter(tables[k].values())).dim_in
        if d_prev != d_next:
            raise ValueError(f"dimension chain broken between steps {k} and {k + 1}")
    steps = []
    for k, table in enumerate(tables):
        histories = list(itertools.product(*factors[:k]))
        missing = [h for h in histories if h not in table]
        if missing:
            raise ValueError(f"step {k + 1} has no instrument for history {missing[0]}")
        last = k == n - 1
        out_labels = (list(factors[k]) if last else
                      [join_labels(*h) for h in itertools.product(*factors[: k + 1])])
        step = {}
        for h in histories:
            ins = table[h]
            if last:
                lifted = ins
            else:
                ops = {label: () for label in out_labels}
                for b, op in ins.items():
                    ops[join_labels(*h, b)] = op
                lifted = Instrument(ins.dim_in, ins.dim_out, tuple(ops), tuple(ops.values()))
            step[join_labels(*h) if h else ROOT] = lifted
        steps.append(step)
    return AdaptiveSequence(tuple(steps))
