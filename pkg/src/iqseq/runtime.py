"""Evaluate and simulate adaptive sequences of instruments."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_TOL, as_matrix, operator_norm
from .quantum import (
    ROOT,
    AdaptiveSequence,
    Instrument,
    apply,
    choi_distance,
    coarse_grain,
    induced_povm,
    minimal_kraus,
    validate,
)

# Relative eigenvalue cutoff when compressing Kraus paths; far below DEFAULT_TOL
# so that compression never shows up in recomposition distances.
COMPRESS_TOL = 1e-14
RENORMALIZE_TOL = 1e-9


def total_instrument(asi: AdaptiveSequence, check: bool = True) -> Instrument:
    """Instrument obtained by summing over all intermediate outcomes.

    Kraus paths are propagated step by step and compressed to a minimal
    representation after each step.  A ``final_map`` on the sequence is
    applied at the end.
    """
    if check:
        diags = validate(asi)
        if diags:
            raise ValueError("invalid adaptive sequence: " + "; ".join(map(str, diags)))
    d0 = asi.dims[0]
    paths: dict[str, list[np.ndarray]] = {ROOT: [np.eye(d0, dtype=complex)]}
    shape = (d0, d0)
    for table in asi.steps:
        first = next(iter(table.values()))
        shape = (first.dim_out, d0)
        nxt: dict[str, list[np.ndarray]] = {b: [] for b in first.outcomes}
        for prev, ops in paths.items():
            if not ops:
                continue
            ins = table[prev]
            for b, kraus in ins.items():
                nxt[b].extend(k @ p for k in kraus for p in ops)
        paths = {b: list(minimal_kraus(v, shape, COMPRESS_TOL)) for b, v in nxt.items()}
    ins = Instrument(d0, shape[0], tuple(paths), tuple(tuple(v) for v in paths.values()))
    if asi.final_map is not None:
        ins = coarse_grain(ins, asi.final_map, asi.final_outcomes)
        ins = Instrument(ins.dim_in, ins.dim_out, ins.outcomes,
                         tuple(minimal_kraus(op, ins.shape, COMPRESS_TOL) for op in ins.operations))
    return ins


@dataclass(frozen=True)
class Trajectory:
    outcomes: tuple[str, ...]
    state: np.ndarray
    probability: float


@dataclass(frozen=True)
class RunStatistics:
    shots: int
    seed: int
    counts: dict[str, int]
    intermediate: list[dict[str, int]] | None = None
    renormalized: bool = False

    @property
    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def to_dict(self) -> dict:
        out = {"shots": self.shots, "seed": self.seed, "counts": dict(self.counts),
               "frequencies": self.frequencies, "renormalized": self.renormalized}
        if self.intermediate is not None:
            out["intermediate"] = [dict(c) for c in self.intermediate]
        return out


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _branch(ins: Instrument, rho: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], bool]:
    outs = [apply(op, rho) if op else (None, 0.0) for op in ins.operations]
    probs = np.array([max(p, 0.0) for _, p in outs])
    total = float(probs.sum())
    if total <= 0.0:
        raise ValueError("all outcome probabilities vanish; the instrument is numerically invalid")
    flagged = abs(total - 1.0) > RENORMALIZE_TOL
    probs = probs / total
    states = [s / p if p > 0 else None for (s, p) in outs]
    return probs, states, flagged


def run(asi: AdaptiveSequence, rho0, shots: int, seed: int,
        record_intermediate: bool = False, keep: int = 10
        ) -> tuple[RunStatistics, list[Trajectory]]:
    """Sample ``shots`` trajectories of the sequence started in ``rho0``.

    Step ``k`` draws its outcome from the cumulative Born probabilities in
    outcome-label order using the ``k``-th uniform of the shot's row; rows
    come from a Philox generator keyed by ``seed``, so results depend only on
    ``(asi, rho0, shots, seed)``.  States and probabilities are computed once
    per distinct history.

    :returns: the statistics and the first ``keep`` trajectories.
    """
    rho0 = as_matrix(rho0)
    if rho0.shape != (asi.dims[0], asi.dims[0]):
        raise ValueError(f"state of shape {rho0.shape} does not match input dimension {asi.dims[0]}")
    if shots < 1:
        raise ValueError("need at least one shot")
    n = asi.n_steps
    u = make_rng(seed).random((shots, n))
    prefixes: list[tuple[str, ...]] = [()]
    states = [rho0]
    path_prob = [1.0]
    hist = np.zeros(shots, dtype=np.int64)
    flagged = False
    for k in range(n):
        new_prefixes, new_states, new_prob = [], [], []
        new_hist = np.empty(shots, dtype=np.int64)
        for h, prefix in enumerate(prefixes):
            mask = hist == h
            if not mask.any():
                continue
            ins = asi.instrument(k + 1, prefix[-1] if prefix else ROOT)
            probs, outs, bad = _branch(ins, states[h])
            flagged |= bad
            cum = np.cumsum(probs)
            # an exact cumulative tie may land on a zero-probability outcome;
            # move such draws to the next outcome that can occur
            positive = np.flatnonzero(probs > 0)
            next_pos = positive[np.minimum(np.searchsorted(positive, np.arange(len(probs))),
                                           len(positive) - 1)]
            choice = next_pos[np.minimum(np.searchsorted(cum, u[mask, k], side="right"),
                                         len(probs) - 1)]
            lookup = np.full(len(probs), -1, dtype=np.int64)
            for c in np.unique(choice):
                lookup[c] = len(new_prefixes)
                new_prefixes.append(prefix + (ins.outcomes[c],))
                new_states.append(outs[c])
                new_prob.append(path_prob[h] * float(probs[c]))
            new_hist[mask] = lookup[choice]
        prefixes, states, path_prob, hist = new_prefixes, new_states, new_prob, new_hist

    def final_label(prefix: tuple[str, ...]) -> str:
        return asi.final_map[prefix[-1]] if asi.final_map is not None else prefix[-1]

    labels = asi.final_outcomes if asi.final_map is not None else asi.outcome_sets[-1]
    per_prefix = np.bincount(hist, minlength=len(prefixes))
    counts = {label: 0 for label in labels}
    for p, c in zip(prefixes, per_prefix):
        counts[final_label(p)] += int(c)
    intermediate = None
    if record_intermediate:
        intermediate = []
        for k in range(n):
            step_counts = Counter()
            for p, c in zip(prefixes, per_prefix):
                step_counts[p[k]] += int(c)
            intermediate.append({label: step_counts.get(label, 0) for label in asi.outcome_sets[k]})
    stats = RunStatistics(shots, int(seed), counts, intermediate, flagged)
    trajectories = [Trajectory(prefixes[h], states[h], path_prob[h]) for h in hist[:keep]]
    return stats, trajectories


@dataclass(frozen=True)
class EquivalenceReport:
    distances: dict[str, float]
    povm_distance: float
    channel_distance: float
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        ok = (max(self.distances.values(), default=0.0) < self.tol
              and self.povm_distance < self.tol and self.channel_distance < self.tol)
        object.__setattr__(self, "passed", bool(ok))

    @property
    def max_distance(self) -> float:
        return max(self.distances.values(), default=0.0)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "max_distance": self.max_distance,
                "distances": self.distances, "povm_distance": self.povm_distance,
                "channel_distance": self.channel_distance}


def verify_equivalence(asi: AdaptiveSequence, target: Instrument,
                       tol: float = DEFAULT_TOL) -> EquivalenceReport:
    """Compare the sequence's total instrument with ``target``.

    Reports the per-outcome Choi distance, the largest operator-norm gap
    between induced POVM effects, and the Choi distance of induced channels.
    """
    total = total_instrument(asi)
    if total.shape != target.shape:
        raise ValueError(f"dimension mismatch: sequence maps {total.dim_in} -> {total.dim_out}, "
                         f"target maps {target.dim_in} -> {target.dim_out}")
    if set(total.outcomes) != set(target.outcomes):
        raise ValueError("final outcome sets differ")
    distances = {k: choi_distance(total[k], target[k], target.shape) for k in target.outcomes}
    pa, pb = induced_povm(total), induced_povm(target)
    povm_gap = max(operator_norm(pa[k] - pb[k]) for k in target.outcomes)
    channel_gap = choi_distance(total.all_kraus(), target.all_kraus(), target.shape)
    return EquivalenceReport(distances, povm_gap, channel_gap, tol)
