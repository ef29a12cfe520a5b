"""JSON encoding of POVMs, instruments, sequences, stochastic matrices and states.

Complex entries are ``[re, im]`` pairs and matrices are nested row-major
lists.  Every object file carries ``format_version`` and ``kind``.  Reading
errors raise :class:`MalformedError` with a JSON pointer to the offending
node.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np

from .quantum import ROOT, AdaptiveSequence, Instrument, Povm, StochasticMatrix

FORMAT_VERSION = 1


class MalformedError(ValueError):
    def __init__(self, pointer: str, message: str):
        self.pointer = pointer or "/"
        super().__init__(f"{self.pointer}: {message}")


def _ptr(base: str, key) -> str:
    key = str(key).replace("~", "~0").replace("/", "~1")
    return f"{base}/{key}"


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data: Any, pointer: str = "") -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise MalformedError(pointer, "expected a nonempty list of rows")
    rows = []
    width = None
    for i, row in enumerate(data):
        p = _ptr(pointer, i)
        if not isinstance(row, list):
            raise MalformedError(p, "expected a list of [re, im] pairs")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MalformedError(p, f"row has {len(row)} entries, expected {width}")
        out = []
        for c, z in enumerate(row):
            q = _ptr(p, c)
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
                raise MalformedError(q, "expected a [re, im] pair of numbers")
            if not all(np.isfinite(x) for x in z):
                raise MalformedError(q, "non-finite entry")
            out.append(complex(z[0], z[1]))
        rows.append(out)
    if width == 0:
        raise MalformedError(pointer, "matrix has no columns")
    return np.array(rows, dtype=complex)


def _get(obj: dict, key: str, pointer: str, kind=None):
    if not isinstance(obj, dict):
        raise MalformedError(pointer, "expected an object")
    if key not in obj:
        raise MalformedError(_ptr(pointer, key), "missing field")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise MalformedError(_ptr(pointer, key), f"expected {getattr(kind, '__name__', kind)}")
    return value


def _labels(data: Any, pointer: str) -> tuple[str, ...]:
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
        raise MalformedError(pointer, "expected a list of label strings")
    if len(set(data)) != len(data):
        raise MalformedError(pointer, "duplicate labels")
    return tuple(data)


def _dim(obj: dict, key: str, pointer: str) -> int:
    value = _get(obj, key, pointer)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise MalformedError(_ptr(pointer, key), "expected a positive integer")
    return value


def header(kind: str) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": kind}


def _instrument_body(ins: Instrument) -> dict:
    return {"dim_in": ins.dim_in, "dim_out": ins.dim_out, "outcomes": list(ins.outcomes),
            "operations": [[matrix_to_json(k) for k in op] for op in ins.operations]}


def instrument_to_json(ins: Instrument) -> dict:
    return {**header("instrument"), **_instrument_body(ins)}


def instrument_from_json(data: Any, pointer: str = "") -> Instrument:
    d_in = _dim(data, "dim_in", pointer)
    d_out = _dim(data, "dim_out", pointer)
    outcomes = _labels(_get(data, "outcomes", pointer), _ptr(pointer, "outcomes"))
    ops_data = _get(data, "operations", pointer, list)
    p_ops = _ptr(pointer, "operations")
    if len(ops_data) != len(outcomes):
        raise MalformedError(p_ops, f"{len(ops_data)} operations for {len(outcomes)} outcomes")
    ops = []
    for i, op in enumerate(ops_data):
        p = _ptr(p_ops, i)
        if not isinstance(op, list):
            raise MalformedError(p, "expected a list of Kraus matrices")
        kraus = []
        for m, k in enumerate(op):
            q = _ptr(p, m)
            mat = matrix_from_json(k, q)
            if mat.shape != (d_out, d_in):
                raise MalformedError(q, f"Kraus matrix has shape {mat.shape}, expected {(d_out, d_in)}")
            kraus.append(mat)
        ops.append(tuple(kraus))
    return Instrument(d_in, d_out, outcomes, tuple(ops))


def povm_to_json(povm: Povm) -> dict:
    return {**header("povm"), "dim": povm.dim, "outcomes": list(povm.outcomes),
            "effects": [matrix_to_json(e) for e in povm.effects]}


def povm_from_json(data: Any, pointer: str = "") -> Povm:
    dim = _dim(data, "dim", pointer)
    outcomes = _labels(_get(data, "outcomes", pointer), _ptr(pointer, "outcomes"))
    eff = _get(data, "effects", pointer, list)
    p_eff = _ptr(pointer, "effects")
    if len(eff) != len(outcomes):
        raise MalformedError(p_eff, f"{len(eff)} effects for {len(outcomes)} outcomes")
    effects = []
    for i, e in enumerate(eff):
        m = matrix_from_json(e, _ptr(p_eff, i))
        if m.shape != (dim, dim):
            raise MalformedError(_ptr(p_eff, i), f"effect has shape {m.shape}, expected {(dim, dim)}")
        effects.append(m)
    if not effects:
        raise MalformedError(p_eff, "a POVM needs at least one effect")
    return Povm(outcomes, tuple(effects))


def stochastic_to_json(nu: StochasticMatrix) -> dict:
    return {**header("stochastic"), "rows": list(nu.rows), "cols": list(nu.cols),
            "matrix": nu.matrix.tolist()}


def stochastic_from_json(data: Any, pointer: str = "") -> StochasticMatrix:
    rows = _labels(_get(data, "rows", pointer), _ptr(pointer, "rows"))
    cols = _labels(_get(data, "cols", pointer), _ptr(pointer, "cols"))
    m = _get(data, "matrix", pointer, list)
    p = _ptr(pointer, "matrix")
    if len(m) != len(rows):
        raise MalformedError(p, f"{len(m)} rows, expected {len(rows)}")
    for i, row in enumerate(m):
        q = _ptr(p, i)
        if not isinstance(row, list) or len(row) != len(cols):
            raise MalformedError(q, f"expected a list of {len(cols)} numbers")
        for c, x in enumerate(row):
            if not isinstance(x, (int, float)) or isinstance(x, bool) or not np.isfinite(x):
                raise MalformedError(_ptr(q, c), "expected a finite number")
    return StochasticMatrix(rows, cols, np.array(m, dtype=float))


def asi_to_json(asi: AdaptiveSequence) -> dict:
    out = {**header("asi"), "dims": list(asi.dims),
           "outcome_sets": [list(o) for o in asi.outcome_sets],
           "steps": [{prev: _instrument_body(ins) for prev, ins in table.items()}
                     for table in asi.steps]}
    if asi.final_map is not None:
        out["final_map"] = dict(asi.final_map)
        out["final_outcomes"] = list(asi.final_outcomes)
    return out


def asi_from_json(data: Any, pointer: str = "") -> AdaptiveSequence:
    steps_data = _get(data, "steps", pointer, list)
    p_steps = _ptr(pointer, "steps")
    if not steps_data:
        raise MalformedError(p_steps, "need at least one step")
    steps = []
    for i, table in enumerate(steps_data):
        p = _ptr(p_steps, i)
        if not isinstance(table, dict) or not table:
            raise MalformedError(p, "expected a nonempty object keyed by previous outcome")
        steps.append({prev: instrument_from_json(body, _ptr(p, prev)) for prev, body in table.items()})
    if ROOT not in steps[0]:
        raise MalformedError(_ptr(p_steps, 0), f"first step must be keyed by {ROOT!r}")
    final_map = data.get("final_map")
    final_outcomes = data.get("final_outcomes")
    if final_map is not None:
        if not isinstance(final_map, dict) or not all(isinstance(v, str) for v in final_map.values()):
            raise MalformedError(_ptr(pointer, "final_map"), "expected an object of label strings")
        if final_outcomes is not None:
            final_outcomes = _labels(final_outcomes, _ptr(pointer, "final_outcomes"))
    asi = AdaptiveSequence(tuple(steps), final_map, final_outcomes)
    if "dims" in data and list(data["dims"]) != list(asi.dims):
        raise MalformedError(_ptr(pointer, "dims"), f"declared {data['dims']}, instruments give {list(asi.dims)}")
    return asi


def state_to_json(rho: np.ndarray) -> dict:
    return {**header("state"), "matrix": matrix_to_json(rho)}


def state_from_json(data: Any, pointer: str = "") -> np.ndarray:
    if isinstance(data, list):
        return matrix_from_json(data, pointer)
    return matrix_from_json(_get(data, "matrix", pointer), _ptr(pointer, "matrix"))


READERS = {
    "instrument": instrument_from_json,
    "povm": povm_from_json,
    "asi": asi_from_json,
    "stochastic": stochastic_from_json,
    "state": state_from_json,
}


def detect_kind(data: Any) -> str:
    """Kind of a decoded file: the explicit ``kind`` field or a structural guess."""
    if not isinstance(data, dict):
        raise MalformedError("", "expected a JSON object")
    kind = data.get("kind")
    if kind is not None:
        if kind == "decomposition":
            return kind
        if kind not in READERS:
            raise MalformedError("/kind", f"unknown kind {kind!r}")
        return kind
    for kind, key in (("asi", "steps"), ("instrument", "operations"), ("povm", "effects"),
                      ("stochastic", "rows"), ("state", "matrix")):
        if key in data:
            return kind
    raise MalformedError("", "cannot determine the object kind")


def from_json(data: Any):
    """Decode any supported object; a decomposition envelope yields its sequence."""
    kind = detect_kind(data)
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise MalformedError("/format_version", f"unsupported version {version!r}")
    if kind == "decomposition":
        return asi_from_json(_get(data, "asi", ""), "/asi")
    return READERS[kind](data)


def to_json(obj) -> dict:
    if isinstance(obj, Instrument):
        return instrument_to_json(obj)
    if isinstance(obj, Povm):
        return povm_to_json(obj)
    if isinstance(obj, AdaptiveSequence):
        return asi_to_json(obj)
    if isinstance(obj, StochasticMatrix):
        return stochastic_to_json(obj)
    if isinstance(obj, np.ndarray):
        return state_to_json(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(data: dict) -> str:
    # json emits the shortest repr that round-trips each float exactly
    return json.dumps(data, indent=1, allow_nan=False)


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
