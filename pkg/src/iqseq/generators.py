"""Built-in example objects: a three-outcome qutrit POVM, a 4 -> 2 dimensional
instrument whose output shrinks, and a four-outcome qubit POVM family."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import PAULI_X, PAULI_Y, PAULI_Z, bloch_operator
from .quantum import Instrument, Povm, StochasticMatrix

EXAMPLES = ("three-outcome", "shrinking", "qubit4", "qubit4-sic")

SIC_ANGLE = math.acos(1 / math.sqrt(3))
SIC_ETA = 1 / math.sqrt(3)


def _projector(dim: int, i: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[i, i] = 1.0
    return p


def three_outcome() -> Povm:
    """``A_i = (P_i + P_{i+1}) / 2`` on a qutrit, indices mod 3."""
    p = [_projector(3, i) for i in range(3)]
    return Povm(("0", "1", "2"), ((p[0] + p[1]) / 2, (p[1] + p[2]) / 2, (p[2] + p[0]) / 2))


def three_outcome_postproc() -> StochasticMatrix:
    """Merge outcomes 0 and 1."""
    return StochasticMatrix(("0", "1", "2"), ("0", "1"), [[1, 0], [1, 0], [0, 1]])


def _ketbra(i: int, j: int, d_out: int, d_in: int) -> np.ndarray:
    m = np.zeros((d_out, d_in), dtype=complex)
    m[i, j] = 1.0
    return m


def shrinking() -> Instrument:
    """Two-qubit to one-qubit instrument with three rank-one outcomes.

    ``K1 = |0><00| + |1><01|/sqrt2``, ``K2 = |0><01|/sqrt2 + |1><10|/sqrt2``,
    ``K3 = |0><10|/sqrt2 + |1><11|``.
    """
    s = 1 / math.sqrt(2)
    k1 = _ketbra(0, 0, 2, 4) + s * _ketbra(1, 1, 2, 4)
    k2 = s * _ketbra(0, 1, 2, 4) + s * _ketbra(1, 2, 2, 4)
    k3 = s * _ketbra(0, 2, 2, 4) + _ketbra(1, 3, 2, 4)
    return Instrument(4, 2, ("1", "2", "3"), ((k1,), (k2,), (k3,)))


def shrinking_postproc() -> StochasticMatrix:
    """Join outcomes 1 and 2."""
    return StochasticMatrix(("1", "2", "3"), ("0", "1"), [[1, 0], [1, 0], [0, 1]])


def check_qubit4_params(alpha: float, beta: float, eta: float) -> None:
    if not (0 < alpha < math.pi / 2 and 0 < beta < math.pi / 2):
        raise ValueError("alpha and beta must lie in (0, pi/2)")
    if not (0 < eta <= min(math.cos(alpha), math.cos(beta)) + 1e-15):
        raise ValueError("eta must lie in (0, min(cos alpha, cos beta)]")


def qubit4(alpha: float = SIC_ANGLE, beta: float = SIC_ANGLE, eta: float = SIC_ETA) -> Povm:
    """Four-outcome qubit POVM with outcomes ``"j,k"``.

    Outcomes with ``j = 0`` lie in the x-z plane tilted by ``beta`` towards
    ``-z``; those with ``j = 1`` in the y-z plane tilted by ``alpha`` towards
    ``+z``.  ``alpha = beta = arccos(1/sqrt3)``, ``eta = 1/sqrt3`` is a SIC.
    """
    check_qubit4_params(alpha, beta, eta)
    eye = np.eye(2)
    tb, ta = math.tan(beta), math.tan(alpha)
    effects = (
        (eye + eta * (-PAULI_X * tb - PAULI_Z)) / 4,
        (eye + eta * (PAULI_X * tb - PAULI_Z)) / 4,
        (eye + eta * (-PAULI_Y * ta + PAULI_Z)) / 4,
        (eye + eta * (PAULI_Y * ta + PAULI_Z)) / 4,
    )
    return Povm(("0,0", "0,1", "1,0", "1,1"), effects)


def qubit4_directions(alpha: float, beta: float) -> dict[str, np.ndarray]:
    """Unit Bloch directions of the four effects."""
    sb, cb, sa, ca = math.sin(beta), math.cos(beta), math.sin(alpha), math.cos(alpha)
    return {
        "0,0": np.array([-sb, 0.0, -cb]),
        "0,1": np.array([sb, 0.0, -cb]),
        "1,0": np.array([0.0, -sa, ca]),
        "1,1": np.array([0.0, sa, ca]),
    }


@dataclass(frozen=True)
class Qubit4ClosedForm:
    """Expected Kraus operators of the product-outcome sequence for :func:`qubit4`."""

    step1: dict[str, np.ndarray]
    step2: dict[str, np.ndarray]


def qubit4_closed_form(alpha: float = SIC_ANGLE, beta: float = SIC_ANGLE,
                       eta: float = SIC_ETA) -> Qubit4ClosedForm:
    """Pauli-basis closed forms of ``sqrt(B_j)`` and ``sqrt(A_jk) B_j^{-1/2}``.

    With ``f_pm = sqrt((1 -+ eta) / 2)``, ``g_{j,pm} = sqrt(1 -+ eta sec(theta_j)) / 2``
    (``theta_0 = beta``, ``theta_1 = alpha``) and ``h_pm = 1 / f_pm``:

        step 1:  F+ I - F- (b_j . sigma)
        step 2:  [G_{j,+} I - G_{j,-} (a_jk . sigma)] [H+ I - H- (b_j . sigma)]

    where ``a_jk`` are the unit effect directions and ``b_j`` is the unit
    vector along ``a_j0 + a_j1``.  The minus signs put the larger eigenvalue
    of each square root along the effect direction.
    """
    check_qubit4_params(alpha, beta, eta)
    eye = np.eye(2, dtype=complex)
    f_p, f_m = math.sqrt((1 - eta) / 2), math.sqrt((1 + eta) / 2)
    big_f = ((f_p + f_m) / 2, (f_p - f_m) / 2)
    h_p, h_m = 1 / f_p, 1 / f_m
    big_h = ((h_p + h_m) / 2, (h_p - h_m) / 2)
    theta = {"0": beta, "1": alpha}
    dirs = qubit4_directions(alpha, beta)
    step1, step2 = {}, {}
    for j in ("0", "1"):
        b = dirs[f"{j},0"] + dirs[f"{j},1"]
        b = b / np.linalg.norm(b)
        nb = bloch_operator(b)
        step1[j] = big_f[0] * eye - big_f[1] * nb
        sec = 1 / math.cos(theta[j])
        g_p, g_m = math.sqrt(1 - eta * sec) / 2, math.sqrt(1 + eta * sec) / 2
        big_g = ((g_p + g_m) / 2, (g_p - g_m) / 2)
        for k in ("0", "1"):
            na = bloch_operator(dirs[f"{j},{k}"])
            step2[f"{j},{k}"] = ((big_g[0] * eye - big_g[1] * na)
                                 @ (big_h[0] * eye - big_h[1] * nb))
    return Qubit4ClosedForm(step1, step2)


def gen_example(name: str, alpha: float | None = None, beta: float | None = None,
                eta: float | None = None):
    """Build a named example.

    ``three-outcome``, ``qubit4`` and ``qubit4-sic`` give a :class:`Povm`;
    ``shrinking`` gives an :class:`Instrument`.  Only ``qubit4`` takes
    parameters (defaulting to the SIC values).
    """
    if name == "three-outcome":
        return three_outcome()
    if name == "shrinking":
        return shrinking()
    if name == "qubit4-sic":
        return qubit4()
    if name == "qubit4":
        return qubit4(SIC_ANGLE if alpha is None else alpha,
                      SIC_ANGLE if beta is None else beta,
                      SIC_ETA if eta is None else eta)
    raise ValueError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")


def example_postproc(name: str) -> StochasticMatrix:
    """The outcome merge used with an example, where one is defined."""
    if name == "three-outcome":
        return three_outcome_postproc()
    if name == "shrinking":
        return shrinking_postproc()
    if name in ("qubit4", "qubit4-sic"):
        rows = ("0,0", "0,1", "1,0", "1,1")
        return StochasticMatrix(rows, ("0", "1"), [[1, 0], [1, 0], [0, 1], [0, 1]])
    raise ValueError(f"unknown example {name!r}")


__all__ = [
    "EXAMPLES", "SIC_ANGLE", "SIC_ETA", "Qubit4ClosedForm", "example_postproc", "gen_example",
    "qubit4", "qubit4_closed_form", "qubit4_directions", "shrinking", "shrinking_postproc",
    "three_outcome", "three_outcome_postproc",
]
