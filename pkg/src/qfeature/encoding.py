"""Multiple-qubit amplitude encoding: 2**n - 1 feature angles on n qubits.

Qubit ``k`` (0-based) receives ``2**k`` RY rotations, one for every
control/anti-control pattern over qubits ``0 .. k-1``.  Patterns are
enumerated as descending bitstrings read from qubit 0 (leftmost) upwards, so
on qubit 2 the order is 11, 10, 01, 00 where ``1`` means control and ``0``
anti-control.  Features are consumed in that order.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .circuit import RY, CircuitPlan, GateOp

ANGLE_TOL = 1e-12


def qubits_for_features(m: int) -> int:
    """Smallest ``n`` with ``2**n - 1 >= m``."""
    if m < 1:
        raise ValueError("need at least one feature")
    return int(m).bit_length()


def control_patterns(k: int) -> list[tuple[tuple[int, bool], ...]]:
    """Control tuples for qubit ``k`` in assignment order."""
    patterns = []
    for bits in range((1 << k) - 1, -1, -1):
        # bit (k-1-j) of ``bits`` is the polarity of qubit j
        patterns.append(tuple((j, bool((bits >> (k - 1 - j)) & 1)) for j in range(k)))
    return patterns


def encoding_assignments(n_qubits: int) -> list[tuple[int, tuple[tuple[int, bool], ...]]]:
    """``(target, controls)`` for each feature slot, in feature order."""
    return [(k, pat) for k in range(n_qubits) for pat in control_patterns(k)]


def pad_angles(angles: Sequence[float], n_qubits: int | None = None) -> np.ndarray:
    a = np.asarray(angles, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("angle vector is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError("angles must be finite")
    if np.any(a < -ANGLE_TOL) or np.any(a > np.pi + ANGLE_TOL):
        raise ValueError("angles must lie in [0, pi]")
    n = qubits_for_features(a.size) if n_qubits is None else n_qubits
    slots = (1 << n) - 1
    if a.size > slots:
        raise ValueError(f"{a.size} angles do not fit on {n} qubits ({slots} slots)")
    return np.concatenate([a, np.zeros(slots - a.size)])


def encoding_gates(angles: Sequence[float], n_qubits: int | None = None) -> list[GateOp]:
    a = pad_angles(angles, n_qubits)
    n = qubits_for_features(a.size)
    return [
        GateOp(RY, target, float(theta), controls)
        for theta, (target, controls) in zip(a, encoding_assignments(n))
    ]


def build_U(angles: Sequence[float], n_qubits: int | None = None) -> CircuitPlan:
    gates = encoding_gates(angles, n_qubits)
    n = qubits_for_features(len(gates))
    return CircuitPlan(n, tuple(gates), (("U", 0, len(gates)),))


def build_U_dagger(angles: Sequence[float], n_qubits: int | None = None) -> CircuitPlan:
    gates = [g.inverse() for g in reversed(encoding_gates(angles, n_qubits))]
    n = qubits_for_features(len(gates))
    return CircuitPlan(n, tuple(gates), (("U_dagger", 0, len(gates)),))


def encoding_gate_count(n_qubits: int) -> int:
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    count = (1 << n_qubits) - 1
    emitted = len(build_U(np.zeros(count)).ops)
    if emitted != count:
        raise AssertionError(f"encoder emitted {emitted} gates, expected {count}")
    return count
