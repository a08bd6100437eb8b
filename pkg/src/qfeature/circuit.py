"""Pure-state and density-matrix simulation of controlled single-qubit gates.

Conventions
-----------
* Qubit 0 is the least-significant bit of the basis index.
* A control with polarity ``True`` fires when the qubit reads 1; polarity
  ``False`` is an anti-control and fires when it reads 0.
* ``RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]`` and
  ``RZ(t) = diag(exp(-i t/2), exp(i t/2))``.

States are numpy arrays whose last axis has length ``2**n`` (pure) or whose
last two axes are ``2**n x 2**n`` (density).  Leading axes are treated as a
batch, so one call can push many states through the same gate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

RY, RZ, CX, UNITARY = "ry", "rz", "cx", "unitary"
GATE_KINDS = (RY, RZ, CX, UNITARY)

_X = np.array([[0, 1], [1, 0]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex
    )


@dataclass(frozen=True)
class GateOp:
    """A single-qubit gate on ``target``, conditioned on ``controls``.

    ``controls`` is a tuple of ``(qubit, polarity)`` pairs.  ``matrix`` is
    only used by the generic ``"unitary"`` kind.
    """

    kind: str
    target: int
    angle: float = 0.0
    controls: tuple[tuple[int, bool], ...] = ()
    matrix: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(
            self, "controls", tuple((int(q), bool(p)) for q, p in self.controls)
        )
        qubits = [q for q, _ in self.controls]
        if self.target in qubits:
            raise ValueError("target qubit cannot also be a control")
        if len(set(qubits)) != len(qubits):
            raise ValueError("control qubits must be distinct")
        if self.kind == CX and not self.controls:
            raise ValueError("cx gate needs at least one control")
        if self.kind == UNITARY:
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2, 2):
                raise ValueError("unitary gate needs a 2x2 matrix")
            if not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-10):
                raise ValueError("gate matrix is not unitary")
            object.__setattr__(self, "matrix", tuple(map(tuple, m)))

    def gate_matrix(self) -> np.ndarray:
        if self.kind == RY:
            return ry_matrix(self.angle)
        if self.kind == RZ:
            return rz_matrix(self.angle)
        if self.kind == CX:
            return _X
        return np.array(self.matrix, dtype=complex)

    def qubits(self) -> tuple[int, ...]:
        return (self.target,) + tuple(q for q, _ in self.controls)

    def inverse(self) -> "GateOp":
        if self.kind in (RY, RZ):
            return GateOp(self.kind, self.target, -self.angle, self.controls)
        if self.kind == CX:
            return self
        m = np.array(self.matrix, dtype=complex).conj().T
        return GateOp(UNITARY, self.target, controls=self.controls, matrix=m)

    def check(self, n_qubits: int) -> None:
        for q in self.qubits():
            if not 0 <= q < n_qubits:
                raise ValueError(
                    f"qubit index {q} out of range for {n_qubits}-qubit register"
                )


@dataclass(frozen=True)
class CircuitPlan:
    """An ordered gate list with labelled stage boundaries.

    ``stages`` holds ``(label, start, stop)`` slices into ``ops`` that
    partition it in order.
    """

    n_qubits: int
    ops: tuple[GateOp, ...]
    stages: tuple[tuple[str, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        for op in self.ops:
            op.check(self.n_qubits)
        if not self.stages:
            object.__setattr__(self, "stages", (("all", 0, len(self.ops)),))
        pos = 0
        for _, start, stop in self.stages:
            if start != pos or stop < start:
                raise ValueError("stage marks must partition the op list in order")
            pos = stop
        if pos != len(self.ops):
            raise ValueError("stage marks do not cover every op")

    def stage_ops(self):
        for label, start, stop in self.stages:
            yield label, self.ops[start:stop]

    @classmethod
    def concat(cls, n_qubits: int, parts: Sequence[tuple[str, Sequence[GateOp]]]):
        ops: list[GateOp] = []
        stages = []
        for label, part in parts:
            start = len(ops)
            ops.extend(part)
            stages.append((label, start, len(ops)))
        return cls(n_qubits, tuple(ops), tuple(stages))


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


@lru_cache(maxsize=4096)
def _pair_indices(n: int, target: int, controls: tuple) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n)
    mask = ((idx >> target) & 1) == 0
    for q, pol in controls:
        mask &= ((idx >> q) & 1) == int(pol)
    i0 = idx[mask]
    return i0, i0 | (1 << target)


def _apply_2x2(arr: np.ndarray, m: np.ndarray, i0, i1, axis: int) -> np.ndarray:
    out = arr.copy()
    a0 = np.take(arr, i0, axis=axis)
    a1 = np.take(arr, i1, axis=axis)
    sl0 = [slice(None)] * arr.ndim
    sl1 = [slice(None)] * arr.ndim
    sl0[axis] = i0
    sl1[axis] = i1
    out[tuple(sl0)] = m[0, 0] * a0 + m[0, 1] * a1
    out[tuple(sl1)] = m[1, 0] * a0 + m[1, 1] * a1
    return out


def zero_state(n_qubits: int) -> np.ndarray:
    s = np.zeros(1 << n_qubits, dtype=complex)
    s[0] = 1.0
    return s


def apply_gate_state(state: np.ndarray, gate: GateOp) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    n = n_qubits_of(state.shape[-1])
    gate.check(n)
    i0, i1 = _pair_indices(n, gate.target, gate.controls)
    return _apply_2x2(state, gate.gate_matrix(), i0, i1, axis=-1)


def apply_matrix_density(rho: np.ndarray, m: np.ndarray, target: int,
                         controls: tuple = ()) -> np.ndarray:
    """Return ``G rho G^dagger`` where ``G`` is ``m`` embedded on ``target``.

    ``m`` need not be unitary, which lets Kraus operators share this path.
    """
    n = n_qubits_of(rho.shape[-1])
    i0, i1 = _pair_indices(n, target, tuple(controls))
    out = _apply_2x2(rho, m, i0, i1, axis=-2)
    return _apply_2x2(out, m.conj(), i0, i1, axis=-1)


def apply_gate_density(rho: np.ndarray, gate: GateOp) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho.shape[-1])
    gate.check(n)
    return apply_matrix_density(rho, gate.gate_matrix(), gate.target, gate.controls)


def run_circuit(plan: CircuitPlan, initial: np.ndarray | None = None) -> np.ndarray:
    state = zero_state(plan.n_qubits) if initial is None else np.asarray(initial, dtype=complex)
    if state.shape[-1] != 1 << plan.n_qubits:
        raise ValueError("initial state does not match the plan's qubit count")
    for op in plan.ops:
        state = apply_gate_state(state, op)
    return state


def run_circuit_density(plan: CircuitPlan, rho: np.ndarray, after_stage=None) -> np.ndarray:
    """Evolve a density matrix through ``plan``.

    ``after_stage(rho, label)``, when given, is called at each stage boundary
    and its return value replaces ``rho``; it is the hook for noise.
    """
    rho = np.asarray(rho, dtype=complex)
    for label, ops in plan.stage_ops():
        for op in ops:
            rho = apply_gate_density(rho, op)
        if after_stage is not None:
            rho = after_stage(rho, label)
    return rho


def circuit_unitary(plan: CircuitPlan) -> np.ndarray:
    """Dense unitary of ``plan``; column ``j`` is the image of basis state ``j``."""
    dim = 1 << plan.n_qubits
    basis = np.eye(dim, dtype=complex)
    # rows of the batch are input basis states
    return run_circuit(plan, basis).T


def prob_all_zero(state: np.ndarray) -> np.ndarray | float:
    p = np.minimum(np.abs(np.asarray(state)[..., 0]) ** 2, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def prob_all_zero_density(rho: np.ndarray) -> np.ndarray | float:
    p = np.clip(np.real(np.asarray(rho)[..., 0, 0]), 0.0, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def state_to_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return state[..., :, None] * state[..., None, :].conj()
