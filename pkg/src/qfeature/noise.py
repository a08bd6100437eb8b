"""Single-qubit Kraus noise channels and their action on density matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import apply_matrix_density, n_qubits_of

BIT_FLIP = "bit_flip"
PHASE_FLIP = "phase_flip"
BIT_PHASE_FLIP = "bit_phase_flip"
DEPOLARIZING = "depolarizing"
AMPLITUDE_DAMPING = "amplitude_damping"
PHASE_DAMPING = "phase_damping"
CHANNEL_KINDS = (
    BIT_FLIP,
    PHASE_FLIP,
    BIT_PHASE_FLIP,
    DEPOLARIZING,
    AMPLITUDE_DAMPING,
    PHASE_DAMPING,
)

# strengths 0.00, 0.11, ..., 0.99
NOISE_GRID = tuple(round(0.11 * k, 2) for k in range(10))

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_P0 = np.array([[1, 0], [0, 0]], dtype=complex)
_P1 = np.array([[0, 0], [0, 1]], dtype=complex)
_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|

COMPLETENESS_TOL = 1e-12


@dataclass(frozen=True)
class KrausChannel:
    kind: str
    strength: float
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.array(e, dtype=complex) for e in self.operators)
        for e in ops:
            if e.shape != (2, 2):
                raise ValueError("Kraus operators must be 2x2")
            e.setflags(write=False)
        object.__setattr__(self, "operators", ops)


@dataclass(frozen=True)
class ChannelReport:
    kind: str
    strength: float
    deviation: float
    passed: bool


def build_channel(kind: str, p: float) -> KrausChannel:
    """Kraus operators for one of the six supported noise types at strength ``p``.

    Amplitude damping keeps the ordering ``E0 = sqrt(p)|0><1|``,
    ``E1 = diag(1, sqrt(1-p))``; the induced map is the usual one.
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise strength must lie in [0, 1], got {p}")
    keep = np.sqrt(1.0 - p)
    if kind == BIT_FLIP:
        ops = (keep * _I, np.sqrt(p) * _X)
    elif kind == PHASE_FLIP:
        ops = (keep * _I, np.sqrt(p) * _Z)
    elif kind == BIT_PHASE_FLIP:
        ops = (keep * _I, np.sqrt(p) * _Y)
    elif kind == DEPOLARIZING:
        q = np.sqrt(p / 4.0)
        ops = (np.sqrt(1.0 - 0.75 * p) * _I, q * _Z, q * _X, q * _Y)
    elif kind == AMPLITUDE_DAMPING:
        ops = (np.sqrt(p) * _LOWER, np.diag([1.0, keep]).astype(complex))
    elif kind == PHASE_DAMPING:
        ops = (keep * _I, np.sqrt(p) * _P0, np.sqrt(p) * _P1)
    else:
        raise ValueError(f"unknown channel kind {kind!r}; expected one of {CHANNEL_KINDS}")
    return KrausChannel(kind, p, ops)


def validate_channel(channel: KrausChannel, tol: float = COMPLETENESS_TOL) -> ChannelReport:
    total = sum(e.conj().T @ e for e in channel.operators)
    deviation = float(np.max(np.abs(total - _I)))
    return ChannelReport(channel.kind, channel.strength, deviation, deviation < tol)


def apply_channel_qubit(rho: np.ndarray, channel: KrausChannel, qubit: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho.shape[-1])
    if not 0 <= qubit < n:
        raise ValueError(f"qubit index {qubit} out of range for {n}-qubit register")
    out = np.zeros_like(rho)
    for e in channel.operators:
        out += apply_matrix_density(rho, e, qubit)
    return out


def apply_channel_stage(rho: np.ndarray, channel: KrausChannel) -> np.ndarray:
    """Apply ``channel`` independently to every qubit, lowest index first."""
    rho = np.asarray(rho, dtype=complex)
    for q in range(n_qubits_of(rho.shape[-1])):
        rho = apply_channel_qubit(rho, channel, q)
    return rho
