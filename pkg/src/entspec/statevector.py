"""Dense statevector simulation.

Conventions
-----------
Logical qubit 0 is the most significant bit of a basis index, so the bitstring
``"10"`` on two qubits is basis index 2.  A :class:`StateVector` also carries a
``qubit_order`` map from logical qubit to physical bit position of the
amplitude array.  Relabeling qubits only rewrites that map; amplitudes never
move.  Gates, probabilities and samples all speak logical indices.

States are treated as values: every operation returns a new
:class:`StateVector` and amplitude arrays are never written in place, so a
relabeled state can safely share its buffer with the original.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 26

ONE_QUBIT_KINDS = ("H", "X90", "RZ", "RY", "X", "Y", "Z")
TWO_QUBIT_KINDS = ("CNOT",)
PARAMETRIC_KINDS = ("RZ", "RY")

_S = 1 / np.sqrt(2)
_FIXED = {
    "H": np.array([[_S, _S], [_S, -_S]], dtype=complex),
    "X90": np.array([[_S, -1j * _S], [-1j * _S, _S]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Gate:
    """One gate of a circuit.

    ``qubits`` holds logical indices; for CNOT the order is (control, target).
    ``theta`` is the rotation angle in radians for RZ and RY, otherwise None.
    """

    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind in ONE_QUBIT_KINDS:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} acts on exactly one qubit, got {self.qubits}")
        elif self.kind in TWO_QUBIT_KINDS:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"CNOT needs two distinct qubits, got {self.qubits}")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in PARAMETRIC_KINDS:
            if self.theta is None:
                raise ValueError(f"{self.kind} needs an angle")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def duration(self) -> int:
        """Duration in units of one single-qubit gate time."""
        return 5 if self.kind == "CNOT" else 1

    def matrix(self) -> np.ndarray:
        """Unitary of a one-qubit gate (CNOT has no 2x2 matrix)."""
        if self.kind == "RZ":
            return rz_matrix(self.theta)
        if self.kind == "RY":
            return ry_matrix(self.theta)
        if self.kind == "CNOT":
            raise ValueError("CNOT has no one-qubit matrix")
        return _FIXED[self.kind]

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.theta is not None:
            out["theta"] = self.theta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Gate":
        return cls(data["kind"], tuple(data["qubits"]), data.get("theta"))


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def gate_matrix(kind: str, theta: float | None = None) -> np.ndarray:
    return Gate(kind, (0,), theta).matrix()


class StateVector:
    """Pure state of ``num_qubits`` qubits."""

    __slots__ = ("num_qubits", "amplitudes", "qubit_order")

    def __init__(self, amplitudes, qubit_order: Sequence[int] | None = None):
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        num_qubits = int(round(np.log2(amps.size))) if amps.size else 0
        if num_qubits < 1 or amps.size != 1 << num_qubits:
            raise ValueError(f"amplitude count {amps.size} is not a power of two >= 2")
        if num_qubits > MAX_QUBITS:
            raise ValueError(f"{num_qubits} qubits exceeds the {MAX_QUBITS}-qubit limit")
        if qubit_order is None:
            qubit_order = range(num_qubits)
        order = tuple(int(q) for q in qubit_order)
        if sorted(order) != list(range(num_qubits)):
            raise ValueError(f"qubit_order {order} is not a permutation of 0..{num_qubits - 1}")
        amps = amps.view()
        amps.flags.writeable = False
        self.num_qubits = num_qubits
        self.amplitudes = amps
        self.qubit_order = order

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits}, qubit_order={self.qubit_order})"

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """Amplitudes as a ``[2]*N`` array with axes in logical qubit order."""
        t = self.amplitudes.reshape((2,) * self.num_qubits)
        return np.transpose(t, self.qubit_order)

    def logical_amplitudes(self) -> np.ndarray:
        """Flat amplitude vector indexed by logical basis index."""
        return np.ascontiguousarray(self.tensor()).reshape(-1)

    def _with(self, amps: np.ndarray) -> "StateVector":
        return StateVector(amps, self.qubit_order)


def init_basis_state(num_qubits: int, bits: str) -> StateVector:
    """Computational basis state ``|bits>``."""
    if len(bits) != num_qubits:
        raise ValueError(f"bitstring {bits!r} does not have {num_qubits} bits")
    if set(bits) - {"0", "1"}:
        raise ValueError(f"bitstring {bits!r} contains non-binary characters")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps)


def from_logical(amplitudes) -> StateVector:
    """Wrap a flat amplitude vector given in logical order."""
    return StateVector(np.array(amplitudes, dtype=np.complex128))


def _check_qubits(state: StateVector, qubits: Sequence[int]):
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise ValueError(f"qubit index {q} out of range for {state.num_qubits} qubits")


def _apply_1q(amps: np.ndarray, n: int, axis: int, u: np.ndarray) -> np.ndarray:
    v = amps.reshape(1 << axis, 2, 1 << (n - axis - 1))
    if u[0, 1] == 0 and u[1, 0] == 0:
        out = np.empty_like(v)
        out[:, 0, :] = u[0, 0] * v[:, 0, :]
        out[:, 1, :] = u[1, 1] * v[:, 1, :]
    else:
        out = np.matmul(u, v)
    return out.reshape(-1)


def _apply_cnot(amps: np.ndarray, n: int, c: int, t: int) -> np.ndarray:
    out = amps.reshape((2,) * n).copy()
    idx = [slice(None)] * n
    idx[c] = 1
    idx = tuple(idx)
    sub_t = t if t < c else t - 1
    out[idx] = np.flip(out[idx], axis=sub_t)
    return out.reshape(-1)


def apply_matrix(state: StateVector, u: np.ndarray, qubit: int) -> StateVector:
    """Apply an arbitrary 2x2 matrix to one logical qubit."""
    _check_qubits(state, (qubit,))
    axis = state.qubit_order[qubit]
    return state._with(_apply_1q(state.amplitudes, state.num_qubits, axis, np.asarray(u, complex)))


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return ``gate`` applied to ``state``."""
    _check_qubits(state, gate.qubits)
    n = state.num_qubits
    if gate.kind == "CNOT":
        c, t = (state.qubit_order[q] for q in gate.qubits)
        return state._with(_apply_cnot(state.amplitudes, n, c, t))
    axis = state.qubit_order[gate.qubits[0]]
    return state._with(_apply_1q(state.amplitudes, n, axis, gate.matrix()))


def apply_gates(state: StateVector, gates) -> StateVector:
    for g in gates:
        state = apply_gate(state, g)
    return state


def relabel_qubits(state: StateVector, perm: Sequence[int]) -> StateVector:
    """Move the content of logical qubit ``i`` to logical label ``perm[i]``.

    Only the logical-to-physical map changes; the amplitude buffer is shared.
    """
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(state.num_qubits)):
        raise ValueError(f"{perm} is not a permutation of 0..{state.num_qubits - 1}")
    order = [0] * state.num_qubits
    for i, p in enumerate(perm):
        order[p] = state.qubit_order[i]
    return StateVector(state.amplitudes, order)


def probabilities(state: StateVector) -> np.ndarray:
    """Outcome probabilities indexed by logical basis index."""
    return np.abs(state.logical_amplitudes()) ** 2


def index_to_bits(indices, num_qubits: int) -> np.ndarray:
    """Basis indices -> ``(len, num_qubits)`` uint8 array, qubit 0 first."""
    indices = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(num_qubits - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts) & 1).astype(np.uint8)


def bits_to_strings(bits: np.ndarray) -> list[str]:
    return ["".join("1" if b else "0" for b in row) for row in bits]


def sample_indices(probs: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. basis indices from a probability vector."""
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    cdf = np.cumsum(probs)
    u = rng.random(count) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), probs.size - 1)


def sample_bits(state: StateVector, rng: np.random.Generator, count: int) -> np.ndarray:
    """Like :func:`sample` but returns a ``(count, N)`` uint8 array."""
    idx = sample_indices(probabilities(state), rng, count)
    return index_to_bits(idx, state.num_qubits)


def sample(state: StateVector, rng: np.random.Generator, count: int) -> list[str]:
    """Measure all qubits ``count`` times; bitstrings are in logical order."""
    return bits_to_strings(sample_bits(state, rng, count))


def product_state(factors: Sequence[np.ndarray], positions: Sequence[Sequence[int]], num_qubits: int) -> StateVector:
    """Tensor product of sub-states placed on the given logical qubits.

    ``factors[i]`` is a flat amplitude vector over ``len(positions[i])`` qubits,
    listed in the factor's own qubit order.  Every qubit must be covered once.
    """
    flat = [q for pos in positions for q in pos]
    if sorted(flat) != list(range(num_qubits)):
        raise ValueError("positions must cover every qubit exactly once")
    psi = np.ones(1, dtype=np.complex128)
    for f in factors:
        psi = np.multiply.outer(psi, np.asarray(f, dtype=np.complex128)).reshape(-1)
    t = psi.reshape((2,) * num_qubits)
    # axis a of t holds logical qubit flat[a]
    t = np.transpose(t, np.argsort(flat))
    return StateVector(np.ascontiguousarray(t).reshape(-1))
