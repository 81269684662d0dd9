"""Stochastic gate and readout noise.

Each call samples one jump of a quantum trajectory, so a state stays pure;
averaging many trajectories reproduces the channel.  Per noisy gate the events
are drawn in the fixed order :data:`EVENT_ORDER`.

Native gates: X90 and CNOT carry noise, RZ is ideal.  Any other one-qubit kind
reaching :func:`apply_gate_noise` uncompiled is charged like an X90.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .statevector import Gate, StateVector, apply_matrix, gate_matrix

EVENT_ORDER = ("depolarizing", "pauli", "relaxation")

PAULI_1Q = ("X", "Y", "Z")
# two-qubit words, first letter on the CNOT control
PAULI_2Q = tuple(a + b for a, b in itertools.product("IXYZ", repeat=2) if a + b != "II")

_PAULI_MATS = {p: gate_matrix(p) for p in PAULI_1Q}
_PAULI_MATS["I"] = np.eye(2, dtype=complex)


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name}={p} is not a probability")


@dataclass(frozen=True)
class NoiseParams:
    """Noise parameter bundle; defaults are the reference hardware values.

    ``depol_1q`` and ``depol_cnot`` are probabilities of replacing the touched
    qubits by the maximally mixed state.  ``pauli_1q`` lists X, Y, Z
    probabilities; ``pauli_cnot`` lists the 15 words of :data:`PAULI_2Q`.
    ``relax_rate`` is per single-qubit gate time.
    """

    readout_flip_prob: float = 0.02
    relax_rate: float = 0.005
    reset_to_one_prob: float = 1e-7
    depol_1q: float = 0.001
    depol_cnot: float = 0.005
    pauli_1q: tuple[float, ...] = field(default=(0.001,) * 3)
    pauli_cnot: tuple[float, ...] = field(default=(0.005,) * 15)
    cnot_duration: float = 5
    x90_duration: float = 1

    def __post_init__(self):
        object.__setattr__(self, "pauli_1q", tuple(float(p) for p in self.pauli_1q))
        object.__setattr__(self, "pauli_cnot", tuple(float(p) for p in self.pauli_cnot))
        if len(self.pauli_1q) != 3:
            raise ValueError("pauli_1q needs 3 probabilities (X, Y, Z)")
        if len(self.pauli_cnot) != 15:
            raise ValueError("pauli_cnot needs 15 probabilities")
        for name in ("readout_flip_prob", "reset_to_one_prob", "depol_1q", "depol_cnot"):
            _check_prob(name, getattr(self, name))
        for p in self.pauli_1q + self.pauli_cnot:
            _check_prob("pauli probability", p)
        if sum(self.pauli_1q) > 1 + 1e-12 or sum(self.pauli_cnot) > 1 + 1e-12:
            raise ValueError("Pauli channel probabilities sum above 1")
        if self.relax_rate < 0 or self.cnot_duration < 0 or self.x90_duration < 0:
            raise ValueError("rates and durations must be non-negative")

    @property
    def reset_to_zero_prob(self) -> float:
        return 1.0 - self.reset_to_one_prob

    @classmethod
    def zero(cls) -> "NoiseParams":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, (0.0,) * 3, (0.0,) * 15)

    def gates_only(self) -> "NoiseParams":
        """Same gate errors with readout and relaxation switched off."""
        return replace(self, readout_flip_prob=0.0, relax_rate=0.0)

    def has_gate_noise(self) -> bool:
        return bool(self.relax_rate or self.depol_1q or self.depol_cnot
                    or any(self.pauli_1q) or any(self.pauli_cnot))

    def is_trivial(self) -> bool:
        return not self.has_gate_noise() and self.readout_flip_prob == 0

    def duration(self, gate: Gate) -> float:
        if gate.kind == "RZ":
            return 0.0
        return self.cnot_duration if gate.kind == "CNOT" else self.x90_duration

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pauli_1q"] = list(self.pauli_1q)
        d["pauli_cnot"] = list(self.pauli_cnot)
        return d

    @classmethod
    def from_dict(cls, data: dict | None) -> "NoiseParams":
        """Build from a (possibly partial) mapping; missing keys keep defaults."""
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown noise parameters: {sorted(unknown)}")
        for key in ("pauli_1q", "pauli_cnot"):
            if key in data and isinstance(data[key], (int, float)):
                data[key] = (float(data[key]),) * (3 if key == "pauli_1q" else 15)
        return cls(**data)


def relaxation_prob(duration: float, r: float) -> float:
    """Probability that a relaxation event hits a qubit during ``duration``."""
    if duration < 0 or r < 0:
        raise ValueError("duration and rate must be non-negative")
    if math.isinf(r):
        return 1.0 if duration > 0 else 0.0
    return -math.expm1(-duration * r)


def _apply_pauli_word(state: StateVector, word: str, qubits) -> StateVector:
    for letter, q in zip(word, qubits):
        if letter != "I":
            state = apply_matrix(state, _PAULI_MATS[letter], q)
    return state


def _draw(rng: np.random.Generator, probs) -> int | None:
    """Index of the event drawn from disjoint probabilities, or None."""
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return None


def reset_qubit(state: StateVector, qubit: int, target: int, rng: np.random.Generator) -> StateVector:
    """Projectively measure ``qubit`` and re-prepare it in ``|target>``."""
    t = state.tensor()
    p1 = float(np.sum(np.abs(np.take(t, 1, axis=qubit)) ** 2))
    outcome = 1 if rng.random() < p1 else 0
    keep = p1 if outcome else 1.0 - p1
    proj = np.zeros((2, 2), dtype=complex)
    proj[target, outcome] = 1.0 / math.sqrt(keep)
    return apply_matrix(state, proj, qubit)


def apply_gate_noise(state: StateVector, gate: Gate, params: NoiseParams, rng: np.random.Generator) -> StateVector:
    """Sample the noise that follows one (already applied) gate.

    For a CNOT the depolarizing and Pauli events are single two-qubit draws;
    relaxation is drawn per touched qubit.  Zero probabilities consume no
    random numbers.
    """
    if gate.kind == "RZ":
        return state
    qubits = gate.qubits
    if gate.kind == "CNOT":
        depol, pauli, words = params.depol_cnot, params.pauli_cnot, PAULI_2Q
    else:
        depol, pauli, words = params.depol_1q, params.pauli_1q, PAULI_1Q
    if depol > 0 and rng.random() < depol:
        # uniform over all Paulis including identity: full depolarization
        letters = rng.integers(0, 4, size=len(qubits))
        state = _apply_pauli_word(state, "".join("IXYZ"[i] for i in letters), qubits)
    if any(pauli):
        i = _draw(rng, pauli)
        if i is not None:
            state = _apply_pauli_word(state, words[i], qubits)
    p_err = relaxation_prob(params.duration(gate), params.relax_rate)
    if p_err > 0:
        for q in qubits:
            if rng.random() < p_err:
                target = 1 if rng.random() < params.reset_to_one_prob else 0
                state = reset_qubit(state, q, target, rng)
    return state


def apply_readout_noise(bits, p: float, rng: np.random.Generator):
    """Flip each measured bit independently with probability ``p``.

    Accepts a bitstring or a uint8 array of any shape; returns the same type.
    """
    _check_prob("p", p)
    if isinstance(bits, str):
        arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
        flipped = apply_readout_noise(arr, p, rng)
        return "".join("1" if b else "0" for b in flipped)
    arr = np.asarray(bits, dtype=np.uint8)
    if p == 0:
        return arr.copy()
    if p == 1:
        return arr ^ 1
    return arr ^ (rng.random(arr.shape) < p).astype(np.uint8)
