"""Running circuits: noiseless evolution, noisy trajectories and shot sampling.

Randomness is split into three streams: gate noise, measurement and readout
flips.  With every noise probability zero the first and last streams are never
consumed, so noiseless and zero-noise runs produce identical shots.

Backends for noisy sampling:

``"trajectory"``
    One stochastic state per shot, seeded from ``(seed, state_index, shot)``.
``"mixture"``
    The exact noise-averaged distribution (see :mod:`entspec.mixture`) with
    shots drawn i.i.d. from it.  Same statistics, far cheaper.
"""

from __future__ import annotations

import numpy as np

from . import mixture
from .circuits import Circuit
from .errors import ResourceLimitError
from .noise import NoiseParams, apply_gate_noise, apply_readout_noise
from .statevector import (
    MAX_QUBITS, StateVector, apply_gate, apply_gates, index_to_bits, init_basis_state,
    probabilities, product_state, relabel_qubits, sample_indices,
)

BACKENDS = ("mixture", "trajectory")


def streams(seed: int, state_index: int = 0, shot_index: int | None = None):
    """(noise, measurement, readout) generators for one state or one shot."""
    key = (state_index,) if shot_index is None else (state_index, shot_index)
    ss = np.random.SeedSequence(seed, spawn_key=key)
    return tuple(np.random.default_rng(s) for s in ss.spawn(3))


def initial_state(circuit: Circuit, psi=None) -> StateVector:
    """All qubits in |0>, or copies of ``psi`` on every copy (before relabeling)."""
    n = circuit.num_qubits
    if n > MAX_QUBITS:
        raise ResourceLimitError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit statevector limit")
    if psi is None:
        return init_basis_state(n, "0" * n)
    copies = circuit.layout.all_copies()
    factors = [np.asarray(psi, dtype=complex).reshape(-1)] * len(copies)
    positions = list(copies)
    if circuit.ancilla is not None:
        factors = [np.array([1, 0], dtype=complex)] + factors
        positions = [(circuit.ancilla,)] + positions
    return product_state(factors, positions, n)


def copy_state(circuit: Circuit, psi=None) -> np.ndarray:
    """Noiseless single-copy state produced by the circuit's prep gates."""
    if psi is not None:
        return np.asarray(psi, dtype=complex).reshape(-1)
    w = circuit.layout.width
    return apply_gates(init_basis_state(w, "0" * w), circuit.prep_gates).logical_amplitudes()


def run_noiseless(circuit: Circuit, psi=None) -> StateVector:
    """Final state of the ideal circuit.

    Copies are prepared once and tensored together, which equals running the
    replicated prep gates.
    """
    state = initial_state(circuit, copy_state(circuit, psi))
    state = relabel_qubits(state, circuit.relabeling)
    return apply_gates(state, circuit.algo_gates)


def noiseless_distribution(circuit: Circuit, psi=None) -> np.ndarray:
    return probabilities(run_noiseless(circuit, psi))


def _noisy_gates(state, gates, noise, rng):
    for g in gates:
        state = apply_gate(state, g)
        state = apply_gate_noise(state, g, noise, rng)
    return state


def run_trajectory(circuit: Circuit, noise: NoiseParams, rng: np.random.Generator, psi=None) -> StateVector:
    """One noisy trajectory; prep and algorithm gates run in native form."""
    native = circuit.to_native()
    if psi is None:
        state = initial_state(native)
        state = _noisy_gates(state, native.prep_gates_global(), noise, rng)
    else:
        state = initial_state(native, psi)
    state = relabel_qubits(state, native.relabeling)
    return _noisy_gates(state, native.algo_gates, noise, rng)


def output_distribution(circuit: Circuit, noise: NoiseParams | None = None, psi=None) -> np.ndarray:
    """Pre-readout outcome distribution, exact for both ideal and noisy gates."""
    if noise is None or not noise.has_gate_noise():
        # large pairwise circuits contract faster than a full statevector
        if circuit.num_qubits > 20 and mixture._pairwise_ok(circuit):
            return mixture.noisy_distribution(circuit, None, copy_state(circuit, psi))
        return noiseless_distribution(circuit, psi)
    return mixture.noisy_distribution(circuit, noise, psi)


def sample_shots(circuit: Circuit, shots: int, seed: int, noise: NoiseParams | None = None,
                 backend: str = "mixture", psi=None, state_index: int = 0) -> np.ndarray:
    """Measure all qubits ``shots`` times; returns a ``(shots, N)`` uint8 array.

    Readout flips are applied after the ideal or noisy measurement, from their
    own stream.
    """
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if shots < 0:
        raise ValueError("shots must be non-negative")
    n = circuit.num_qubits
    _, meas_rng, ro_rng = streams(seed, state_index)
    gate_noise = noise is not None and noise.has_gate_noise()
    if gate_noise and backend == "trajectory":
        bits = np.empty((shots, n), dtype=np.uint8)
        for s in range(shots):
            noise_rng, shot_meas, _ = streams(seed, state_index, s)
            final = run_trajectory(circuit, noise, noise_rng, psi)
            bits[s] = index_to_bits(sample_indices(probabilities(final), shot_meas, 1), n)[0]
    else:
        probs = output_distribution(circuit, noise if gate_noise else None, psi)
        bits = index_to_bits(sample_indices(probs, meas_rng, shots), n)
    if noise is not None and noise.readout_flip_prob > 0:
        bits = apply_readout_noise(bits, noise.readout_flip_prob, ro_rng)
    return bits
