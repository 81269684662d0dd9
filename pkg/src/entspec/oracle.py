"""Exact reference values: reduced density matrices, power traces, spectra and
ideal circuit output distributions."""

from __future__ import annotations

import numpy as np

from .circuits import Circuit
from .errors import ConvergenceError, ResourceLimitError
from .statevector import (
    StateVector, apply_gates, init_basis_state, probabilities, product_state, relabel_qubits,
)

EXACT_LIMIT = 26


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix of size ``2**k``."""

    __slots__ = ("entries", "dim")

    def __init__(self, entries, check: bool = True):
        m = np.array(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("a density matrix must be square")
        dim = m.shape[0]
        if dim & (dim - 1):
            raise ValueError(f"dimension {dim} is not a power of two")
        if check:
            if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
                raise ValueError("matrix is not Hermitian")
            if abs(np.trace(m) - 1) > 1e-12:
                raise ValueError("trace is not 1")
            if np.linalg.eigvalsh(m).min() < -1e-10:
                raise ValueError("matrix is not positive semidefinite")
        self.entries = m
        self.dim = dim

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def _amplitudes(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.logical_amplitudes()
    return np.asarray(state, dtype=complex).reshape(-1)


def partial_trace_B(state, k_A: int, k_B: int) -> DensityMatrix:
    """Reduced state of the first ``k_A`` qubits."""
    psi = _amplitudes(state)
    if psi.size != 1 << (k_A + k_B):
        raise ValueError(f"state has {psi.size} amplitudes, expected 2**{k_A + k_B}")
    m = psi.reshape(1 << k_A, 1 << k_B)
    return DensityMatrix(m @ m.conj().T, check=False)


def _entries(rho) -> np.ndarray:
    return rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def power_trace(rho, n: int) -> float:
    """Tr(rho^n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(np.trace(np.linalg.matrix_power(_entries(rho), n)).real)


def jacobi_eigenvalues_symmetric(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    scale = max(np.abs(a).max(), 1e-300)
    mask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps):
        off = np.sqrt(np.sum(a[mask] ** 2))
        if off < tol * scale or n == 1:
            return np.diag(a).copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-18 * scale:
                    continue
                tau = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = np.sign(tau) / (abs(tau) + np.sqrt(1 + tau * tau)) if tau != 0 else 1.0
                c = 1 / np.sqrt(1 + t * t)
                s = t * c
                rp, rq = a[p].copy(), a[q].copy()
                a[p], a[q] = c * rp - s * rq, s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
    raise ConvergenceError("Jacobi iteration did not converge", sweeps=max_sweeps, off_norm=off)


def eigenvalues(rho) -> np.ndarray:
    """Descending eigenvalues of a Hermitian matrix.

    A complex Hermitian ``A + iB`` is diagonalized through its real symmetric
    embedding ``[[A, -B], [B, A]]``, whose spectrum is each eigenvalue twice.
    """
    m = _entries(rho)
    if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
        raise ValueError("eigenvalues() needs a Hermitian matrix")
    a, b = m.real, m.imag
    big = np.block([[a, -b], [b, a]])
    vals = np.sort(jacobi_eigenvalues_symmetric(big))[::-1]
    return vals[::2].copy()


def exact_distribution(circuit: Circuit, prep_state=None) -> np.ndarray:
    """Ideal output distribution over all measured qubits, logical order.

    ``prep_state`` is one copy's state; omitted, the circuit's own prep gates
    are run.
    """
    if circuit.num_qubits > EXACT_LIMIT:
        raise ResourceLimitError(f"{circuit.num_qubits} qubits exceeds the {EXACT_LIMIT}-qubit limit")
    w = circuit.layout.width
    if prep_state is None:
        psi = apply_gates(init_basis_state(w, "0" * w), circuit.prep_gates).logical_amplitudes()
    else:
        psi = _amplitudes(prep_state)
    copies = circuit.layout.all_copies()
    factors, positions = [psi] * len(copies), list(copies)
    if circuit.ancilla is not None:
        factors.append(np.array([1, 0], dtype=complex))
        positions.append((circuit.ancilla,))
    state = product_state(factors, positions, circuit.num_qubits)
    state = relabel_qubits(state, circuit.relabeling)
    return probabilities(apply_gates(state, circuit.algo_gates))


def reduced_state_of_prep(prep_gates, k_A: int, k_B: int) -> DensityMatrix:
    """rho_A of the state the per-copy prep gates make from |0...0>."""
    w = k_A + k_B
    return partial_trace_B(apply_gates(init_basis_state(w, "0" * w), prep_gates), k_A, k_B)


__all__ = [
    "DensityMatrix", "EXACT_LIMIT", "eigenvalues", "exact_distribution",
    "jacobi_eigenvalues_symmetric", "partial_trace_B", "power_trace", "reduced_state_of_prep",
]
