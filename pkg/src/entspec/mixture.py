"""Exact noise-averaged output distributions.

The trajectory noise of :mod:`entspec.noise` is a stochastic unraveling of a
quantum channel.  This module evolves the channel itself, so a circuit's
noisy outcome distribution is computed once and shots are drawn from it.
Shots drawn this way have the same law as per-shot trajectories.

Two evaluation strategies:

* forward: one density matrix over all qubits (up to :data:`FORWARD_LIMIT`).
* pairwise: when the measurement gates split into blocks of at most two
  qubits (two-copy and Bell-basis circuits), each copy's density matrix and a
  per-block measurement tensor are contracted with ``einsum``.  Cost grows
  with the ring of copies, not with ``4**num_qubits``.

Density matrices are flat arrays of length ``4**N``: the row-major
vectorization of ``rho[ket..., bra...]``.  In that form ``rho -> U rho U^+``
is ``U`` on ket axis ``q`` and ``conj(U)`` on bra axis ``N+q``, which reuses the
statevector kernels.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .circuits import Circuit, invert
from .errors import ResourceLimitError
from .noise import PAULI_1Q, PAULI_2Q, NoiseParams, relaxation_prob
from .statevector import _apply_1q, _apply_cnot, gate_matrix

FORWARD_LIMIT = 12

_PAULI = {p: gate_matrix(p) for p in PAULI_1Q}


# --- channel kernels on vectorized density matrices ------------------------

def _unitary(vec, n, gate):
    if gate.kind == "CNOT":
        c, t = gate.qubits
        vec = _apply_cnot(vec, 2 * n, c, t)
        return _apply_cnot(vec, 2 * n, n + c, n + t)
    q = gate.qubits[0]
    u = gate.matrix()
    vec = _apply_1q(vec, 2 * n, q, u)
    return _apply_1q(vec, 2 * n, n + q, u.conj())


def _front(vec, n, qubits):
    """View with the ket and bra axes of ``qubits`` merged in front: (d, d, rest)."""
    t = vec.reshape((2,) * (2 * n))
    axes = list(qubits) + [n + q for q in qubits]
    t = np.moveaxis(t, axes, range(len(axes)))
    d = 1 << len(qubits)
    return t.reshape(d, d, -1), t.shape, axes


def _back(front, shape, axes):
    t = front.reshape(shape)
    return np.ascontiguousarray(np.moveaxis(t, range(len(axes)), axes)).reshape(-1)


def _mix_with_identity(vec, n, qubits, keep, spread, target=None):
    """``keep * rho + spread * sigma (x) Tr_qubits(rho)``.

    ``sigma`` is the identity, or diag(``target``) when given.
    """
    f, shape, axes = _front(vec, n, qubits)
    d = f.shape[0]
    tr = np.einsum("iir->r", f)
    out = keep * f
    diag = np.ones(d) if target is None else np.asarray(target, dtype=float)
    for i in range(d):
        if diag[i]:
            out[i, i] += spread * diag[i] * tr
    return _back(out, shape, axes)


def _apply_pauli(vec, n, word, qubits):
    for letter, q in zip(word, qubits):
        if letter != "I":
            u = _PAULI[letter]
            vec = _apply_1q(vec, 2 * n, q, u)
            vec = _apply_1q(vec, 2 * n, n + q, u.conj())
    return vec


def depolarize(vec, n, qubits, p):
    """(1-p) rho + p I/d (x) Tr_qubits rho."""
    if p == 0:
        return vec
    d = 1 << len(qubits)
    return _mix_with_identity(vec, n, qubits, 1 - p, p / d)


def pauli_channel(vec, n, qubits, probs, words):
    total = float(sum(probs))
    if total == 0:
        return vec
    if len(set(probs)) == 1:
        # uniform weights: sum over non-identity P of P rho P = d I (x) Tr rho - rho
        p = probs[0]
        d = 1 << len(qubits)
        return _mix_with_identity(vec, n, qubits, 1 - d * d * p, d * p)
    out = (1 - total) * vec
    for p, w in zip(probs, words):
        if p:
            out = out + p * _apply_pauli(vec, n, w, qubits)
    return out


def reset(vec, n, q, p_err, p_one):
    """With probability ``p_err`` replace qubit ``q`` by |0> or |1>."""
    if p_err == 0:
        return vec
    return _mix_with_identity(vec, n, (q,), 1 - p_err, p_err, target=(1 - p_one, p_one))


def apply_noisy_gate(vec, n, gate, params: NoiseParams | None):
    vec = _unitary(vec, n, gate)
    if params is None or gate.kind == "RZ":
        return vec
    if gate.kind == "CNOT":
        vec = depolarize(vec, n, gate.qubits, params.depol_cnot)
        vec = pauli_channel(vec, n, gate.qubits, params.pauli_cnot, PAULI_2Q)
    else:
        vec = depolarize(vec, n, gate.qubits, params.depol_1q)
        vec = pauli_channel(vec, n, gate.qubits, params.pauli_1q, PAULI_1Q)
    p_err = relaxation_prob(params.duration(gate), params.relax_rate)
    for q in gate.qubits:
        vec = reset(vec, n, q, p_err, params.reset_to_one_prob)
    return vec


def evolve(vec, n, gates, params: NoiseParams | None = None):
    for g in gates:
        vec = apply_noisy_gate(vec, n, g, params)
    return vec


def pure_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj()).reshape(-1)


def diagonal(vec, n) -> np.ndarray:
    d = 1 << n
    return np.clip(vec.reshape(d, d).diagonal().real, 0.0, None)


def readout_confusion(probs: np.ndarray, n: int, p: float) -> np.ndarray:
    """Outcome distribution after independent bit flips with probability ``p``."""
    if p == 0:
        return probs
    t = probs.reshape((2,) * n)
    m = np.array([[1 - p, p], [p, 1 - p]])
    for ax in range(n):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


# --- circuit-level evaluation ----------------------------------------------

def copy_density(circuit: Circuit, noise: NoiseParams | None, psi=None) -> np.ndarray:
    """Density matrix of one prepared copy (copy-local qubit order)."""
    w = circuit.layout.width
    if psi is not None:
        return pure_density(psi)
    vec = np.zeros(4 ** w, dtype=complex)
    vec[0] = 1.0
    return evolve(vec, w, circuit.prep_gates, noise)


def _placements(circuit: Circuit):
    """Logical labels of each copy's qubits after the relabeling."""
    sigma = circuit.relabeling
    return [tuple(sigma[q] for q in qubits) for qubits in circuit.layout.all_copies()]


def _prepared(circuit: Circuit, noise: NoiseParams | None):
    if noise is not None and noise.has_gate_noise():
        return circuit.to_native(), noise
    return circuit, None


def _components(circuit: Circuit):
    parent = list(range(circuit.num_qubits))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in circuit.algo_gates:
        if len(g.qubits) == 2:
            a, b = find(g.qubits[0]), find(g.qubits[1])
            parent[a] = b
    groups: dict[int, list[int]] = {}
    for q in range(circuit.num_qubits):
        groups.setdefault(find(q), []).append(q)
    return list(groups.values())


def forward_density(circuit: Circuit, noise: NoiseParams | None = None, psi=None) -> np.ndarray:
    """Final (pre-measurement) density matrix over logical labels."""
    n = circuit.num_qubits
    if n > FORWARD_LIMIT:
        raise ResourceLimitError(f"{n} qubits exceeds the density-matrix limit of {FORWARD_LIMIT}; "
                                 "use the trajectory backend")
    circuit, noise = _prepared(circuit, noise)
    rho_c = copy_density(circuit, noise, psi)
    w = circuit.layout.width
    factors, positions = [], []
    if circuit.ancilla is not None:
        factors.append(np.array([1, 0, 0, 0], dtype=complex))
        positions.append((circuit.ancilla,))
    for place in _placements(circuit):
        factors.append(rho_c)
        positions.append(place)
    big = np.ones(1, dtype=complex)
    axes = []
    for f, pos in zip(factors, positions):
        big = np.multiply.outer(big, f).reshape(-1)
        m = len(pos)
        axes += [("k", q) for q in pos] + [("b", q) for q in pos]
    t = big.reshape((2,) * (2 * n))
    order = [axes.index(("k", q)) for q in range(n)] + [axes.index(("b", q)) for q in range(n)]
    vec = np.ascontiguousarray(np.transpose(t, order)).reshape(-1)
    del w
    return evolve(vec, n, circuit.algo_gates, noise)


def measurement_tensor(gates, qubits, noise: NoiseParams | None, readout: float = 0.0) -> np.ndarray:
    """``T[y, s_1, ..., s_m]``: probability of outcome ``y`` on ``qubits`` when
    the block's gates act on the operator ``|k><b|`` with ``s_i = 2 k_i + b_i``."""
    m = len(qubits)
    local = {q: i for i, q in enumerate(qubits)}
    lg = [type(g)(g.kind, tuple(local[q] for q in g.qubits), g.theta) for g in gates]
    d = 1 << m
    out = np.zeros((d,) + (4,) * m)
    for s in product(range(4), repeat=m):
        k = sum((si >> 1) << (m - 1 - i) for i, si in enumerate(s))
        b = sum((si & 1) << (m - 1 - i) for i, si in enumerate(s))
        vec = np.zeros(d * d, dtype=complex)
        vec[k * d + b] = 1.0
        vec = evolve(vec, m, lg, noise)
        probs = vec.reshape(d, d).diagonal().real.copy()
        out[(slice(None),) + s] = readout_confusion(probs, m, readout)
    return out


def _pairwise_operands(circuit: Circuit, noise, psi, readout):
    circuit, noise = _prepared(circuit, noise)
    comps = _components(circuit)
    w = circuit.layout.width
    rho = copy_density(circuit, noise, psi).reshape((2,) * (2 * w))
    rho = np.transpose(rho, [a for j in range(w) for a in (j, w + j)]).reshape((4,) * w)
    operands = []
    if circuit.ancilla is not None:
        operands += [np.array([1.0, 0, 0, 0]), [circuit.ancilla]]
    for place in _placements(circuit):
        operands += [rho, list(place)]
    cache = {}
    blocks = []
    for comp in comps:
        gates = [g for g in circuit.algo_gates if g.qubits[0] in comp]
        key = tuple((g.kind, tuple(comp.index(q) for q in g.qubits), g.theta) for g in gates)
        if key not in cache:
            cache[key] = measurement_tensor(gates, comp, noise, readout)
        blocks.append((comp, cache[key]))
    return operands, blocks


def _pairwise_ok(circuit: Circuit) -> bool:
    return max(len(c) for c in _components(circuit)) <= 2


def pairwise_distribution(circuit: Circuit, noise=None, psi=None, readout: float = 0.0) -> np.ndarray:
    operands, blocks = _pairwise_operands(circuit, noise, psi, readout)
    n = circuit.num_qubits
    # einsum labels: qubit q -> q, block outcome i -> n + i
    out_labels = []
    for i, (comp, tensor) in enumerate(blocks):
        operands += [tensor, [n + i] + list(comp)]
        out_labels.append(n + i)
    if n + len(blocks) > 52:
        raise ResourceLimitError("too many qubits for the pairwise contraction")
    if 1 << n > 1 << 24:
        raise ResourceLimitError(f"a {n}-qubit outcome distribution is too large to enumerate")
    res = np.einsum(*operands, out_labels, optimize="greedy").real
    # reorder block outcome bits into logical qubit order
    bit_axes = [q for comp, _ in blocks for q in comp]
    res = res.reshape((2,) * n)
    res = np.transpose(res, np.argsort(bit_axes))
    return np.clip(res.reshape(-1), 0.0, None)


def pairwise_expectation(circuit: Circuit, signs_per_block, noise=None, psi=None, readout: float = 0.0) -> float:
    """Expectation of a product of per-block outcome signs.

    ``signs_per_block(comp)`` returns the +-1 (or weight) vector over that
    block's ``2**m`` outcomes.  No distribution over all qubits is enumerated.
    """
    operands, blocks = _pairwise_operands(circuit, noise, psi, readout)
    for comp, tensor in blocks:
        w = np.asarray(signs_per_block(comp), dtype=float)
        operands += [np.tensordot(w, tensor, axes=([0], [0])), list(comp)]
    if circuit.num_qubits > 52:
        raise ResourceLimitError("too many qubits for the pairwise contraction")
    return float(np.einsum(*operands, [], optimize="greedy").real)


def noisy_distribution(circuit: Circuit, noise: NoiseParams | None = None, psi=None,
                       readout: bool = False) -> np.ndarray:
    """Outcome distribution over all qubits (logical order) averaged over noise.

    Readout flips are folded in only when ``readout`` is true; samplers usually
    draw them separately.
    """
    p_ro = noise.readout_flip_prob if (readout and noise is not None) else 0.0
    if _pairwise_ok(circuit):
        return pairwise_distribution(circuit, noise, psi, p_ro)
    rho = forward_density(circuit, noise, psi)
    return readout_confusion(diagonal(rho, circuit.num_qubits), circuit.num_qubits, p_ro)


def parity_expectation(circuit: Circuit, noise: NoiseParams | None = None, psi=None,
                       readout: bool = False) -> float:
    """Exact mean of the pairwise Bell parity sign for pairwise circuits."""
    if not _pairwise_ok(circuit):
        raise ValueError("parity_expectation needs a circuit of disjoint pairs")
    pairs = {frozenset(p): p for p in circuit.pairing}
    p_ro = noise.readout_flip_prob if (readout and noise is not None) else 0.0

    def signs(comp):
        if len(comp) == 2 and frozenset(comp) in pairs:
            return [1, 1, 1, -1]
        return np.ones(1 << len(comp))

    return pairwise_expectation(circuit, signs, noise, psi, p_ro)


__all__ = [
    "FORWARD_LIMIT", "apply_noisy_gate", "copy_density", "depolarize", "evolve",
    "forward_density", "invert", "measurement_tensor", "noisy_distribution",
    "pairwise_distribution", "pairwise_expectation", "parity_expectation",
    "pauli_channel", "pure_density", "readout_confusion", "reset",
]
