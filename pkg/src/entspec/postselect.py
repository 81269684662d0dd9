"""Discarding outcomes that the ideal circuits can never produce.

Controlled permutation
    With the ancilla read as 1 the amplitude of copy words ``alpha`` is
    proportional to ``psi_n(alpha) - psi_n(alpha_*)``, where ``alpha_*`` is
    ``alpha`` with the A bits of copy ``c+1`` moved to copy ``c``.  Since
    ``psi_n`` is symmetric under swapping whole copies, the amplitude vanishes
    when both lists of copy words agree as multisets.

Two-copy
    Let ``Q`` be the register-1 relabeling viewed as a bit permutation and ``T``
    a whole-copy permutation with ``Q T Q = T`` (a reflection of the copy ring,
    of which there are ``n``).  When ``alpha . beta`` is odd, ``T Q alpha =
    alpha``, ``T beta = beta`` and ``Q beta = beta`` the outcome amplitude pairs
    up with itself under a sign flip and vanishes.

Both tests are sufficient, not necessary: every discarded outcome has zero
ideal probability, but not every zero-probability outcome is discarded.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .circuits import Circuit, Layout


@dataclass(frozen=True)
class OutcomeJST:
    """Ancilla bit and one ``(A bits, B bits)`` word per copy."""

    ancilla: int
    copies: tuple[tuple[int, ...], ...]

    @classmethod
    def from_bits(cls, bits, layout: Layout) -> "OutcomeJST":
        bits = _as_bits(bits, layout.num_qubits)
        copies = tuple(tuple(int(bits[q]) for q in layout.copy_qubits(0, c)) for c in range(layout.n))
        return cls(int(bits[0]), copies)


@dataclass(frozen=True)
class OutcomeTwoCopy:
    """Register-1 bits ``alpha`` and register-2 bits ``beta`` (layout order)."""

    alpha: tuple[int, ...]
    beta: tuple[int, ...]

    @classmethod
    def from_bits(cls, bits, layout: Layout) -> "OutcomeTwoCopy":
        bits = _as_bits(bits, layout.num_qubits)
        m = layout.register_size
        return cls(tuple(int(b) for b in bits[:m]), tuple(int(b) for b in bits[m:2 * m]))


def _as_bits(bits, length: int) -> np.ndarray:
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if arr.size != length:
        raise ValueError(f"outcome has {arr.size} bits, expected {length}")
    return arr


def _layout(n: int, k: int, k_b: int | None, registers: int, ancilla: bool) -> Layout:
    return Layout(n, k, k if k_b is None else k_b, registers=registers, ancilla=ancilla)


# --- controlled permutation -------------------------------------------------

def shift_A_words(copies, k: int) -> list[tuple[int, ...]]:
    """Copy words with the A bits of copy ``c+1`` placed in copy ``c``."""
    n = len(copies)
    return [tuple(copies[(c + 1) % n][:k]) + tuple(copies[c][k:]) for c in range(n)]


def jst_accept(outcome: OutcomeJST, n: int, k: int) -> bool:
    """False only for outcomes the ideal circuit cannot produce."""
    if len(outcome.copies) != n or any(len(w) < k for w in outcome.copies):
        raise ValueError("outcome does not match n and k")
    if len({len(w) for w in outcome.copies}) != 1:
        raise ValueError("copy words differ in length")
    if outcome.ancilla == 0:
        return True

    def key(word):
        return int("".join(map(str, word)), 2) if word else 0

    mine = sorted(key(w) for w in outcome.copies)
    shifted = sorted(key(w) for w in shift_A_words(outcome.copies, k))
    return mine != shifted


def jst_accept_brute(outcome: OutcomeJST, n: int, k: int) -> bool:
    """Same test by trying every copy permutation."""
    if outcome.ancilla == 0:
        return True
    shifted = shift_A_words(outcome.copies, k)
    for perm in permutations(range(n)):
        if all(shifted[c] == outcome.copies[perm[c]] for c in range(n)):
            return False
    return True


def jst_accept_batch(bits: np.ndarray, layout: Layout) -> np.ndarray:
    """Vectorized :func:`jst_accept` over the rows of a ``(M, N)`` array."""
    bits = np.asarray(bits, dtype=np.uint8)
    n, k, w = layout.n, layout.k_a, layout.width
    # word of copy c as an integer, A bits most significant
    sites = np.array([[layout.site(0, c, j) for j in range(w)] for c in range(n)])
    weights = 1 << np.arange(w - 1, -1, -1, dtype=np.int64)
    a_w, b_w = weights[:k], weights[k:]
    a = bits[:, sites[:, :k]].astype(np.int64) @ a_w
    b = bits[:, sites[:, k:]].astype(np.int64) @ b_w if w > k else np.zeros_like(a)
    words = np.sort(a + b, axis=1)
    shifted = np.sort(np.roll(a, -1, axis=1) + b, axis=1)
    same = np.all(words == shifted, axis=1)
    return (bits[:, 0] == 0) | ~same


# --- two-copy ----------------------------------------------------------------

def candidate_permutations(n: int) -> list[tuple[int, ...]]:
    """Copy permutations ``tau`` with ``pi^-1 tau = tau pi`` for the shift ``pi``.

    The relation reads ``tau(c+1) = tau(c) - 1``, so fixing ``tau(0)`` fixes the
    rest: the ``n`` reflections of the copy ring.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    out = []
    for start in range(n):
        tau = [start]
        for _ in range(n - 1):
            tau.append((tau[-1] - 1) % n)
        out.append(tuple(tau))
    return out


def commutes_with_shift(tau, n: int) -> bool:
    """Check ``pi^-1 tau = tau pi`` by composing maps of copy indices."""
    return all((tau[c] - 1) % n == tau[(c + 1) % n] for c in range(n))


def _register_maps(layout: Layout, relabeling=None):
    """Bit-position maps on one register: Q from the relabeling, T per tau."""
    m = layout.register_size
    if relabeling is None:
        from .circuits import cyclic_permutation_A
        relabeling = cyclic_permutation_A(layout.n, layout.k_a, layout)
    q = np.array(relabeling[:m])
    if q.min() < 0 or q.max() >= m:
        raise ValueError("relabeling leaves register 1")
    return q


def _copy_map(layout: Layout, tau) -> np.ndarray:
    t = np.empty(layout.register_size, dtype=np.int64)
    for c in range(layout.n):
        for j in range(layout.width):
            t[layout.site(0, c, j)] = layout.site(0, tau[c], j)
    return t


def two_copy_accept(outcome: OutcomeTwoCopy, n: int, k: int, k_b: int | None = None,
                    relabeling=None) -> bool:
    """False only for outcomes the ideal circuit cannot produce."""
    layout = _layout(n, k, k_b, 2, False)
    m = layout.register_size
    if len(outcome.alpha) != m or len(outcome.beta) != m:
        raise ValueError(f"alpha and beta need {m} bits each")
    return bool(two_copy_accept_batch(np.array([outcome.alpha + outcome.beta], dtype=np.uint8),
                                      layout, relabeling)[0])


def _forbidden(alpha, beta, q, t_maps):
    odd = (np.sum(alpha & beta, axis=1) & 1).astype(bool)
    q_alpha = alpha[:, q]
    q_fixed = np.all(beta[:, q] == beta, axis=1)
    hit = np.zeros(len(alpha), dtype=bool)
    for t in t_maps:
        hit |= np.all(q_alpha[:, t] == alpha, axis=1) & np.all(beta[:, t] == beta, axis=1)
    return odd & q_fixed & hit


def two_copy_accept_batch(bits: np.ndarray, layout: Layout, relabeling=None) -> np.ndarray:
    """Vectorized :func:`two_copy_accept` over the rows of a ``(M, N)`` array."""
    bits = np.asarray(bits, dtype=np.uint8)
    m = layout.register_size
    q = _register_maps(layout, relabeling)
    t_maps = [_copy_map(layout, tau) for tau in candidate_permutations(layout.n)]
    return ~_forbidden(bits[:, :m], bits[:, m:2 * m], q, t_maps)


def two_copy_accept_brute(outcome: OutcomeTwoCopy, n: int, k: int, k_b: int | None = None,
                          relabeling=None) -> bool:
    """Same test over all ``n!`` copy permutations, keeping those where
    ``Q T Q`` is again the whole-copy permutation ``T``."""
    layout = _layout(n, k, k_b, 2, False)
    q = _register_maps(layout, relabeling)
    a = np.array(outcome.alpha)
    b = np.array(outcome.beta)
    if int(np.dot(a, b)) % 2 == 0 or not np.array_equal(b[q], b):
        return True
    for tau in permutations(range(n)):
        t = _copy_map(layout, tau)
        # (QTQ x)_i = x[t[q[...]]] composed in index space
        if not np.array_equal(q[t[q]], t):
            continue
        if np.array_equal(a[q][t], a) and np.array_equal(b[t], b):
            return False
    return True


# --- circuit-level entry point ---------------------------------------------

def accept_mask(circuit: Circuit, bits: np.ndarray) -> np.ndarray:
    """Post-selection flags for a batch of outcomes of ``circuit``."""
    if circuit.algorithm == "jst":
        return jst_accept_batch(bits, circuit.layout)
    if circuit.algorithm == "two_copy":
        return two_copy_accept_batch(bits, circuit.layout, circuit.relabeling)
    # no forbidden-outcome rule is used for the Bell-basis purity circuit
    return np.ones(len(bits), dtype=bool)
