"""Circuit construction for the two-copy, controlled-permutation and
Bell-basis purity measurements.

Qubit layout
------------
Each copy of the input state holds ``k_a`` A-qubits followed by ``k_b``
B-qubits (copy-local indices ``0 .. k_a+k_b-1``).  Inside a register of ``n``
copies, qubits are grouped by copy-local position: position 0 of every copy,
then position 1 of every copy, and so on.  With that grouping the cyclic shift
of copies factorizes into independent cycles, one per A position.  The
controlled-permutation circuit puts its ancilla at global index 0.

Gates in ``Circuit.algo_gates`` address logical labels *after* the register-1
relabeling has been applied; measured bitstrings use the same labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from .statevector import Gate, ry_matrix

_UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Layout:
    n: int
    k_a: int
    k_b: int
    registers: int = 2
    ancilla: bool = False

    def __post_init__(self):
        if self.n < 1 or self.k_a < 1 or self.k_b < 0:
            raise ValueError(f"invalid layout sizes n={self.n}, k_a={self.k_a}, k_b={self.k_b}")
        if self.registers not in (1, 2):
            raise ValueError("a layout has one or two registers")

    @property
    def width(self) -> int:
        return self.k_a + self.k_b

    @property
    def offset(self) -> int:
        return 1 if self.ancilla else 0

    @property
    def register_size(self) -> int:
        return self.n * self.width

    @property
    def num_qubits(self) -> int:
        return self.offset + self.registers * self.register_size

    def site(self, register: int, copy: int, local: int) -> int:
        """Global index of copy-local qubit ``local`` of ``copy``."""
        if not (0 <= register < self.registers and 0 <= copy < self.n and 0 <= local < self.width):
            raise ValueError(f"no site ({register}, {copy}, {local}) in {self}")
        return self.offset + register * self.register_size + local * self.n + copy

    def idx(self, register: int, copy: int, subsystem: str, qubit: int) -> int:
        """Global index of the ``qubit``-th qubit of ``subsystem`` ('A'/'B')."""
        if subsystem == "A":
            if not 0 <= qubit < self.k_a:
                raise ValueError(f"A has {self.k_a} qubits")
            return self.site(register, copy, qubit)
        if subsystem == "B":
            if not 0 <= qubit < self.k_b:
                raise ValueError(f"B has {self.k_b} qubits")
            return self.site(register, copy, self.k_a + qubit)
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")

    def copy_qubits(self, register: int, copy: int) -> tuple[int, ...]:
        return tuple(self.site(register, copy, j) for j in range(self.width))

    def all_copies(self) -> list[tuple[int, ...]]:
        return [self.copy_qubits(r, c) for r in range(self.registers) for c in range(self.n)]

    def to_dict(self) -> dict:
        return {"n": self.n, "k_a": self.k_a, "k_b": self.k_b,
                "registers": self.registers, "ancilla": self.ancilla}


@dataclass(frozen=True)
class Circuit:
    """A measurement circuit plus what post-processing needs to know."""

    algorithm: str
    layout: Layout
    prep_gates: tuple[Gate, ...]
    algo_gates: tuple[Gate, ...]
    relabeling: tuple[int, ...]
    measured: tuple[int, ...]
    pairing: tuple[tuple[int, int], ...] = ()
    ancilla: int | None = None
    native: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    def prep_gates_global(self) -> list[Gate]:
        """Copy-local prep gates replicated onto every copy."""
        out = []
        for qubits in self.layout.all_copies():
            out.extend(Gate(g.kind, tuple(qubits[q] for q in g.qubits), g.theta) for g in self.prep_gates)
        return out

    def gate_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for g in self.algo_gates:
            counts[g.kind] = counts.get(g.kind, 0) + 1
        return counts

    def depth(self) -> int:
        return circuit_depth(self.algo_gates, self.num_qubits)

    def to_native(self) -> "Circuit":
        """Same circuit with one-qubit gates rewritten into RZ and X90."""
        if self.native:
            return self
        return Circuit(self.algorithm, self.layout, tuple(to_native(self.prep_gates)),
                       tuple(to_native(self.algo_gates)), self.relabeling, self.measured,
                       self.pairing, self.ancilla, True, dict(self.meta))

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "layout": self.layout.to_dict(),
            "num_qubits": self.num_qubits,
            "prep_gates": [g.to_dict() for g in self.prep_gates],
            "relabeling": list(self.relabeling),
            "algo_gates": [g.to_dict() for g in self.algo_gates],
            "measured": list(self.measured),
            "pairing": [list(p) for p in self.pairing],
            "ancilla": self.ancilla,
            "native": self.native,
            "depth": self.depth(),
            "gate_counts": self.gate_counts(),
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        return cls(
            data["algorithm"],
            Layout(**data["layout"]),
            tuple(Gate.from_dict(g) for g in data["prep_gates"]),
            tuple(Gate.from_dict(g) for g in data["algo_gates"]),
            tuple(data["relabeling"]),
            tuple(data["measured"]),
            tuple(tuple(p) for p in data["pairing"]),
            data["ancilla"],
            data.get("native", False),
        )

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


def circuit_depth(gates, num_qubits: int) -> int:
    """Number of layers when every gate is scheduled as early as possible."""
    level = [0] * num_qubits
    for g in gates:
        t = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = t
    return max(level, default=0)


# --- one-qubit unitaries ---------------------------------------------------

def _check_unitary(u: np.ndarray, name: str = "U") -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, np.eye(2), atol=_UNITARY_TOL, rtol=0):
        raise ValueError(f"{name} is not a 2x2 unitary")
    return u


def zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (phi, theta, lam) with u ~ RZ(phi) RY(theta) RZ(lam) up to phase."""
    u = _check_unitary(u)
    v = u / np.sqrt(np.linalg.det(u))
    a, b = v[0, 0], v[1, 0]
    theta = 2 * math.atan2(abs(b), abs(a))
    plus = -2 * np.angle(a) if abs(a) > 1e-12 else 0.0
    minus = 2 * np.angle(b) if abs(b) > 1e-12 else 0.0
    return (plus + minus) / 2, theta, (plus - minus) / 2


def compile_1q(u: np.ndarray, qubit: int = 0) -> list[Gate]:
    """RZ, X90, RZ, X90, RZ sequence (in application order) equal to ``u``
    up to a global phase."""
    phi, theta, lam = zyz_angles(u)
    return [
        Gate("RZ", (qubit,), lam),
        Gate("X90", (qubit,)),
        Gate("RZ", (qubit,), theta + math.pi),
        Gate("X90", (qubit,)),
        Gate("RZ", (qubit,), phi + math.pi),
    ]


def to_native(gates) -> list[Gate]:
    out = []
    for g in gates:
        if g.kind in ("RZ", "X90", "CNOT"):
            out.append(g)
        else:
            out.extend(compile_1q(g.matrix(), g.qubits[0]))
    return out


def haar_random_1q(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 2x2 unitary."""
    return unitary_group.rvs(2, random_state=rng)


# --- state preparation -----------------------------------------------------

def prepare_state_gates(theta: float, v_a, v_b, a: int = 0, b: int = 1, native: bool = False) -> list[Gate]:
    """Gates taking ``|0>_a |0>_b`` to ``(V_A x V_B) CNOT_ab RY_a(theta) |00>``.

    The reduced state on ``a`` has eigenvalues cos^2(theta/2), sin^2(theta/2).
    With ``native=True`` the RY is also compiled into RZ/X90 form.
    """
    v_a = _check_unitary(v_a, "V_A")
    v_b = _check_unitary(v_b, "V_B")
    ry = compile_1q(ry_matrix(theta), a) if native else [Gate("RY", (a,), theta)]
    return ry + [Gate("CNOT", (a, b))] + compile_1q(v_a, a) + compile_1q(v_b, b)


def renyi_of_theta(theta: float, n: int) -> float:
    lam = math.cos(theta / 2) ** 2
    return lam ** n + (1 - lam) ** n


def theta_for_renyi(target: float, n: int, tol: float = 1e-12) -> float:
    """Angle in [0, pi/2] whose entangled-pair state has Tr(rho_A^n) = ``target``.

    Bisects on lambda = cos^2(theta/2) in [1/2, 1], where the power sum is
    increasing.
    """
    lo_val = 2.0 ** (1 - n)
    if not lo_val - tol <= target <= 1 + tol:
        raise ValueError(f"target {target} outside [{lo_val}, 1]")
    if target >= 1:
        return 0.0
    if target <= lo_val:
        return math.pi / 2
    lo, hi = 0.5, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid ** n + (1 - mid) ** n < target:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return 2 * math.acos(math.sqrt(lam))


# --- permutations ----------------------------------------------------------

def cyclic_permutation_A(n: int, k: int, layout: Layout | None = None) -> tuple[int, ...]:
    """Relabeling that moves every register-1 A qubit of copy ``c`` to copy ``c+1 mod n``.

    Element ``i`` of the result is the label that qubit ``i`` moves to.
    """
    if n < 2:
        raise ValueError("a cyclic permutation needs n >= 2 copies")
    if layout is None:
        layout = Layout(n, k, k)
    if layout.n != n or layout.k_a != k:
        raise ValueError("layout does not match n and k")
    perm = list(range(layout.num_qubits))
    for q in range(k):
        for c in range(n):
            perm[layout.site(0, c, q)] = layout.site(0, (c + 1) % n, q)
    return tuple(perm)


def compose(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    """Relabeling ``q`` followed by ``p``."""
    return tuple(p[q[i]] for i in range(len(q)))


def invert(p) -> tuple[int, ...]:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


# --- multi-qubit building blocks -------------------------------------------

_T = math.pi / 4


def toffoli_gates(c1: int, c2: int, t: int) -> list[Gate]:
    """Six-CNOT Toffoli; T gates are RZ(pi/4), exact up to global phase."""
    return [
        Gate("H", (t,)),
        Gate("CNOT", (c2, t)),
        Gate("RZ", (t,), -_T),
        Gate("CNOT", (c1, t)),
        Gate("RZ", (t,), _T),
        Gate("CNOT", (c2, t)),
        Gate("RZ", (t,), -_T),
        Gate("CNOT", (c1, t)),
        Gate("RZ", (c2,), _T),
        Gate("RZ", (t,), _T),
        Gate("H", (t,)),
        Gate("CNOT", (c1, c2)),
        Gate("RZ", (c1,), _T),
        Gate("RZ", (c2,), -_T),
        Gate("CNOT", (c1, c2)),
    ]


def cswap_gates(c: int, a: int, b: int) -> list[Gate]:
    """Controlled swap of ``a`` and ``b``: CNOT(b,a) Toffoli(c,a;b) CNOT(b,a)."""
    return [Gate("CNOT", (b, a))] + toffoli_gates(c, a, b) + [Gate("CNOT", (b, a))]


# --- circuit builders ------------------------------------------------------

def _per_copy_prep(prep, width: int) -> tuple[Gate, ...]:
    prep = tuple(prep or ())
    for g in prep:
        if any(not 0 <= q < width for q in g.qubits):
            raise ValueError(f"prep gate {g} leaves the {width}-qubit copy")
    return prep


def build_two_copy_circuit(n: int, k: int, prep=(), k_b: int | None = None) -> Circuit:
    """Depth-two circuit on two registers of ``n`` copies each."""
    if n < 2:
        raise ValueError("the two-copy circuit needs n >= 2")
    if k < 1:
        raise ValueError("k must be >= 1")
    layout = Layout(n, k, k if k_b is None else k_b, registers=2)
    size = layout.register_size
    pairs = tuple((p, p + size) for p in range(size))
    algo = [Gate("CNOT", pr) for pr in pairs] + [Gate("H", (c,)) for c, _ in pairs]
    return Circuit(
        "two_copy", layout, _per_copy_prep(prep, layout.width), tuple(algo),
        cyclic_permutation_A(n, k, layout), tuple(range(layout.num_qubits)), pairs,
    )


def build_jst_circuit(n: int, k: int, prep=(), k_b: int | None = None) -> Circuit:
    """Ancilla-controlled cyclic permutation of the A qubits of ``n`` copies."""
    if n < 2:
        raise ValueError("the controlled-permutation circuit needs n >= 2")
    if k < 1:
        raise ValueError("k must be >= 1")
    layout = Layout(n, k, k if k_b is None else k_b, registers=1, ancilla=True)
    anc = 0
    algo = [Gate("H", (anc,))]
    for q in range(k):
        # swaps (n-2, n-1), ..., (0, 1) move copy c to c+1
        for c in range(n - 2, -1, -1):
            algo += cswap_gates(anc, layout.site(0, c, q), layout.site(0, c + 1, q))
    algo.append(Gate("H", (anc,)))
    return Circuit(
        "jst", layout, _per_copy_prep(prep, layout.width), tuple(algo),
        tuple(range(layout.num_qubits)), tuple(range(layout.num_qubits)), (), anc,
    )


def build_bell_purity_circuit(k: int, prep=(), k_b: int | None = None) -> Circuit:
    """Bell-basis measurement of the A qubits of two copies (purity only)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    layout = Layout(2, k, k if k_b is None else k_b, registers=1)
    pairs = tuple((layout.site(0, 0, q), layout.site(0, 1, q)) for q in range(k))
    algo = [Gate("CNOT", pr) for pr in pairs] + [Gate("H", (c,)) for c, _ in pairs]
    return Circuit(
        "bell_purity", layout, _per_copy_prep(prep, layout.width), tuple(algo),
        tuple(range(layout.num_qubits)), tuple(range(layout.num_qubits)), pairs,
    )


def build_circuit(algorithm: str, n: int, k: int, prep=(), k_b: int | None = None) -> Circuit:
    if algorithm == "two_copy":
        return build_two_copy_circuit(n, k, prep, k_b)
    if algorithm == "jst":
        return build_jst_circuit(n, k, prep, k_b)
    if algorithm == "bell_purity":
        if n != 2:
            raise ValueError("the Bell-basis circuit only measures n = 2")
        return build_bell_purity_circuit(k, prep, k_b)
    raise ValueError(f"unknown algorithm {algorithm!r}")
