import numpy as np
import pytest
from scipy.stats import unitary_group

from entspec.statevector import gate_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def haar_state(num_qubits, rng):
    return unitary_group.rvs(1 << num_qubits, random_state=rng)[:, 0]


def bits_of(index, n):
    return [(index >> (n - 1 - i)) & 1 for i in range(n)]


def dense_operator(gate, n):
    """Full 2^n x 2^n matrix built with Kronecker products (reference)."""
    eye = np.eye(2)
    if gate.kind == "CNOT":
        c, t = gate.qubits
        p0, p1 = np.diag([1, 0]), np.diag([0, 1])
        x = gate_matrix("X")
        a = [eye] * n
        b = [eye] * n
        a[c], b[c], b[t] = p0, p1, x
        out_a, out_b = np.eye(1), np.eye(1)
        for m in a:
            out_a = np.kron(out_a, m)
        for m in b:
            out_b = np.kron(out_b, m)
        return out_a + out_b
    ops = [eye] * n
    ops[gate.qubits[0]] = gate.matrix()
    out = np.eye(1)
    for m in ops:
        out = np.kron(out, m)
    return out


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
