import math

import numpy as np
import pytest

from entspec.circuits import (
    Circuit, Layout, build_bell_purity_circuit, build_circuit, build_jst_circuit,
    build_two_copy_circuit, compile_1q, cswap_gates, cyclic_permutation_A, haar_random_1q,
    prepare_state_gates, renyi_of_theta, theta_for_renyi, toffoli_gates,
)
from entspec.oracle import exact_distribution, partial_trace_B, power_trace
from entspec.statevector import Gate, apply_gates, from_logical, gate_matrix, init_basis_state

from conftest import haar_state

H = gate_matrix("H")


def unitary_of(gates, n):
    cols = []
    for i in range(1 << n):
        e = np.zeros(1 << n, complex)
        e[i] = 1
        cols.append(apply_gates(from_logical(e), gates).logical_amplitudes())
    return np.array(cols).T


def equal_up_to_phase(a, b, tol=1e-10):
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    phase = a[k] / b[k]
    return abs(abs(phase) - 1) < tol and np.allclose(a, phase * b, atol=tol)


def cycles(perm):
    seen, out = set(), []
    for i in range(len(perm)):
        if i in seen or perm[i] == i:
            continue
        c, j = [], i
        while j not in seen:
            seen.add(j)
            c.append(j)
            j = perm[j]
        out.append(c)
    return out


class TestLayout:
    def test_sizes(self):
        assert Layout(3, 2, 2).num_qubits == 24
        assert Layout(3, 2, 2, registers=1, ancilla=True).num_qubits == 13

    def test_position_grouping(self):
        lay = Layout(3, 1, 1)
        # all copies' first qubit, then all copies' second qubit
        assert [lay.site(0, c, 0) for c in range(3)] == [0, 1, 2]
        assert [lay.site(0, c, 1) for c in range(3)] == [3, 4, 5]
        assert lay.site(1, 0, 0) == 6
        assert lay.idx(1, 2, "B", 0) == 11

    def test_ancilla_first(self):
        lay = Layout(2, 1, 1, registers=1, ancilla=True)
        assert lay.site(0, 0, 0) == 1

    def test_bad_index(self):
        with pytest.raises(ValueError):
            Layout(2, 1, 1).idx(0, 0, "C", 0)
        with pytest.raises(ValueError):
            Layout(2, 1, 1).site(2, 0, 0)


class TestCyclicPermutation:
    def test_n2_k1_transposition(self):
        p = cyclic_permutation_A(2, 1)
        assert cycles(p) == [[0, 1]]

    def test_n3_cubed_identity(self):
        p = cyclic_permutation_A(3, 1)
        q = tuple(range(len(p)))
        for _ in range(3):
            q = tuple(p[i] for i in q)
        assert q == tuple(range(len(p)))
        assert len(cycles(p)) == 1 and len(cycles(p)[0]) == 3

    def test_n3_k2_two_disjoint_cycles(self):
        lay = Layout(3, 2, 2)
        p = cyclic_permutation_A(3, 2, lay)
        # enumerate: each A position forms its own 3-cycle over the copies
        expected = [[lay.site(0, c, q) for c in range(3)] for q in range(2)]
        assert sorted(map(sorted, cycles(p))) == sorted(map(sorted, expected))
        for q in range(2):
            for c in range(3):
                assert p[lay.site(0, c, q)] == lay.site(0, (c + 1) % 3, q)

    @pytest.mark.parametrize("n,k", [(2, 1), (3, 2), (4, 3), (5, 1)])
    def test_order_n(self, n, k):
        p = cyclic_permutation_A(n, k)
        q = tuple(range(len(p)))
        for _ in range(n):
            q = tuple(p[i] for i in q)
        assert q == tuple(range(len(p)))
        fixed = [i for i in range(len(p)) if p[i] == i]
        assert len(fixed) == len(p) - k * n  # only register-1 A qubits move

    def test_n1(self):
        with pytest.raises(ValueError):
            cyclic_permutation_A(1, 1)


class TestTwoCopy:
    def test_n2_k1(self):
        c = build_two_copy_circuit(2, 1)
        assert c.num_qubits == 8
        assert c.gate_counts() == {"CNOT": 4, "H": 4}
        assert c.depth() == 2
        assert len(c.pairing) == 4

    def test_n3_k2(self):
        c = build_two_copy_circuit(3, 2)
        assert c.num_qubits == 24
        assert c.gate_counts() == {"CNOT": 12, "H": 12}

    def test_n1_error(self):
        with pytest.raises(ValueError):
            build_two_copy_circuit(1, 1)

    def test_layers(self):
        c = build_two_copy_circuit(3, 1)
        cnots = c.algo_gates[:6]
        hs = c.algo_gates[6:]
        assert all(g.kind == "CNOT" for g in cnots) and all(g.kind == "H" for g in hs)
        assert [g.qubits for g in cnots] == list(c.pairing)
        assert [g.qubits[0] for g in hs] == [p[0] for p in c.pairing]

    def test_json_round_trip(self, rng):
        prep = prepare_state_gates(0.3, haar_random_1q(rng), haar_random_1q(rng))
        c = build_two_copy_circuit(2, 1, prep)
        back = Circuit.from_json(c.to_json())
        assert back == c

    def test_asymmetric_bipartition(self):
        c = build_two_copy_circuit(2, 1, k_b=2)
        assert c.num_qubits == 12
        assert c.gate_counts() == {"CNOT": 6, "H": 6}


class TestBlocks:
    def test_toffoli(self):
        ref = np.eye(8)
        ref[[6, 7]] = ref[[7, 6]]
        assert equal_up_to_phase(unitary_of(toffoli_gates(0, 1, 2), 3), ref)

    def test_cswap(self):
        ref = np.eye(8)
        ref[[5, 6]] = ref[[6, 5]]  # |101> <-> |110>
        u = unitary_of(cswap_gates(0, 1, 2), 3)
        assert equal_up_to_phase(u, ref)
        assert sum(g.kind == "CNOT" for g in cswap_gates(0, 1, 2)) == 8


class TestJST:
    def test_n2_k1(self):
        c = build_jst_circuit(2, 1)
        assert c.num_qubits == 5
        assert c.gate_counts()["CNOT"] == 8
        assert c.pairing == () and c.ancilla == 0

    def test_n4_k1(self):
        assert build_jst_circuit(4, 1).gate_counts()["CNOT"] == 24

    def test_n1_error(self):
        with pytest.raises(ValueError):
            build_jst_circuit(1, 2)

    @pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (2, 2)])
    def test_controlled_shift(self, n, k):
        # the middle block (between the Hadamards) shifts A of copy c to c+1 when the ancilla is 1
        c = build_jst_circuit(n, k)
        lay = c.layout
        middle = list(c.algo_gates[1:-1])
        rng = np.random.default_rng(0)
        for _ in range(5):
            words = [rng.integers(0, 2, lay.width) for _ in range(n)]
            bits = ["0"] * lay.num_qubits
            for cp in range(n):
                for j in range(lay.width):
                    bits[lay.site(0, cp, j)] = str(words[cp][j])
            for anc in "01":
                bits[0] = anc
                out = apply_gates(init_basis_state(lay.num_qubits, "".join(bits)), middle)
                amp = out.logical_amplitudes()
                idx = int(np.argmax(np.abs(amp)))
                assert abs(abs(amp[idx]) - 1) < 1e-10
                got = format(idx, f"0{lay.num_qubits}b")
                for cp in range(n):
                    src = (cp - 1) % n if anc == "1" else cp
                    for j in range(lay.width):
                        want = words[src][j] if j < k else words[cp][j]
                        assert got[lay.site(0, cp, j)] == str(want)

    def test_product_state_ancilla(self, rng):
        v = haar_random_1q(rng)
        prep = compile_1q(v, 0) + compile_1q(haar_random_1q(rng), 1)
        p = exact_distribution(build_jst_circuit(3, 1, prep))
        half = p.size // 2
        assert abs(p[:half].sum() - p[half:].sum() - 1) < 1e-10


class TestBellPurity:
    def test_product(self, rng):
        c = build_bell_purity_circuit(1, compile_1q(haar_random_1q(rng), 0))
        assert c.num_qubits == 4
        p = exact_distribution(c)
        assert abs(_parity_value(p, c) - 1) < 1e-10

    def test_bell(self):
        c = build_bell_purity_circuit(1, [Gate("H", (0,)), Gate("CNOT", (0, 1))])
        assert abs(_parity_value(exact_distribution(c), c) - 0.5) < 1e-10

    def test_k2_random(self, rng):
        psi = haar_state(4, rng)
        c = build_bell_purity_circuit(2)
        assert c.num_qubits == 8
        exact = power_trace(partial_trace_B(psi, 2, 2), 2)
        assert abs(_parity_value(exact_distribution(c, psi), c) - exact) < 1e-10

    def test_build_circuit_dispatch(self):
        assert build_circuit("bell_purity", 2, 1).algorithm == "bell_purity"
        with pytest.raises(ValueError):
            build_circuit("bell_purity", 3, 1)
        with pytest.raises(ValueError):
            build_circuit("nope", 2, 1)


def _parity_value(p, c):
    n = c.num_qubits
    total = 0.0
    for i, pi in enumerate(p):
        s = 0
        for a, b in c.pairing:
            s += ((i >> (n - 1 - a)) & 1) * ((i >> (n - 1 - b)) & 1)
        total += pi * (-1) ** s
    return total


class TestPreparation:
    def test_theta_zero(self):
        s = apply_gates(init_basis_state(2, "00"), prepare_state_gates(0.0, np.eye(2), np.eye(2)))
        assert np.allclose(s.logical_amplitudes(), [1, 0, 0, 0], atol=1e-12)

    def test_theta_half_pi_is_bell(self):
        s = apply_gates(init_basis_state(2, "00"), prepare_state_gates(math.pi / 2, np.eye(2), np.eye(2)))
        out = s.logical_amplitudes()
        assert equal_up_to_phase(out, np.array([1, 0, 0, 1]) / math.sqrt(2))

    def test_native_form(self, rng):
        a = prepare_state_gates(0.9, haar_random_1q(rng), haar_random_1q(rng), native=True)
        assert {g.kind for g in a} <= {"RZ", "X90", "CNOT"}

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_local_unitary_invariance(self, rng, n):
        theta = rng.uniform(0, math.pi)
        ref = apply_gates(init_basis_state(2, "00"), prepare_state_gates(theta, np.eye(2), np.eye(2)))
        dressed = apply_gates(init_basis_state(2, "00"),
                              prepare_state_gates(theta, haar_random_1q(rng), haar_random_1q(rng)))
        r0 = power_trace(partial_trace_B(ref, 1, 1), n)
        r1 = power_trace(partial_trace_B(dressed, 1, 1), n)
        assert abs(r0 - r1) < 1e-10
        assert abs(r0 - renyi_of_theta(theta, n)) < 1e-10

    def test_non_unitary(self):
        with pytest.raises(ValueError):
            prepare_state_gates(0.1, np.ones((2, 2)), np.eye(2))


class TestCompile:
    @pytest.mark.parametrize("name", ["I", "H", "X90", "X", "Y", "Z"])
    def test_named(self, name):
        u = np.eye(2) if name == "I" else gate_matrix(name)
        gates = compile_1q(u)
        assert [g.kind for g in gates] == ["RZ", "X90", "RZ", "X90", "RZ"]
        assert equal_up_to_phase(unitary_of(gates, 1), u)

    def test_random(self, rng):
        for _ in range(200):
            u = haar_random_1q(rng)
            assert equal_up_to_phase(unitary_of(compile_1q(u), 1), u)

    def test_identity_angles(self):
        angles = [g.theta for g in compile_1q(np.eye(2)) if g.kind == "RZ"]
        # RZ(a) X90 RZ(b) X90 RZ(c) with (a, b, c) = (0, pi, pi) ~ (0, -pi, -pi) mod 2 pi
        assert np.allclose(np.cos(angles), [1, -1, -1]) and np.allclose(np.sin(angles), 0, atol=1e-12)

    def test_non_unitary(self):
        with pytest.raises(ValueError):
            compile_1q(np.array([[1, 1], [0, 1]]))


class TestHaar:
    def test_unitary(self, rng):
        for _ in range(50):
            u = haar_random_1q(rng)
            assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-10)

    def test_first_moment(self):
        rng = np.random.default_rng(21)
        count = 100_000
        vals = np.array([abs(haar_random_1q(rng)[0, 0]) ** 2 for _ in range(count)])
        # |U00|^2 is uniform on [0, 1] under the Haar measure
        assert abs(vals.mean() - 0.5) < 4 * math.sqrt(1 / 12 / count)

    def test_deterministic(self):
        a = haar_random_1q(np.random.default_rng(3))
        b = haar_random_1q(np.random.default_rng(3))
        assert np.array_equal(a, b)


class TestThetaGrid:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_inverse(self, n):
        for target in np.linspace(2.0 ** (1 - n), 1, 17):
            assert abs(renyi_of_theta(theta_for_renyi(target, n), n) - target) < 1e-11

    def test_endpoints(self):
        assert theta_for_renyi(1.0, 3) == 0.0
        assert theta_for_renyi(0.25, 3) == math.pi / 2

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            theta_for_renyi(0.1, 2)
