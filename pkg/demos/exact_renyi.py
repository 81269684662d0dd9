"""Measure Tr(rho_A^n) of a two-qubit state three ways and compare with the oracle.

Runs the two-copy circuit and the controlled-permutation circuit on exact output
probabilities, then on 10^4 sampled shots.
"""

import numpy as np

from entspec import mixture
from entspec.circuits import build_jst_circuit, build_two_copy_circuit, haar_random_1q, prepare_state_gates
from entspec.estimators import ShotSet, estimate_from_mean, estimate_jst, estimate_two_copy
from entspec.execution import sample_shots
from entspec.oracle import power_trace, reduced_state_of_prep

rng = np.random.default_rng(1)
prep = prepare_state_gates(1.0, haar_random_1q(rng), haar_random_1q(rng))
rho = reduced_state_of_prep(prep, 1, 1)

print(" n   oracle     two-copy exact   jst exact    two-copy shots   jst shots")
for n in (2, 3, 4):
    exact = power_trace(rho, n)
    tc = build_two_copy_circuit(n, 1, prep)
    jst = build_jst_circuit(n, 1, prep)

    tc_exact = estimate_from_mean("two_copy", mixture.parity_expectation(tc, None), n).R_n
    jst_exact = float(mixture.noisy_distribution(jst).reshape(2, -1).sum(axis=1) @ [1, -1])

    tc_shots = estimate_two_copy(ShotSet(sample_shots(tc, 10_000, seed=n), pairing=tc.pairing, n=n))
    jst_shots = estimate_jst(ShotSet(sample_shots(jst, 10_000, seed=n), ancilla=jst.ancilla, n=n))

    print(f" {n}   {exact:.6f}   {tc_exact:.6f}         {jst_exact:.6f}     "
          f"{tc_shots.R_n:.4f}+-{tc_shots.sigma_pm1:.4f}  {jst_shots.R_n:.4f}+-{jst_shots.sigma_pm1:.4f}")
