"""Simulation and analysis of circuits that estimate Tr(rho_A^n).

Main entry points: the circuit builders in :mod:`entspec.circuits`, shot
sampling in :mod:`entspec.execution`, estimators in :mod:`entspec.estimators`,
post-selection in :mod:`entspec.postselect`, exact references in
:mod:`entspec.oracle` and experiment runs in :mod:`entspec.harness`.
"""

from .circuits import (
    Circuit, Layout, build_bell_purity_circuit, build_circuit, build_jst_circuit,
    build_two_copy_circuit, compile_1q, cyclic_permutation_A, haar_random_1q, prepare_state_gates,
    theta_for_renyi,
)
from .errors import ConvergenceError, EmptyEstimateError, ResourceLimitError
from .estimators import (
    RenyiEstimate, ShotSet, Spectrum, estimate_bell_purity, estimate_jst, estimate_two_copy,
    newton_girard_coeffs, parity_sign, renyi_entropy, spectrum_from_renyi,
)
from .execution import run_noiseless, run_trajectory, sample_shots
from .harness import ExperimentConfig, ResultRecord, generate_state_family, run_experiment, run_spectrum
from .noise import NoiseParams, apply_gate_noise, apply_readout_noise, relaxation_prob
from .oracle import DensityMatrix, eigenvalues, exact_distribution, partial_trace_B, power_trace
from .postselect import (
    OutcomeJST, OutcomeTwoCopy, candidate_permutations, jst_accept, two_copy_accept,
)
from .statevector import (
    Gate, StateVector, apply_gate, init_basis_state, probabilities, relabel_qubits, sample,
)

__version__ = "0.1.0"
