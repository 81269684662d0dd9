"""Compare the two circuits under the default hardware noise model.

A short version of the full sweep: 20 states, one seed, n = 3.  The two-copy
circuit is shallow, so its estimates drift much less than those of the
controlled-permutation circuit.  Post-selection mainly helps the latter.
"""

import numpy as np

from entspec.harness import ExperimentConfig, run_experiment
from entspec.noise import NoiseParams

for scope in ("all", "gates_only"):
    for alg in ("two_copy", "jst"):
        cfg = ExperimentConfig(algorithm=alg, n=3, num_states=20, shots=10_000, noise=NoiseParams(),
                               noise_scope=scope, postselect=True)
        recs = run_experiment(cfg)
        raw = np.mean([abs(r.raw_estimate.R_n - r.exact_Rn) / r.exact_Rn for r in recs])
        post = np.mean([r.relative_error for r in recs if r.estimate])
        kept = np.mean([r.accepted_fraction for r in recs])
        print(f"{scope:>10} {alg:>8}  raw rel. error {raw:.3f}  post-selected {post:.3f}  kept {kept:.1%}")
