"""Command line driver.

    python -m entspec run --algorithm two_copy --n 3 --noise full --out out/run.csv
    python -m entspec sweep --out out/sweep
    python -m entspec spectrum --k 2 --n-max 4 --exact
    python -m entspec oracle --theta 0.8 --n-max 4
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .circuits import haar_random_1q, prepare_state_gates
from .harness import (
    ALGORITHMS, ExperimentConfig, aggregate, generate_state_family, records_to_csv, run_experiment,
    run_spectrum, summarize, summary_json, sweep, write_outputs,
)
from .noise import NoiseParams
from .oracle import eigenvalues, power_trace, reduced_state_of_prep


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--n", type=int, help="Renyi order")
    p.add_argument("--k", type=int, help="qubits in subsystem A")
    p.add_argument("--k-b", type=int, help="qubits in subsystem B (default: --k)")
    p.add_argument("--num-states", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--noise", choices=("off", "full", "gates-only"))
    p.add_argument("--postselect", action="store_true", default=None)
    p.add_argument("--exact", action="store_true", default=None,
                   help="use exact output probabilities instead of shots")
    p.add_argument("--backend", choices=("mixture", "trajectory"))


def config_from_args(args) -> ExperimentConfig:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    overrides = {
        "algorithm": args.algorithm, "n": args.n, "k_A": args.k, "k_B": args.k_b,
        "num_states": args.num_states, "shots": args.shots, "master_seed": args.seed,
        "postselect": args.postselect, "exact": args.exact, "backend": args.backend,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.k is not None and args.k_b is None:
        data["k_B"] = args.k
    if args.noise is not None:
        data["noise"] = args.noise
    if getattr(args, "out", None) and args.command == "run":
        data["output_path"] = args.out
    return ExperimentConfig.from_dict(data)


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    records = run_experiment(cfg)
    if not cfg.output_path:
        sys.stdout.write(records_to_csv(records))
    sys.stdout.write(summary_json(summarize(records)))
    return 0


def cmd_sweep(args) -> int:
    base = config_from_args(args)
    if base.noise is None and args.noise is None:
        base = replace(base, noise=NoiseParams())

    def show(s):
        print(f"{s['noise_scope']:>10} n={s['n']} {s['algorithm']:>8} seed={s['master_seed']} "
              f"mean_rel_err={s['mean_rel_err']:.4f}", file=sys.stderr)

    rows = sweep(base, args.algorithms, args.ns, args.seeds, args.scopes, args.out, show)
    sys.stdout.write(summary_json({"aggregate": aggregate(rows)}))
    return 0


def cmd_spectrum(args) -> int:
    cfg = config_from_args(args)
    result = run_spectrum(cfg, args.n_max)
    sys.stdout.write(summary_json(result.to_dict()))
    return 0


def cmd_oracle(args) -> int:
    if args.theta is not None:
        rng = np.random.default_rng(args.seed or 0)
        if args.haar:
            v_a, v_b = haar_random_1q(rng), haar_random_1q(rng)
        else:
            v_a = v_b = np.eye(2)
        gates, theta = prepare_state_gates(args.theta, v_a, v_b), args.theta
    else:
        family = generate_state_family(args.n or 2, args.num_states or 100, args.seed or 0)
        spec = family[args.state_index]
        gates, theta = spec.gates, spec.theta
    rho = reduced_state_of_prep(gates, 1, 1)
    out = {
        "theta": theta,
        "renyi": {str(n): power_trace(rho, n) for n in range(1, args.n_max + 1)},
        "entropy": {str(n): (math.log(power_trace(rho, n)) / (1 - n)) for n in range(2, args.n_max + 1)},
        "eigenvalues": [float(x) for x in eigenvalues(rho)],
    }
    sys.stdout.write(summary_json(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entspec", description="Renyi entropy estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one experiment over a state family")
    _add_common(p)
    p.add_argument("--out", help="CSV path; a JSON summary is written next to it")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="two_copy vs jst over orders, seeds and noise scopes")
    _add_common(p)
    p.add_argument("--algorithms", nargs="+", default=["two_copy", "jst"], choices=ALGORITHMS)
    p.add_argument("--ns", nargs="+", type=int, default=[3, 4])
    p.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    p.add_argument("--scopes", nargs="+", default=["all", "gates_only"], choices=("all", "gates_only"))
    p.add_argument("--out", help="directory for per-run files and sweep.json")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="reconstruct the top eigenvalues of one state")
    _add_common(p)
    p.add_argument("--n-max", type=int, default=2)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("oracle", help="exact Renyi values and spectrum of one state")
    p.add_argument("--theta", type=float, help="entangling angle; omit to pick a family member")
    p.add_argument("--haar", action="store_true", help="dress the state with Haar one-qubit unitaries")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="family order when picking a family member")
    p.add_argument("--num-states", type=int)
    p.add_argument("--state-index", type=int, default=0)
    p.add_argument("--n-max", type=int, default=4)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


__all__ = ["build_parser", "config_from_args", "main", "write_outputs"]
