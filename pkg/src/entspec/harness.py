"""Experiment driver: state families, per-state runs, sweeps and output files.

Every random choice is derived from ``master_seed``: the state family from one
stream, and the shots of state ``m`` from streams keyed by ``(master_seed, m)``
(see :func:`entspec.execution.streams`).  A run is therefore a pure function
of its config and output files are reproducible byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import mixture
from .circuits import Circuit, build_circuit, compile_1q, haar_random_1q, prepare_state_gates, theta_for_renyi
from .errors import EmptyEstimateError
from .estimators import RenyiEstimate, ShotSet, estimate, estimate_from_mean, spectrum_from_renyi, Spectrum
from .execution import BACKENDS, output_distribution, sample_shots
from .noise import NoiseParams
from .oracle import eigenvalues, partial_trace_B, power_trace, reduced_state_of_prep
from .postselect import accept_mask
from .statevector import Gate, index_to_bits

ALGORITHMS = ("two_copy", "jst", "bell_purity")
NOISE_SCOPES = ("all", "gates_only")
CSV_COLUMNS = ("m", "theta", "exact_Rn", "est_Rn", "sigma", "rel_err", "accepted_fraction",
               "raw_est_Rn", "sigma_pm1", "clamped", "error")

_FAMILY_KEY = 0x5EED


@dataclass
class ExperimentConfig:
    algorithm: str = "two_copy"
    n: int = 2
    k_A: int = 1
    k_B: int | None = None
    num_states: int = 100
    shots: int = 10_000
    noise: NoiseParams | None = None
    noise_scope: str = "all"
    postselect: bool = False
    master_seed: int = 0
    output_path: str | None = None
    exact: bool = False
    backend: str = "mixture"
    state_index: int = 0

    def __post_init__(self):
        if self.k_B is None:
            self.k_B = self.k_A
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.algorithm == "bell_purity" and self.n != 2:
            raise ValueError("bell_purity measures n = 2 only")
        if self.n < 2 or self.k_A < 1 or self.k_B < 1:
            raise ValueError("need n >= 2, k_A >= 1 and k_B >= 1")
        if self.shots < 1 or self.num_states < 1:
            raise ValueError("shots and num_states must be >= 1")
        if self.noise_scope not in NOISE_SCOPES:
            raise ValueError(f"noise_scope must be one of {NOISE_SCOPES}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if isinstance(self.noise, dict):
            self.noise = NoiseParams.from_dict(self.noise)

    def effective_noise(self) -> NoiseParams | None:
        if self.noise is None:
            return None
        return self.noise.gates_only() if self.noise_scope == "gates_only" else self.noise

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = None if self.noise is None else self.noise.to_dict()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        noise = data.get("noise")
        if noise is True or noise == "full":
            data["noise"] = NoiseParams()
        elif noise in (False, "off"):
            data["noise"] = None
        elif noise == "gates-only":
            data["noise"], data["noise_scope"] = NoiseParams(), "gates_only"
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class StateSpec:
    """One member of the state family.

    ``theta``, ``V_A`` and ``V_B`` define the entangled pair on the first A and
    B qubits; ``gates`` is the full per-copy preparation.
    """

    theta: float
    V_A: np.ndarray = field(repr=False)
    V_B: np.ndarray = field(repr=False)
    target: float
    gates: tuple[Gate, ...] = field(repr=False)

    def __iter__(self):
        return iter((self.theta, self.V_A, self.V_B))


@dataclass
class ResultRecord:
    m: int
    theta: float
    exact_Rn: float
    estimate: RenyiEstimate | None
    accepted_fraction: float
    relative_error: float
    raw_estimate: RenyiEstimate | None = None
    error: str | None = None

    def row(self) -> dict:
        e, raw = self.estimate, self.raw_estimate
        return {
            "m": self.m, "theta": self.theta, "exact_Rn": self.exact_Rn,
            "est_Rn": e.R_n if e else math.nan, "sigma": e.sigma if e else math.nan,
            "rel_err": self.relative_error, "accepted_fraction": self.accepted_fraction,
            "raw_est_Rn": raw.R_n if raw else math.nan,
            "sigma_pm1": e.sigma_pm1 if e else math.nan,
            "clamped": int(bool(e and e.clamped)), "error": self.error or "",
        }


# --- state family ---------------------------------------------------------

def family_targets(n: int, num_states: int) -> np.ndarray:
    lo = 2.0 ** (1 - n)
    if num_states == 1:
        return np.array([0.5 * (lo + 1)])
    return np.linspace(lo, 1.0, num_states)


def generate_state_family(n: int, num_states: int, seed: int, k_A: int = 1,
                          k_B: int | None = None) -> list[StateSpec]:
    """States ``(V_A x V_B) CNOT RY(theta_m) |00>`` with Tr(rho_A^n) equally spaced.

    For k_A = k_B = 1 the targets are exactly the grid values.  With more
    qubits the first A/B pair carries ``theta_m``, further pairs get random
    angles and Haar unitaries, and unpaired qubits get a Haar unitary.
    """
    if num_states < 1:
        raise ValueError("num_states must be >= 1")
    k_B = k_A if k_B is None else k_B
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_FAMILY_KEY, n)))
    out = []
    for target in family_targets(n, num_states):
        theta = theta_for_renyi(min(float(target), 1.0), n)
        v_a, v_b = haar_random_1q(rng), haar_random_1q(rng)
        gates = prepare_state_gates(theta, v_a, v_b, 0, k_A)
        for j in range(1, max(k_A, k_B)):
            if j < k_A and j < k_B:
                extra = rng.uniform(0, math.pi)
                gates += prepare_state_gates(extra, haar_random_1q(rng), haar_random_1q(rng), j, k_A + j)
            elif j < k_A:
                gates += compile_1q(haar_random_1q(rng), j)
            else:
                gates += compile_1q(haar_random_1q(rng), k_A + j)
        out.append(StateSpec(theta, v_a, v_b, float(target), tuple(gates)))
    return out


# --- running one state ----------------------------------------------------

def exact_renyi(gates, k_A: int, k_B: int, n: int, psi=None) -> float:
    rho = partial_trace_B(psi, k_A, k_B) if psi is not None else reduced_state_of_prep(gates, k_A, k_B)
    return power_trace(rho, n)


def _exact_shots(circuit: Circuit, noise, psi, n):
    probs = output_distribution(circuit, noise, psi)
    if noise is not None and noise.readout_flip_prob:
        probs = mixture.readout_confusion(probs, circuit.num_qubits, noise.readout_flip_prob)
    bits = index_to_bits(np.arange(probs.size), circuit.num_qubits)
    return ShotSet(bits, None, circuit.pairing, circuit.ancilla, n, probs)


def measure(circuit: Circuit, config: ExperimentConfig, state_index: int = 0, psi=None):
    """(post-selected or plain estimate, estimate without post-selection)."""
    noise = config.effective_noise()
    n = config.n
    alg = config.algorithm
    if config.exact and not config.postselect and circuit.pairing and alg != "jst":
        # exact parity without enumerating outcomes
        mean = mixture.parity_expectation(circuit, noise, psi, readout=True)
        est = estimate_from_mean(alg, mean, n)
        return est, est
    if config.exact:
        shots = _exact_shots(circuit, noise, psi, n)
    else:
        bits = sample_shots(circuit, config.shots, config.master_seed, noise, config.backend,
                            psi, state_index)
        shots = ShotSet(bits, None, circuit.pairing, circuit.ancilla, n)
    raw = estimate(alg, shots, n)
    if not config.postselect:
        return raw, raw
    return estimate(alg, shots.with_accepted(accept_mask(circuit, shots.bits)), n), raw


def _record(m, theta, exact, config, circuit, psi=None) -> ResultRecord:
    try:
        est, raw = measure(circuit, config, m, psi)
    except EmptyEstimateError as exc:
        return ResultRecord(m, theta, exact, None, 0.0, math.nan, None, f"empty: {exc}")
    rel = abs(est.R_n - exact) / exact if exact else math.inf
    return ResultRecord(m, theta, exact, est, est.accepted_fraction, rel, raw)


def run_experiment(config: ExperimentConfig) -> list[ResultRecord]:
    """One record per family state."""
    states = generate_state_family(config.n, config.num_states, config.master_seed,
                                   config.k_A, config.k_B)
    records = []
    for m, spec in enumerate(states):
        circuit = build_circuit(config.algorithm, config.n, config.k_A, spec.gates, config.k_B)
        exact = exact_renyi(spec.gates, config.k_A, config.k_B, config.n)
        records.append(_record(m, spec.theta, exact, config, circuit))
    if config.output_path:
        write_outputs(records, config, config.output_path)
    return records


@dataclass
class SpectrumResult:
    spectrum: Spectrum
    oracle_eigenvalues: list[float]
    renyi: list[float]
    records: list[ResultRecord]

    def to_dict(self) -> dict:
        return {
            "spectrum": self.spectrum.to_dict(),
            "oracle_eigenvalues": list(self.oracle_eigenvalues),
            "renyi": list(self.renyi),
            "records": [r.row() for r in self.records],
        }


def run_spectrum(config: ExperimentConfig, n_max: int, psi=None) -> SpectrumResult:
    """Estimate R_2..R_n_max on one state and reconstruct its top eigenvalues.

    The state is ``psi`` if given, else member ``config.state_index`` of the
    family built for ``config.n``.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    k_A, k_B = config.k_A, config.k_B
    if psi is None:
        states = generate_state_family(config.n, config.num_states, config.master_seed, k_A, k_B)
        spec = states[config.state_index]
        gates, theta = spec.gates, spec.theta
        rho = reduced_state_of_prep(gates, k_A, k_B)
    else:
        gates, theta = (), math.nan
        rho = partial_trace_B(psi, k_A, k_B)
    R = [1.0]
    records = []
    for n in range(2, n_max + 1):
        cfg = replace(config, n=n, output_path=None)
        circuit = build_circuit(cfg.algorithm, n, k_A, gates, k_B)
        rec = _record(cfg.state_index, theta, power_trace(rho, n), cfg, circuit, psi)
        if rec.estimate is None:
            raise EmptyEstimateError(f"no estimate for n={n}: {rec.error}")
        records.append(rec)
        R.append(rec.estimate.R_n)
    return SpectrumResult(spectrum_from_renyi(R, n_max), [float(x) for x in eigenvalues(rho)], R, records)


# --- output ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = r.row()
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _finite(xs):
    return [x for x in xs if x is not None and math.isfinite(x)]


def summarize(records, config: ExperimentConfig | None = None) -> dict:
    rel = _finite([r.relative_error for r in records])
    acc = [r.accepted_fraction for r in records if r.estimate is not None]
    out = {
        "num_records": len(records),
        "num_errors": sum(r.error is not None for r in records),
        "mean_rel_err": float(np.mean(rel)) if rel else None,
        "median_rel_err": float(np.median(rel)) if rel else None,
        "max_rel_err": float(np.max(rel)) if rel else None,
        "mean_accepted_fraction": float(np.mean(acc)) if acc else None,
        "num_clamped": sum(bool(r.estimate and r.estimate.clamped) for r in records),
    }
    if config is not None:
        out["config"] = config.to_dict()
    return out


def summary_json(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_outputs(records, config: ExperimentConfig, path) -> tuple[Path, Path]:
    """Write ``<path>`` (CSV) and ``<path stem>.json`` (summary)."""
    csv_path = Path(path)
    if csv_path.suffix != ".csv":
        csv_path = csv_path.with_suffix(".csv")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(records_to_csv(records))
    json_path = csv_path.with_suffix(".json")
    json_path.write_text(summary_json(summarize(records, config)))
    return csv_path, json_path


def sweep(base: ExperimentConfig, algorithms=("two_copy", "jst"), ns=(3, 4),
          seeds=(0, 1, 2, 3, 4), scopes=("all", "gates_only"), out_dir=None,
          progress=None) -> list[dict]:
    """Grid of runs; returns one summary per (scope, n, algorithm, seed).

    With ``out_dir`` every run writes its CSV/JSON there and a combined
    ``sweep.json`` is added.
    """
    rows = []
    for scope in scopes:
        for n in ns:
            for alg in algorithms:
                for seed in seeds:
                    cfg = replace(base, algorithm=alg, n=n, master_seed=seed, noise_scope=scope,
                                  output_path=None)
                    records = run_experiment(cfg)
                    if out_dir is not None:
                        write_outputs(records, cfg, Path(out_dir) / f"{alg}_n{n}_{scope}_seed{seed}.csv")
                    s = summarize(records)
                    s.update(algorithm=alg, n=n, noise_scope=scope, master_seed=seed)
                    rows.append(s)
                    if progress:
                        progress(s)
    if out_dir is not None:
        Path(out_dir, "sweep.json").write_text(summary_json({"runs": rows, "aggregate": aggregate(rows)}))
    return rows


def aggregate(rows) -> list[dict]:
    """Seed-averaged mean relative error per (scope, n, algorithm)."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r["mean_rel_err"] is not None:
            groups.setdefault((r["noise_scope"], r["n"], r["algorithm"]), []).append(r["mean_rel_err"])
    return [{"noise_scope": s, "n": n, "algorithm": a, "seeds": len(v), "mean_rel_err": float(np.mean(v))}
            for (s, n, a), v in sorted(groups.items())]
