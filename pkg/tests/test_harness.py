import json
import math

import numpy as np
import pytest

from entspec.cli import main
from entspec.harness import (
    CSV_COLUMNS, ExperimentConfig, aggregate, family_targets, generate_state_family,
    records_to_csv, run_experiment, run_spectrum, summarize, sweep, write_outputs,
)
from entspec.noise import NoiseParams
from entspec.oracle import power_trace, reduced_state_of_prep

from conftest import haar_state


class TestFamily:
    def test_targets_n2(self):
        assert np.allclose(family_targets(2, 3), [0.5, 0.75, 1.0])

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_endpoints(self, n):
        fam = generate_state_family(n, 5, 0)
        assert fam[0].theta == pytest.approx(math.pi / 2) and fam[-1].theta == 0.0

    @pytest.mark.parametrize("n", [2, 3])
    def test_targets_hit(self, n):
        for spec in generate_state_family(n, 7, 3):
            R = power_trace(reduced_state_of_prep(spec.gates, 1, 1), n)
            assert abs(R - spec.target) < 1e-10

    def test_unpacks(self):
        theta, v_a, v_b = generate_state_family(2, 2, 0)[0]
        assert v_a.shape == (2, 2) and np.allclose(v_b.conj().T @ v_b, np.eye(2))

    def test_deterministic(self):
        a = generate_state_family(3, 4, 9)
        b = generate_state_family(3, 4, 9)
        assert all(np.array_equal(x.V_A, y.V_A) for x, y in zip(a, b))

    def test_fresh_unitaries(self):
        fam = generate_state_family(2, 3, 0)
        assert not np.allclose(fam[0].V_A, fam[1].V_A)

    def test_bigger_subsystems(self):
        fam = generate_state_family(2, 3, 0, k_A=2, k_B=2)
        rho = reduced_state_of_prep(fam[-1].gates, 2, 2)
        assert rho.dim == 4


class TestConfig:
    def test_defaults(self):
        c = ExperimentConfig()
        assert c.k_B == c.k_A and c.shots == 10_000 and c.num_states == 100

    def test_noise_strings(self):
        assert ExperimentConfig.from_dict({"noise": "full"}).noise == NoiseParams()
        g = ExperimentConfig.from_dict({"noise": "gates-only"})
        assert g.noise_scope == "gates_only" and g.effective_noise().readout_flip_prob == 0
        assert g.effective_noise().relax_rate == 0 and g.effective_noise().depol_cnot > 0

    def test_round_trip(self):
        c = ExperimentConfig(algorithm="jst", n=3, noise=NoiseParams())
        assert ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c

    @pytest.mark.parametrize("bad", [{"shots": 0}, {"num_states": 0}, {"algorithm": "x"},
                                     {"n": 1}, {"noise_scope": "some"}, {"extra": 1},
                                     {"algorithm": "bell_purity", "n": 3}])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(bad)


class TestRunExperiment:
    @pytest.mark.parametrize("alg,n", [("two_copy", 2), ("two_copy", 3), ("jst", 3), ("bell_purity", 2)])
    def test_exact_mode(self, alg, n):
        recs = run_experiment(ExperimentConfig(algorithm=alg, n=n, num_states=6, exact=True))
        assert len(recs) == 6 and max(r.relative_error for r in recs) < 1e-9

    def test_exact_mode_postselect(self):
        cfg = ExperimentConfig(algorithm="jst", n=2, num_states=4, exact=True, postselect=True)
        assert max(r.relative_error for r in run_experiment(cfg)) < 1e-9

    def test_sampled_noiseless(self):
        recs = run_experiment(ExperimentConfig(algorithm="jst", n=2, num_states=20, shots=4000))
        inside = [abs(r.estimate.R_n - r.exact_Rn) < 4 * r.estimate.sigma_pm1 + 1e-12 for r in recs]
        assert sum(inside) >= 19

    def test_postselect_reuses_shots(self):
        cfg = ExperimentConfig(algorithm="jst", n=2, num_states=3, shots=2000, noise=NoiseParams())
        plain = run_experiment(cfg)
        post = run_experiment(ExperimentConfig(**{**cfg.__dict__, "postselect": True}))
        for a, b in zip(plain, post):
            assert a.estimate.R_n == b.raw_estimate.R_n
            assert 0 < b.accepted_fraction < 1

    def test_empty_estimate_record(self, monkeypatch):
        import entspec.harness as h
        monkeypatch.setattr(h, "accept_mask", lambda circuit, bits: np.zeros(len(bits), bool))
        recs = run_experiment(ExperimentConfig(algorithm="jst", n=2, num_states=2, shots=10, postselect=True))
        assert all(r.estimate is None and r.error for r in recs)
        assert "empty" in records_to_csv(recs)

    def test_relative_error_nonnegative(self):
        recs = run_experiment(ExperimentConfig(n=2, num_states=5, shots=200, noise=NoiseParams()))
        assert all(r.relative_error >= 0 for r in recs)


class TestOutputs:
    def test_columns_and_rows(self, tmp_path):
        cfg = ExperimentConfig(n=2, num_states=4, shots=100, output_path=str(tmp_path / "r.csv"))
        run_experiment(cfg)
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert len(lines) == 5 and lines[0].split(",")[:7] == list(CSV_COLUMNS[:7])
        summary = json.loads((tmp_path / "r.json").read_text())
        assert summary["num_records"] == 4 and summary["config"]["n"] == 2

    def test_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            cfg = ExperimentConfig(algorithm="jst", n=2, num_states=3, shots=300, noise=NoiseParams(),
                                   postselect=True, master_seed=4)
            csv_path, json_path = write_outputs(run_experiment(cfg), cfg, tmp_path / f"{name}.csv")
            outs.append((csv_path.read_bytes(), json_path.read_bytes()))
        assert outs[0] == outs[1]

    def test_seed_changes_output(self):
        a = records_to_csv(run_experiment(ExperimentConfig(n=2, num_states=2, shots=100, master_seed=0)))
        b = records_to_csv(run_experiment(ExperimentConfig(n=2, num_states=2, shots=100, master_seed=1)))
        assert a != b

    def test_summary(self):
        s = summarize(run_experiment(ExperimentConfig(n=2, num_states=3, exact=True)))
        assert s["num_records"] == 3 and s["num_errors"] == 0 and s["mean_rel_err"] < 1e-9


class TestSweep:
    def test_grid(self, tmp_path):
        base = ExperimentConfig(num_states=2, shots=50, noise=NoiseParams())
        rows = sweep(base, ("two_copy", "jst"), (2,), (0, 1), ("all", "gates_only"), tmp_path)
        assert len(rows) == 8 and (tmp_path / "sweep.json").exists()
        agg = aggregate(rows)
        assert len(agg) == 4 and all(a["seeds"] == 2 for a in agg)


class TestSpectrum:
    def test_product_state(self):
        res = run_spectrum(ExperimentConfig(exact=True), 2, psi=np.array([1, 0, 0, 0]))
        assert np.allclose(res.spectrum.eigenvalues, [1, 0], atol=1e-8)

    def test_family_member(self):
        res = run_spectrum(ExperimentConfig(algorithm="jst", n=2, num_states=5, state_index=1, exact=True), 2)
        assert np.allclose(res.spectrum.eigenvalues, res.oracle_eigenvalues, atol=1e-8)

    def test_two_qubit_full(self, rng):
        psi = haar_state(4, rng)
        res = run_spectrum(ExperimentConfig(k_A=2, exact=True), 4, psi=psi)
        assert np.allclose(res.spectrum.eigenvalues, res.oracle_eigenvalues, atol=1e-8)
        assert len(res.records) == 3

    def test_bad_n_max(self):
        with pytest.raises(ValueError):
            run_spectrum(ExperimentConfig(), 1)


class TestCLI:
    def test_run(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        assert main(["run", "--algorithm", "jst", "--n", "2", "--num-states", "3", "--shots", "200",
                     "--noise", "full", "--postselect", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 4
        assert json.loads(capsys.readouterr().out)["num_records"] == 3

    def test_run_stdout_csv(self, capsys):
        assert main(["run", "--n", "2", "--num-states", "2", "--exact"]) == 0
        assert capsys.readouterr().out.startswith("m,theta,exact_Rn")

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"algorithm": "jst", "n": 3, "num_states": 2, "exact": True}))
        assert main(["run", "--config", str(cfg), "--num-states", "3"]) == 0
        out = capsys.readouterr().out
        assert "\n2," in out and "\n3," not in out
        assert main(["run", "--config", str(cfg)]) == 0
        assert "\n2," not in capsys.readouterr().out

    def test_sweep(self, tmp_path, capsys):
        assert main(["sweep", "--num-states", "2", "--shots", "50", "--ns", "2", "--seeds", "0",
                     "--scopes", "all", "--out", str(tmp_path)]) == 0
        agg = json.loads(capsys.readouterr().out)["aggregate"]
        assert {a["algorithm"] for a in agg} == {"two_copy", "jst"}

    def test_spectrum(self, capsys):
        assert main(["spectrum", "--algorithm", "jst", "--n", "2", "--num-states", "4",
                     "--exact", "--n-max", "2"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert np.allclose(out["spectrum"]["eigenvalues"], out["oracle_eigenvalues"], atol=1e-8)

    def test_oracle(self, capsys):
        assert main(["oracle", "--theta", str(math.pi / 2), "--haar", "--seed", "2"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["renyi"]["3"] == pytest.approx(0.25) and out["entropy"]["2"] == pytest.approx(math.log(2))

    def test_oracle_family(self, capsys):
        assert main(["oracle", "--n", "2", "--num-states", "3", "--state-index", "1"]) == 0
        assert json.loads(capsys.readouterr().out)["renyi"]["2"] == pytest.approx(0.75)

    def test_bad_input(self, capsys):
        assert main(["run", "--algorithm", "bell_purity", "--n", "3"]) == 2
        assert "error" in capsys.readouterr().err
