import json

import numpy as np
import pytest

from kuramoto_inertia import ConfigError, global_order
from kuramoto_inertia.cli import main
from kuramoto_inertia.config import parse_config, resolve_config, sweep_children
from kuramoto_inertia.reports import read_snapshot


def base_config(**overrides):
    cfg = {
        "model": {"n": 4, "kappa": 1.0, "mass": 0.5, "friction": 1.0},
        "init": {"kind": "explicit",
                 "theta": [0.2, -0.1, 0.3, -0.4], "omega": [0.0, 0.0, 0.0, 0.0]},
        "integrator": {"dt": 0.001, "t_final": 1.0, "sample_every": 10},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


class TestParseConfig:
    def test_minimal_config_defaults(self):
        cfg = resolve_config({
            "model": {"n": 3, "kappa": 0.5, "mass": 1.0, "friction": 1.0},
            "integrator": {"dt": 0.01, "t_final": 1.0},
        })
        assert cfg.params.is_all_to_all()
        assert np.all(cfg.init.theta == 0.0)
        assert cfg.integrator.sample_every == 1
        assert cfg.integrator.scheme.value == "rk4"
        assert cfg.experiment == {"kind": "single"}
        assert cfg.output_formats == ("csv", "json")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="frobnicate"):
            resolve_config({
                "model": {"n": 2, "kappa": 1.0, "mass": 1.0, "friction": 1.0,
                          "frobnicate": 3},
                "integrator": {"dt": 0.01, "t_final": 1.0},
            })

    def test_asymmetric_capacity_names_pair(self):
        with pytest.raises(ConfigError, match=r"\(0,1\)"):
            resolve_config({
                "model": {"n": 2, "kappa": 1.0, "mass": 1.0, "friction": 1.0,
                          "capacity": {"kind": "explicit",
                                       "matrix": [[0.0, 1.0], [0.5, 0.0]]}},
                "integrator": {"dt": 0.01, "t_final": 1.0},
            })

    def test_invalid_json_diagnostics(self):
        with pytest.raises(ConfigError, match="line"):
            parse_config("{not json}")

    def test_seed_mandatory_for_draws(self):
        with pytest.raises(ConfigError, match="seed"):
            resolve_config({
                "model": {"n": 2, "kappa": 1.0,
                          "mass": {"kind": "uniform", "low": 0.5, "high": 1.5},
                          "friction": 1.0},
                "integrator": {"dt": 0.01, "t_final": 1.0},
            })

    def test_sweep_expansion(self):
        cfg = resolve_config(base_config(
            experiment={"kind": "sweep", "parameter": "model.kappa",
                        "values": [2.0, 0.5, 1.0]}))
        children = sweep_children(cfg)
        assert [v for v, _ in children] == [0.5, 1.0, 2.0]
        assert [c.params.coupling for _, c in children] == [0.5, 1.0, 2.0]
        assert all(c.experiment == {"kind": "single"} for _, c in children)

    def test_perturbed_uniform_capacity(self):
        cfg = resolve_config({
            "model": {"n": 6, "kappa": 1.0, "mass": 1.0, "friction": 1.0,
                      "capacity": {"kind": "perturbed_uniform", "a_bar": 0.2,
                                   "delta_row": 0.05, "seed": 3}},
            "integrator": {"dt": 0.01, "t_final": 1.0},
        })
        cap = cfg.params.capacity
        assert np.array_equal(cap, cap.T)
        assert np.max(np.abs(cap - 0.2).sum(axis=1)) <= 0.05 + 1e-12


class TestRunVerb:
    def test_artifacts_and_exit_code(self, tmp_path, capsys):
        cfg = base_config(analyses={"verdicts": ["T34"],
                                    "classify": {"tol_angle": 1e-3},
                                    "monitors": ["frequency_bound"]})
        path = write_config(tmp_path, cfg)
        rc = main(["run", str(path), "--out", str(tmp_path / "out")])
        assert rc == 0
        out = tmp_path / "out"
        for name in ("trajectory.csv", "final_state.csv", "summary.csv",
                     "report.json"):
            assert (out / name).exists()
        report = json.loads((out / "report.json").read_text())
        assert sorted(report) == ["bound_violations", "classification",
                                  "config_hash", "decay_fits", "sync_time",
                                  "timings", "verdicts"]
        header = (out / "trajectory.csv").read_text().splitlines()[0]
        assert header == ("t," + ",".join(f"theta_{i}" for i in range(4)) + ","
                          + ",".join(f"omega_{i}" for i in range(4))
                          + ",R_p,phi_p,E_K,E_P,D_theta,D_omega,F")

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = base_config()
        path = write_config(tmp_path, cfg)
        rc1 = main(["run", str(path), "--out", str(tmp_path / "a")])
        rc2 = main(["run", str(path), "--out", str(tmp_path / "b")])
        assert rc1 == rc2 == 0
        a = (tmp_path / "a" / "trajectory.csv").read_bytes()
        b = (tmp_path / "b" / "trajectory.csv").read_bytes()
        assert a == b
        ha = json.loads((tmp_path / "a" / "report.json").read_text())["config_hash"]
        hb = json.loads((tmp_path / "b" / "report.json").read_text())["config_hash"]
        assert ha == hb

    def test_violation_exit_code(self, tmp_path):
        # small m*kappa with a spread arc: the printed kinetic support bound
        # max(|omega|, m*kappa) is exceeded during the transient
        cfg = {
            "model": {"n": 16, "kappa": 0.5, "mass": 0.05, "friction": 1.0},
            "init": {"kind": "arc_uniform", "center": 0.0, "halfwidth": 0.4,
                     "omega_value": 0.0, "seed": 1},
            "integrator": {"dt": 0.001, "t_final": 2.0, "sample_every": 10},
            "analyses": {"monitors": ["support_bound"]},
        }
        path = write_config(tmp_path, cfg)
        rc = main(["run", str(path), "--out", str(tmp_path / "out")])
        assert rc == 2
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["bound_violations"][0]["monitor"] == "support_bound"

    def test_bad_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert main(["run", str(path)]) == 1
        assert "error" in capsys.readouterr().err

    def test_flag_overrides_change_hash(self, tmp_path):
        path = write_config(tmp_path, base_config())
        main(["run", str(path), "--out", str(tmp_path / "a")])
        main(["run", str(path), "--out", str(tmp_path / "b"), "--t-final", "2.0"])
        ha = json.loads((tmp_path / "a" / "report.json").read_text())["config_hash"]
        hb = json.loads((tmp_path / "b" / "report.json").read_text())["config_hash"]
        assert ha != hb
        last = (tmp_path / "b" / "trajectory.csv").read_text().splitlines()[-1]
        assert float(last.split(",")[0]) == 2.0


class TestSweepVerb:
    def test_kappa_sweep_flips_at_threshold(self, tmp_path):
        theta = [0.3, -0.2, 0.1, -0.25]
        omega = [0.1, -0.1, 0.05, -0.05]
        r0 = global_order(np.array(theta)).r
        kappa_star = (0.5 / 4) * float(np.sum(np.square(omega))) / r0**2
        values = [0.5 * kappa_star, 0.9 * kappa_star, kappa_star,
                  1.1 * kappa_star, 2.0 * kappa_star]
        cfg = {
            "model": {"n": 4, "kappa": 1.0, "mass": 0.5, "friction": 1.0},
            "init": {"kind": "explicit", "theta": theta, "omega": omega},
            "integrator": {"dt": 0.01, "t_final": 0.1},
            "analyses": {"verdicts": ["T34"]},
            "experiment": {"kind": "sweep", "parameter": "model.kappa",
                           "values": values},
        }
        path = write_config(tmp_path, cfg)
        rc = main(["sweep", str(path), "--out", str(tmp_path / "out")])
        assert rc == 0
        lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
        header = lines[0].split(",")
        col = header.index("verdict_T34")
        flags = [line.split(",")[col] for line in lines[1:]]
        assert flags == ["false", "false", "true", "true", "true"]

    def test_empty_values_header_only(self, tmp_path):
        cfg = base_config(experiment={"kind": "sweep", "parameter": "model.kappa",
                                      "values": []})
        path = write_config(tmp_path, cfg)
        rc = main(["sweep", str(path), "--out", str(tmp_path / "out")])
        assert rc == 0
        lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("parameter,value,config_hash")

    def test_run_verb_rejects_sweep_config(self, tmp_path, capsys):
        cfg = base_config(experiment={"kind": "sweep", "parameter": "model.kappa",
                                      "values": [1.0]})
        path = write_config(tmp_path, cfg)
        assert main(["run", str(path)]) == 1


class TestEnvironment:
    def test_out_dir_env_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KURAMOTO_OUT_DIR", str(tmp_path / "envout"))
        path = write_config(tmp_path, base_config())
        rc = main(["run", str(path)])
        assert rc == 0
        assert (tmp_path / "envout" / "report.json").exists()


class TestCheckVerb:
    def test_verdicts_without_simulation(self, tmp_path, capsys):
        cfg = base_config(analyses={"verdicts": ["T34", "T31"]})
        path = write_config(tmp_path, cfg)
        rc = main(["check", str(path)])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert {v["condition_id"] for v in payload["verdicts"]} == {"T34", "T31"}


class TestW2Verb:
    def test_distance_between_snapshots(self, tmp_path, capsys):
        cfg = base_config()
        path = write_config(tmp_path, cfg)
        main(["run", str(path), "--out", str(tmp_path / "a")])
        main(["run", str(path), "--out", str(tmp_path / "b"), "--t-final", "2.0"])
        capsys.readouterr()
        rc = main(["w2", str(tmp_path / "a" / "final_state.csv"),
                   str(tmp_path / "b" / "final_state.csv")])
        assert rc == 0
        out = capsys.readouterr().out.strip()
        value = float(out.split()[0])
        assert value >= 0.0
        assert "(exact)" in out

    def test_identical_snapshots_zero(self, tmp_path, capsys):
        path = write_config(tmp_path, base_config())
        main(["run", str(path), "--out", str(tmp_path / "a")])
        capsys.readouterr()
        rc = main(["w2", str(tmp_path / "a" / "final_state.csv"),
                   str(tmp_path / "a" / "final_state.csv")])
        assert rc == 0
        assert float(capsys.readouterr().out.split()[0]) == 0.0

    def test_snapshot_roundtrip(self, tmp_path):
        path = write_config(tmp_path, base_config())
        main(["run", str(path), "--out", str(tmp_path / "a")])
        theta, omega = read_snapshot(tmp_path / "a" / "final_state.csv")
        assert theta.shape == (4,)
        assert np.all(np.isfinite(omega))


class TestOtherExperiments:
    def test_stability_pair_run(self, tmp_path):
        cfg = {
            "model": {"n": 4, "kappa": 0.3, "mass": 0.05, "friction": 1.0},
            "init": {"kind": "explicit", "theta": [-0.2, -0.1, 0.1, 0.2],
                     "omega": [0.0, 0.0, 0.0, 0.0]},
            "integrator": {"dt": 0.001, "t_final": 3.0, "sample_every": 100},
            "experiment": {"kind": "stability_pair",
                           "init_b": {"kind": "explicit",
                                      "theta": [-0.1, -0.05, 0.05, 0.1],
                                      "omega": [0.0, 0.0, 0.0, 0.0]},
                           "fit_window": [1.0, 3.0]},
        }
        path = write_config(tmp_path, cfg)
        rc = main(["run", str(path), "--out", str(tmp_path / "out")])
        assert rc == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["experiment"]["hypothesis_ok"] is True
        assert report["experiment"]["max_increase"] <= 1e-9
        assert (tmp_path / "out" / "stability.csv").exists()

    def test_kinetic_sync_run(self, tmp_path):
        cfg = {
            "model": {"n": 10, "kappa": 0.05, "mass": 0.5, "friction": 1.0},
            "init": {"kind": "two_pole", "c1": 0.7, "phi_star": 0.0},
            "integrator": {"dt": 0.001, "t_final": 5.0, "sample_every": 500},
            "experiment": {"kind": "kinetic_sync"},
        }
        path = write_config(tmp_path, cfg)
        rc = main(["run", str(path), "--out", str(tmp_path / "out")])
        assert rc == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["classification"]["kind"] == "bipolar"
        assert report["experiment"]["c1c2"] == [0.7, 0.3]

    def test_meanfield_convergence_run(self, tmp_path):
        cfg = {
            "model": {"n": 16, "kappa": 0.5, "mass": 0.1, "friction": 1.0},
            "init": {"kind": "arc_uniform", "center": 0.0, "halfwidth": 0.4,
                     "omega_value": 0.0, "seed": 7},
            "integrator": {"dt": 0.01, "t_final": 1.0, "sample_every": 25},
            "experiment": {"kind": "meanfield_convergence", "n_list": [4, 8],
                           "n_ref": 16, "seeds": [0, 1]},
        }
        path = write_config(tmp_path, cfg)
        rc = main(["run", str(path), "--out", str(tmp_path / "out")])
        assert rc == 0
        lines = (tmp_path / "out" / "convergence.csv").read_text().splitlines()
        assert lines[0] == "seed,n,sup_w2,method"
        assert len(lines) == 5
