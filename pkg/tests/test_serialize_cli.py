"""JSON schema round-trips, config validation, and the CLI surface."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from cgbound.cli import main
from cgbound.report import default_config, run_report
from cgbound.serialize import (
    ConfigError,
    array_from_json,
    array_to_json,
    dumps_canonical,
    load_run_config,
)

SEED_SER = 0x5EED_0007


def _small_config(**overrides):
    cfg = default_config()
    cfg["verify"] = {"targets": ["gram_diff", "subnet_norm"], "trials": 150, "seed": 3}
    cfg["gap"] = {"suite_size": 2, "Ns": 12, "test_draws": 60, "seed": 23}
    cfg["sweep"] = {
        "ns_values": [100, 1000, 10000, 100000],
        "kj_values": [4, 16, 64, 256],
        "n_values": [4, 8, 16, 32, 64],
    }
    cfg.update(overrides)
    return cfg


class TestArraySchema:
    def test_round_trip(self):
        rng = np.random.default_rng(SEED_SER)
        for shape in ((3,), (2, 4)):
            a = rng.standard_normal(shape)
            np.testing.assert_array_equal(array_from_json(array_to_json(a)), a)

    def test_shape_mismatch_reports_path(self):
        with pytest.raises(ConfigError, match="model.matrix"):
            array_from_json({"shape": [2, 2], "data": [1.0]}, "model.matrix")

    def test_canonical_dump_is_stable(self):
        payload = {"b": 1.5, "a": [1, 2]}
        assert dumps_canonical(payload) == dumps_canonical(json.loads(dumps_canonical(payload)))


class TestRunConfig:
    def test_default_parses(self):
        cfg = load_run_config(default_config())
        assert cfg.model.m == 4 and cfg.model.n == 8
        assert cfg.network.variant == "drcgnet"
        assert cfg.loss.name == "mae"
        assert cfg.dataset_spec is not None

    def test_bundled_file_matches_default(self):
        from importlib import resources

        text = resources.files("cgbound").joinpath("configs/default.json").read_text()
        assert json.loads(text) == default_config()

    def test_explicit_matrix(self):
        cfg = _small_config()
        cfg["model"] = {
            "m": 2, "n": 3, "sigma": 0.0,
            "matrix": {"shape": [2, 3], "data": [1, 0, 0, 0, 1, 0]},
        }
        cfg["dataset"]["sigma_u"]["n"] = 3
        parsed = load_run_config(cfg)
        assert parsed.model.norm2 == pytest.approx(1.0)

    def test_validation_errors_carry_paths(self):
        bad = _small_config(geb={"Ns": 100, "eps_conf": 2.0})
        with pytest.raises(ConfigError, match="geb.eps_conf"):
            load_run_config(bad)

        bad = _small_config()
        del bad["model"]
        with pytest.raises(ConfigError, match="model"):
            load_run_config(bad)

        bad = _small_config()
        bad["network"]["filters"] = [1, 2]
        with pytest.raises(ConfigError, match="network"):
            load_run_config(bad)

        bad = _small_config(loss={"name": "ssim"})
        with pytest.raises(ConfigError, match="loss.tau"):
            load_run_config(bad)

        bad = _small_config()
        bad["dataset"]["Ns"] = 0
        with pytest.raises(ConfigError, match="dataset.Ns"):
            load_run_config(bad)

    def test_json_string_and_file_sources(self, tmp_path):
        text = json.dumps(_small_config())
        assert load_run_config(text).model.n == 8
        path = tmp_path / "cfg.json"
        path.write_text(text)
        assert load_run_config(str(path)).model.n == 8

    def test_invalid_json_rejected(self):
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_run_config("{broken")


class TestCli:
    def test_verify_pass_exit_zero(self, capsys):
        rc = main(["verify", "--target", "gram_diff", "--trials", "100", "--seed", "4"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload[0]["all_hold"] is True

    def test_bound_emits_json_and_table(self, capsys):
        rc = main(["bound", "--config", "default"])
        assert rc == 0
        out, err = capsys.readouterr()
        payload = json.loads(out)
        assert payload["total"] > 0
        assert "complexity term" in err

    def test_solve_and_forward(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(_small_config()))
        y_path = tmp_path / "y.json"
        y_path.write_text(json.dumps(array_to_json(np.array([0.4, -0.2, 0.1, 0.3]))))

        rc = main(["forward", "--config", str(cfg_path), "--y", str(y_path), "--param-seed", "5"])
        assert rc == 0
        trace = json.loads(capsys.readouterr().out)
        assert len(trace["u"]) == 3  # K + 1 estimates

        rc = main(["solve", "--config", str(cfg_path), "--y", str(y_path), "--param-seed", "5"])
        assert rc == 0
        est = json.loads(capsys.readouterr().out)["estimate"]
        np.testing.assert_allclose(
            array_from_json(est), array_from_json(trace["output"]), rtol=1e-12, atol=1e-15
        )

    def test_sweep_csv_columns(self, capsys):
        rc = main(["sweep", "--config", "default", "--axis", "ns"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "axis,term2,term3,total"
        assert len(lines) == 6

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(_small_config(geb={"eps_conf": 2.0})))
        rc = main(["bound", "--config", str(bad)])
        assert rc == 1
        assert "configuration error" in capsys.readouterr().err

    def test_entry_point_exists(self):
        proc = subprocess.run(
            [sys.executable, "-m", "cgbound.cli", "--help"] if False else ["cgbound", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "verify" in proc.stdout


class TestReport:
    def test_report_runs_and_reproduces_bytes(self, tmp_path):
        cfg = _small_config()
        code1 = run_report(load_run_config(cfg), str(tmp_path / "r1"))
        code2 = run_report(load_run_config(cfg), str(tmp_path / "r2"))
        assert code1 == 0 and code2 == 0
        names = sorted(os.listdir(tmp_path / "r1"))
        assert {"verify.json", "bound.json", "gaps.json", "summary.json"} <= set(names)
        for name in names:
            b1 = (tmp_path / "r1" / name).read_bytes()
            b2 = (tmp_path / "r2" / name).read_bytes()
            assert b1 == b2, name

    def test_report_cli(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg = _small_config()
        cfg.pop("sweep")
        cfg_path.write_text(json.dumps(cfg))
        rc = main(["report", str(cfg_path), "--out", str(tmp_path / "out")])
        assert rc == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["exit_code"] == 0 and summary["failures"] == []


class TestParameterSerialization:
    def test_round_trip(self):
        from cgbound.networks import sample_parameters
        from cgbound.serialize import parameters_from_json, parameters_to_json

        cfg = load_run_config(_small_config()).network
        theta = sample_parameters(cfg, 77)
        back = parameters_from_json(parameters_to_json(theta), cfg)
        np.testing.assert_array_equal(back.P.P, theta.P.P)
        for r1, r2 in zip(back.blocks, theta.blocks):
            for b1, b2 in zip(r1, r2):
                for x1, x2 in zip(b1, b2):
                    np.testing.assert_array_equal(np.asarray(x1), np.asarray(x2))

    def test_rejects_wrong_grid(self):
        from cgbound.networks import sample_parameters
        from cgbound.serialize import parameters_from_json, parameters_to_json

        cfg = load_run_config(_small_config()).network
        payload = parameters_to_json(sample_parameters(cfg, 77))
        payload["blocks"] = payload["blocks"][:1]
        with pytest.raises(ConfigError, match="blocks"):
            parameters_from_json(payload, cfg)

    def test_cli_accepts_explicit_params(self, tmp_path, capsys):
        from cgbound.networks import sample_parameters
        from cgbound.serialize import parameters_to_json

        raw = _small_config()
        cfg = load_run_config(raw)
        theta = sample_parameters(cfg.network, 5)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(raw))
        y_path = tmp_path / "y.json"
        y_path.write_text(json.dumps(array_to_json(np.array([0.4, -0.2, 0.1, 0.3]))))
        params_path = tmp_path / "theta.json"
        params_path.write_text(json.dumps(parameters_to_json(theta)))

        rc = main(["solve", "--config", str(cfg_path), "--y", str(y_path),
                   "--params", str(params_path)])
        assert rc == 0
        explicit = array_from_json(json.loads(capsys.readouterr().out)["estimate"])
        rc = main(["solve", "--config", str(cfg_path), "--y", str(y_path),
                   "--param-seed", "5"])
        assert rc == 0
        sampled = array_from_json(json.loads(capsys.readouterr().out)["estimate"])
        np.testing.assert_array_equal(explicit, sampled)


def test_report_exit_two_on_suite_failure(tmp_path, monkeypatch):
    import cgbound.report as report_mod
    from cgbound.verify import VerificationReport

    def failing(target, trials, dims=None, seed=0):
        return VerificationReport(target=target, trials=trials, passes=trials - 1,
                                  median_tightness=0.5, max_tightness=2.0, seed=seed)

    monkeypatch.setattr(report_mod, "verify_lipschitz", failing)
    cfg = _small_config()
    cfg.pop("sweep")
    code = run_report(load_run_config(cfg), str(tmp_path / "out"))
    assert code == 2
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["exit_code"] == 2
    assert any(f.startswith("verify:") for f in summary["failures"])
