"""Tests for the command-line interface, mostly in process for speed."""

import dataclasses
import json
import subprocess
import sys

import numpy as np
import pytest

from torusavg import LemmaReport
from torusavg.cli import OUTPUT_DIR_ENV, main

TINY_CONFIG = """
[params]
T = 0.01
eps = 0.1

[grid]
n_modes = 16

[couplings]
kind = "constant"

[ensemble]
n_paths = 2
n_checkpoints = 3
"""


@pytest.fixture()
def tiny_config(tmp_path):
    p = tmp_path / "tiny.toml"
    p.write_text(TINY_CONFIG)
    return p


def read_json(path):
    return json.loads(path.read_text())


class TestVerifyLemmas:
    def test_clean_run(self, tmp_path, capsys):
        rc = main(["verify-lemmas", "--samples", "2000", "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.count("violations=0") == 5
        payload = read_json(tmp_path / "lemmas.json")
        assert payload["violations_total"] == 0
        assert payload["worst_margin"] >= -1e-12
        assert len(payload["reports"]) == 5
        assert "config" in payload and "config_sha256" in payload
        assert "threads" not in payload["config"]["ensemble"]

    def test_gamma_beyond_bound_is_config_error(self, tmp_path, capsys):
        rc = main(["verify-lemmas", "--gamma", "2.5", "--samples", "100", "--out", str(tmp_path)])
        assert rc == 1
        assert "gamma_bound" in capsys.readouterr().err
        assert not (tmp_path / "lemmas.json").exists()

    def test_violations_exit_two(self, tmp_path, monkeypatch):
        def fake(lemma_id, beta=3.0, gamma=0.5, samples=100_000, seed=0):
            return LemmaReport(lemma_id, beta, gamma, samples, 3, -1e-6, seed)

        monkeypatch.setattr("torusavg.cli.check_lemma", fake)
        rc = main(["verify-lemmas", "--samples", "100", "--out", str(tmp_path)])
        assert rc == 2

    def test_bad_samples(self, tmp_path):
        assert main(["verify-lemmas", "--samples", "0", "--out", str(tmp_path)]) == 1
        assert main(["verify-lemmas", "--samples", "-5", "--out", str(tmp_path)]) == 1


class TestConfigHandling:
    def test_unknown_section(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[nonsense]\nx = 1\n")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 1

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[params]\nwavelength = 2.0\n")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 1

    def test_unparseable_toml(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("params = [unclosed\n")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path)]) == 1

    def test_invalid_parameter_value(self, tiny_config, tmp_path):
        assert main(["simulate", "--config", str(tiny_config), "--eps", "1.5", "--out", str(tmp_path)]) == 1

    def test_usage_errors_exit_one(self, capsys):
        assert main(["sweep", "--kind", "bogus"]) == 1
        assert main(["no-such-command"]) == 1
        assert main(["--help"]) == 0
        capsys.readouterr()


class TestSimulate:
    def test_writes_ensemble_files(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "a"
        rc = main(["simulate", "--config", str(tiny_config), "--out", str(out)])
        assert rc == 0
        assert (out / "simulate.csv").exists()
        assert (out / "simulate_long.csv").exists()
        payload = read_json(out / "simulate.json")
        assert payload["kind"] == "coupled"
        assert payload["config"]["params"]["T"] == 0.01
        capsys.readouterr()

    def test_reruns_are_byte_identical(self, tiny_config, tmp_path, capsys):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(tiny_config), "--out", str(out_a)]) == 0
        assert main(["simulate", "--config", str(tiny_config), "--out", str(out_b)]) == 0
        for name in ("simulate.csv", "simulate_long.csv", "simulate.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
        capsys.readouterr()

    def test_thread_count_never_changes_bytes(self, tiny_config, tmp_path, capsys):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(tiny_config), "--out", str(out_a)]) == 0
        assert main(["simulate", "--config", str(tiny_config), "--threads", "4", "--out", str(out_b)]) == 0
        for name in ("simulate.csv", "simulate_long.csv", "simulate.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
        capsys.readouterr()

    def test_seed_changes_results(self, tiny_config, tmp_path, capsys):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(tiny_config), "--out", str(out_a)]) == 0
        assert main(["simulate", "--config", str(tiny_config), "--seed", "1", "--out", str(out_b)]) == 0
        assert (out_a / "simulate.csv").read_bytes() != (out_b / "simulate.csv").read_bytes()
        capsys.readouterr()


class TestOutputDir:
    def test_env_var_is_the_default(self, tiny_config, tmp_path, capsys, monkeypatch):
        env_dir = tmp_path / "fromenv"
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(env_dir))
        assert main(["verify-lemmas", "--samples", "200"]) == 0
        assert (env_dir / "lemmas.json").exists()
        capsys.readouterr()

    def test_flag_beats_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "fromenv"))
        out = tmp_path / "flag"
        assert main(["verify-lemmas", "--samples", "200", "--out", str(out)]) == 0
        assert (out / "lemmas.json").exists()
        assert not (tmp_path / "fromenv").exists()
        capsys.readouterr()


class TestFbar:
    def test_constant_couplings_report_direct_value(self, tiny_config, tmp_path, capsys):
        rc = main(["fbar", "--config", str(tiny_config), "--out", str(tmp_path)])
        assert rc == 0
        assert "method direct" in capsys.readouterr().out
        payload = read_json(tmp_path / "fbar.json")
        assert payload["value"] == 0.5
        assert payload["se"] == 0.0

    def test_file_input_validation(self, tiny_config, tmp_path, capsys):
        assert main(["fbar", "--config", str(tiny_config), "--u-from", "file", "--out", str(tmp_path)]) == 1
        missing = tmp_path / "none.npy"
        assert (
            main(["fbar", "--config", str(tiny_config), "--u-from", "file", "--u-file", str(missing), "--out", str(tmp_path)])
            == 1
        )
        bad = tmp_path / "bad.npy"
        np.save(bad, np.zeros(7, dtype=np.complex128))
        assert (
            main(["fbar", "--config", str(tiny_config), "--u-from", "file", "--u-file", str(bad), "--out", str(tmp_path)])
            == 1
        )
        capsys.readouterr()

    def test_tol_tightens_the_error_bar(self, tmp_path, capsys):
        cfgp = tmp_path / "nb.toml"
        cfgp.write_text('[grid]\nn_modes = 16\n[couplings]\nkind = "norm_based"\n')
        ufile = tmp_path / "state.npy"
        c = np.zeros(16, dtype=np.complex128)
        c[0] = 0.3
        c[1] = 0.2j
        np.save(ufile, c)
        ses = {}
        for tol, name in ((2e-2, "loose"), (1e-2, "tight")):
            out = tmp_path / name
            rc = main(
                [
                    "fbar",
                    "--config",
                    str(cfgp),
                    "--u-from",
                    "file",
                    "--u-file",
                    str(ufile),
                    "--tol",
                    str(tol),
                    "--out",
                    str(out),
                ]
            )
            assert rc == 0
            ses[name] = read_json(out / "fbar.json")["se"]
        ratio = ses["tight"] / ses["loose"]
        assert 0.3 < ratio < 0.7
        capsys.readouterr()

    def test_negative_tol_rejected(self, tiny_config, tmp_path):
        assert main(["fbar", "--config", str(tiny_config), "--tol", "-1", "--out", str(tmp_path)]) == 1


class TestSweep:
    def test_eps_sweep_constant_is_exactly_flat(self, tiny_config, tmp_path, capsys):
        rc = main(
            ["sweep", "--kind", "eps", "--values", "0.5", "0.3", "0.2", "--config", str(tiny_config), "--out", str(tmp_path)]
        )
        assert rc == 0
        payload = read_json(tmp_path / "sweep_eps.json")
        assert payload["error"] == [0.0, 0.0, 0.0]
        assert payload["monotone_2se"] is True
        capsys.readouterr()

    def test_too_few_values(self, tiny_config, tmp_path):
        rc = main(["sweep", "--kind", "eps", "--values", "0.5", "0.3", "--config", str(tiny_config), "--out", str(tmp_path)])
        assert rc == 1

    def test_khasminskii_writes_both_sweeps(self, tiny_config, tmp_path, capsys):
        rc = main(
            [
                "sweep",
                "--kind",
                "khasminskii",
                "--values",
                "0.001",
                "0.002",
                "0.005",
                "--config",
                str(tiny_config),
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        u_payload = read_json(tmp_path / "sweep_khasminskii_u.json")
        v_payload = read_json(tmp_path / "sweep_khasminskii_v.json")
        assert u_payload["kind"] == "khasminskii_u"
        # constant couplings: the fast state never reads u, so freezing it
        # changes nothing
        assert v_payload["error"] == [0.0, 0.0, 0.0]
        capsys.readouterr()

    def test_holder_sweep_runs(self, tiny_config, tmp_path, capsys):
        cfgp = tmp_path / "hold.toml"
        cfgp.write_text(TINY_CONFIG + "t_base = 0.005\n")
        rc = main(
            [
                "sweep",
                "--kind",
                "holder",
                "--values",
                "0.001",
                "0.002",
                "0.004",
                "--config",
                str(cfgp),
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        payload = read_json(tmp_path / "sweep_holder.json")
        assert payload["kind"] == "holder"
        assert len(payload["x"]) == 3
        capsys.readouterr()


class TestModuleEntry:
    def test_python_dash_m(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "torusavg", "verify-lemmas", "--samples", "500", "--out", str(tmp_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert (tmp_path / "lemmas.json").exists()
        assert proc.stdout.count("violations=0") == 5
