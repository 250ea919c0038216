"""End-to-end checks of the command-line interface.

Everything runs through ``main(argv)`` in-process so exit codes and file
outputs are observable without spawning subprocesses.  Noiseless modes and
tiny grids keep the suite fast.
"""

import json

import pytest

from lcoupler.cli import main

SWEEP_HEADER = "g_hz,T_s,pop_emitter,pop_receiver,pop_other,saturated"
RB_HEADER = "length,seed,shots,survival,spectator_l1,spectator_l2"


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


class TestSweepCommand:
    def test_grid_csv_svg_manifest(self, tmp_path):
        code = run(
            tmp_path, "sweep", "--method", "satd",
            "--g", "1e6:4e6:4", "--T", "5e-8:4e-7:4",
        )
        assert code == 0
        csv = (tmp_path / "sweep_satd.csv").read_text()
        lines = csv.strip().split("\n")
        assert lines[0] == SWEEP_HEADER
        assert len(lines) == 1 + 16
        svg = (tmp_path / "sweep_satd.svg").read_text()
        assert svg.startswith("<svg")
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        for name in manifest["outputs"]:
            assert (tmp_path / name).exists()
        assert manifest["tool_version"]
        assert "config_sha256" in manifest

    def test_invalid_method_is_usage_error(self, tmp_path):
        code = run(
            tmp_path, "sweep", "--method", "bogus",
            "--g", "1e6:2e6:2", "--T", "1e-7:2e-7:2",
        )
        assert code == 2

    def test_malformed_grid_is_usage_error(self, tmp_path):
        code = run(
            tmp_path, "sweep", "--method", "satd",
            "--g", "1e6-4e6", "--T", "1e-7:2e-7:2",
        )
        assert code == 2


class TestNbCommand:
    ARGS = (
        "nb", "--noiseless", "--lengths", "2,4,8,16,32",
        "--seeds", "5", "--shots", "300", "--seed", "7",
    )

    def test_outputs_and_determinism(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run(a, *self.ARGS) == 0
        assert run(b, *self.ARGS) == 0
        csv_a = (a / "nb_dataset.csv").read_bytes()
        csv_b = (b / "nb_dataset.csv").read_bytes()
        assert csv_a == csv_b
        assert csv_a.decode().split("\n")[0] == RB_HEADER

    def test_noiseless_eps_is_tiny(self, tmp_path):
        assert run(tmp_path, *self.ARGS) == 0
        fit = json.loads((tmp_path / "nb_fit.json").read_text())
        assert fit["protocol"] == "NB"
        assert fit["eps"] < 1e-4
        assert fit["survival"]["rate_convention"] == "EPS = (1 - p) / 2"
        assert set(fit["leakage"]) == {"spectator_l1", "spectator_l2"}

    def test_odd_length_rejected(self, tmp_path, capsys):
        code = run(tmp_path, "nb", "--noiseless", "--lengths", "3,5")
        assert code == 2
        assert "even" in capsys.readouterr().err


class TestRbCommand:
    def test_interleaved_fit_has_both_decays(self, tmp_path):
        code = run(
            tmp_path, "rb", "--noiseless", "--lengths", "1,2,4",
            "--seeds", "2", "--shots", "100",
            "--interleave", "remote-cnot",
        )
        assert code == 0
        fit = json.loads((tmp_path / "rb_fit.json").read_text())
        assert fit["reference"]["decay"] == pytest.approx(1.0, abs=1e-9)
        assert fit["interleaved"]["decay"] == pytest.approx(1.0, abs=1e-9)
        assert fit["interleaved_epg"] == pytest.approx(0.0, abs=1e-9)
        assert (tmp_path / "rb_interleaved.csv").exists()

    def test_reference_only_by_default(self, tmp_path):
        code = run(
            tmp_path, "rb", "--noiseless", "--lengths", "1,2,4",
            "--seeds", "2", "--shots", "100",
        )
        assert code == 0
        fit = json.loads((tmp_path / "rb_fit.json").read_text())
        assert fit["interleaved"] is None
        assert not (tmp_path / "rb_interleaved.csv").exists()


class TestBellCommand:
    def test_noiseless_data_full_hits_unit_fidelity(self, tmp_path):
        code = run(tmp_path, "bell", "--variant", "data-full", "--noiseless")
        assert code == 0
        payload = json.loads((tmp_path / "bell_data-full.json").read_text())
        assert payload["raw_fidelity"] == pytest.approx(1.0, abs=1e-6)
        assert payload["optimized_fidelity"] == pytest.approx(1.0, abs=1e-6)
        assert payload["shots_per_setting"] is None
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert manifest["fidelity"] == pytest.approx(1.0, abs=1e-6)
        assert (tmp_path / "bell_data-full.svg").exists()

    def test_missing_variant_is_usage_error(self, tmp_path):
        assert run(tmp_path, "bell") == 2

    def test_sqrt_variant_noiseless(self, tmp_path):
        code = run(tmp_path, "bell", "--variant", "lqubit-sqrt", "--noiseless")
        assert code == 0
        payload = json.loads((tmp_path / "bell_lqubit-sqrt.json").read_text())
        assert payload["optimized_fidelity"] == pytest.approx(1.0, abs=1e-6)


class TestSvgHelpers:
    def test_write_svg_rejects_non_svg_content(self, tmp_path):
        from lcoupler.svg import write_svg

        with pytest.raises(ValueError):
            write_svg(tmp_path / "x.svg", "<html></html>")

    def test_heatmap_handles_nan_cells(self):
        import numpy as np

        from lcoupler.svg import heatmap_svg

        grid = np.array([[0.0, float("nan")], [0.5, 1.0]])
        doc = heatmap_svg([("panel", grid)], [1, 2], [3, 4], "x", "y")
        assert doc.startswith("<svg")
        assert "#b0b0b0" in doc  # NaN cells get the neutral fill


class TestConfigHandling:
    def test_env_var_fallback(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"transfer": {"total_duration_s": 210e-9}}))
        monkeypatch.setenv("LCOUPLER_CONFIG", str(cfg_path))
        out = tmp_path / "out"
        assert run(out, "bell", "--variant", "data-full", "--noiseless") == 0
        payload = json.loads((out / "bell_data-full.json").read_text())
        assert payload["optimized_fidelity"] == pytest.approx(1.0, abs=1e-6)

    def test_missing_config_file_is_exit_2(self, tmp_path, capsys):
        code = run(tmp_path, "nb", "--config", str(tmp_path / "nope.json"))
        assert code == 2
        assert "config error" in capsys.readouterr().err
