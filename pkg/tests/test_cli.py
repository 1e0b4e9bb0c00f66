import json
import math

import numpy as np
import pytest

from hpz.cli import ENV_CONFIG, bundled_config, main
from hpz.output import read_csv


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def run(*argv):
    return main(list(argv))


def summary(out):
    return json.loads((out / "summary.json").read_text())["summary"]


def test_spread_variance(tmp_path):
    out = tmp_path / "o"
    assert run("spread", "--config", str(bundled_config("ohmic_high_spread")), "--out", str(out)) == 0
    cols, data = read_csv(out / "spread.csv")
    assert cols == ["t", "mean", "variance"]
    row = data[np.isclose(data[:, 0], 1.0)][0]
    assert row[2] == pytest.approx(0.571412, abs=1e-6)
    assert (out / "density.csv").exists()
    assert summary(out)["max_normalization_error"] < 1e-8


def test_cat_decoherence_time(tmp_path):
    out = tmp_path / "o"
    assert run("cat", "--config", str(bundled_config("thermal_cat")), "--out", str(out)) == 0
    s = summary(out)
    assert s["fit_law"] == "GaussT2"
    assert s["tau_d"] == pytest.approx(math.sqrt(8), rel=0.02)
    assert s["plateau"] == pytest.approx(math.exp(-1 / 8))


def test_coefficients_and_fluctuations_columns(tmp_path):
    out = tmp_path / "c"
    assert run("coefficients", "--config", str(bundled_config("srt_coefficients")), "--out", str(out)) == 0
    cols, _ = read_csv(out / "coefficients.csv")
    assert cols[:8] == ["t", "G", "Gdot", "Gddot", "two_gamma", "omega_sq", "f", "h"]
    out = tmp_path / "f"
    assert run("fluctuations", "--config", str(bundled_config("srt_zero_fluctuations")),
               "--out", str(out)) == 0
    cols, data = read_csv(out / "fluctuations.csv")
    assert cols == ["t", "s", "s_dot", "X2", "V2", "XV_sym", "cutoff_flag"]
    assert np.all(data[:, -1] == 0)


def test_missing_key_is_reported(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"physical": {"mass": 1.0, "bath_kind": "ohmic"},
                               "time_grid": {"t_end": 1.0, "n_points": 3}})
    assert run("coefficients", "--config", cfg, "--out", str(tmp_path / "o")) == 1
    assert "friction" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    cfg = write_cfg(tmp_path, '{\n  "physical": {\n    "mass": 1.0,\n  }\n}\n')
    assert run("spread", "--config", cfg, "--out", str(tmp_path / "o")) == 1
    assert "line 4" in capsys.readouterr().err


def test_unknown_top_level_key(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"physical": {"mass": 1, "bath_kind": "ohmic", "friction": 1},
                               "tme_grid": {}})
    assert run("spread", "--config", cfg, "--out", str(tmp_path / "o")) == 1
    assert "tme_grid" in capsys.readouterr().err


def test_zero_point_divergence_is_explained(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"physical": {"mass": 1, "bath_kind": "ohmic", "friction": 1},
                               "time_grid": {"t_start": 0.5, "t_end": 1.0, "n_points": 2}})
    assert run("fluctuations", "--config", cfg, "--out", str(tmp_path / "o")) == 1
    err = capsys.readouterr().err
    assert "zero-point divergence" in err and "cutoff" in err


def test_divergence_subcommand(tmp_path):
    out = tmp_path / "d"
    assert run("divergence", "--config", str(bundled_config("ohmic_divergence")), "--out", str(out)) == 0
    s = summary(out)
    assert s["relative_error"] < 0.02


def test_deterministic_outputs_and_manifest(tmp_path):
    cfg = str(bundled_config("ohmic_high_spread"))
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("spread", "--config", cfg, "--out", str(a)) == 0
    assert run("spread", "--config", cfg, "--out", str(b)) == 0
    manifest = json.loads((a / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"spread.csv", "density.csv", "summary.json"}
    for name in ("spread.csv", "density.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    text = (a / "spread.csv").read_text()
    assert "\r" not in text and "1.0000000000000000e+00" in text
    # restoring a deleted output from the manifest
    before = (a / "density.csv").read_bytes()
    (a / "density.csv").unlink()
    assert run("spread", "--config", manifest["config_path"], "--out", str(a)) == 0
    assert (a / "density.csv").read_bytes() == before


def test_compare(tmp_path, capsys):
    cfg_small = str(bundled_config("srt_spread_tau_small"))
    cfg_large = str(bundled_config("srt_spread_tau_large"))
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for cfg, out in ((cfg_small, a), (cfg_small, b), (cfg_large, c)):
        assert run("spread", "--config", cfg, "--out", str(out)) == 0
    assert run("compare", str(a), str(b), "--out", str(tmp_path / "same.json")) == 0
    same = json.loads((tmp_path / "same.json").read_text())
    assert same["files"]["spread.csv"]["variance"]["max_abs"] == 0.0
    assert run("compare", str(a), str(c)) == 0
    diff = json.loads(capsys.readouterr().out)
    assert 0 < diff["files"]["spread.csv"]["variance"]["max_rel"] < 0.1
    d = tmp_path / "d"
    assert run("cat", "--config", str(bundled_config("thermal_cat")), "--out", str(d)) == 0
    assert run("compare", str(a), str(d)) == 1


def test_env_var_overrides_config(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_CONFIG, str(bundled_config("ohmic_high_spread")))
    out = tmp_path / "o"
    assert run("spread", "--config", str(tmp_path / "missing.json"), "--out", str(out)) == 0
    assert (out / "spread.csv").exists()


def test_validate_small_grid(tmp_path):
    doc = json.loads(bundled_config("srt_validate").read_text())
    doc["validate"] = {"suites": ["moments", "pde"], "t_final": 0.3,
                       "grid": {"q_min": -12, "q_max": 12, "p_min": -20, "p_max": 20,
                                "n_q": 96, "n_p": 96, "dt": 2e-3}}
    out = tmp_path / "v"
    assert run("validate", "--config", write_cfg(tmp_path, doc), "--out", str(out)) == 0
    s = summary(out)
    assert s["ok"] and {r["scenario"] for r in s["reports"]} == {"moments", "pde"}
    cols, _ = read_csv(out / "pde_density.csv")
    assert cols == ["x", "pde", "exact"]


def test_failed_validation_exits_2(tmp_path, monkeypatch, capsys):
    import hpz.oracle.suites as suites
    from hpz.oracle import OracleReport

    def failing(config, state, t_final=1.0):
        rep = OracleReport("moments")
        rep.record("moment_rel_err", 1.0, 1e-5)
        return rep

    monkeypatch.setattr(suites, "moments_suite", failing)
    doc = json.loads(bundled_config("srt_validate").read_text())
    doc["validate"] = {"suites": ["moments"]}
    out = tmp_path / "v"
    assert run("validate", "--config", write_cfg(tmp_path, doc), "--out", str(out)) == 2
    assert "validation failed" in capsys.readouterr().err
    assert summary(out)["ok"] is False


def test_grid_mass_loss_is_an_error(tmp_path, capsys):
    doc = json.loads(bundled_config("srt_validate").read_text())
    doc["validate"] = {"suites": ["pde"], "t_final": 0.3,
                       "grid": {"q_min": -60, "q_max": 60, "p_min": -60, "p_max": 60,
                                "n_q": 64, "n_p": 64, "dt": 2e-3}}
    assert run("validate", "--config", write_cfg(tmp_path, doc), "--out", str(tmp_path / "v")) == 1
    assert "lost mass" in capsys.readouterr().err


def test_json_format_embeds_tables(tmp_path):
    out = tmp_path / "j"
    assert run("spread", "--config", str(bundled_config("ohmic_high_spread")), "--out", str(out),
               "--format", "json") == 0
    doc = json.loads((out / "summary.json").read_text())
    assert doc["data"]["spread"]["columns"] == ["t", "mean", "variance"]
    assert not (out / "spread.csv").exists()
    assert doc["units"]["hbar"] == 1.0


from hypothesis import given, strategies as st  # noqa: E402


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_csv_round_trip_is_lossless(values):
    import tempfile
    from pathlib import Path
    from hpz.output import write_csv
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "x.csv"
        write_csv(path, ["i", "v"], [[float(i), v] for i, v in enumerate(values)])
        _, data = read_csv(path)
    assert np.array_equal(data[:, 1], np.array(values))
