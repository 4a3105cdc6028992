import json

import pytest

from viscolab.cli import main
from viscolab.config import ConfigError, parse_config
from viscolab.presets import PRESETS, default_config, resolve, run_preset


def _write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_file_fills_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, '[experiment]\npreset = "bands"\n'))
    assert cfg.params.nu == 1.0 and cfg.backend == "table"
    assert cfg.tolerances["partition_tol"] == 1e-15


def test_all_violations_reported(tmp_path):
    text = ('[experiment]\npreset = "duhamel"\n[params]\nnu = 0\ntypo = 1\n'
            '[time]\nt_end = "long"\n[tolerances]\nratio_lo = 0.9\n[extra]\n')
    with pytest.raises(ConfigError) as exc:
        parse_config(_write(tmp_path, text))
    msgs = exc.value.violations
    assert any("nu must be positive" in m for m in msgs)
    assert any(m.startswith("params.typo") for m in msgs)
    assert any(m.startswith("time.t_end") for m in msgs)
    assert any(m.startswith("tolerances.ratio_lo") for m in msgs)
    assert any(m.startswith("extra") for m in msgs)


def test_parse_error_has_position(tmp_path):
    with pytest.raises(ConfigError, match=r"line 2, column \d+"):
        parse_config(_write(tmp_path, '[experiment]\npreset = = "x"\n'))


def test_unknown_preset_in_file(tmp_path):
    with pytest.raises(ConfigError, match="unknown preset"):
        parse_config(_write(tmp_path, '[experiment]\npreset = "nope"\n'))


def test_registry_and_alias():
    assert resolve("symbol-check") == "symbol-oracle"
    assert {"thm32-l1-growth", "prop44-l2-decay", "linfty-decay", "highfreq-decay",
            "symbol-oracle", "duhamel", "nonlinear-box", "dispersion",
            "bands"} == set(PRESETS)
    with pytest.raises(KeyError):
        resolve("unknown")


def test_unknown_preset_exits_without_files(tmp_path, capsys):
    assert main(["unknown", "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()
    assert "unknown preset" in capsys.readouterr().err


def test_duhamel_preset_manifest(tmp_path):
    m = run_preset("duhamel", tmp_path)
    assert m.passed
    data = json.loads((tmp_path / "duhamel" / "manifest.json").read_text())
    assert data["passed"] and data["files"] == ["duhamel.csv"]
    assert data["config"]["params"]["nu"] == 1.0
    assert abs(data["metrics"]["sup_ratio"] - 1.0) < 0.01
    assert data["started"] <= data["finished"]


def test_symbol_oracle_preset(tmp_path):
    m = run_preset("symbol-check", tmp_path)
    assert m.passed and m.metrics["max_rel_error"] <= 1e-8


def test_determinism(tmp_path):
    for d in ("a", "b"):
        assert main(["dispersion", "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "dispersion" / "dispersion.csv").read_bytes()
    b = (tmp_path / "b" / "dispersion" / "dispersion.csv").read_bytes()
    assert a == b


def test_env_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("VISCOLAB_OUT", str(tmp_path / "env"))
    assert main(["bands", "--threads", "1"]) == 0
    assert (tmp_path / "env" / "bands" / "bands.csv").exists()


def test_failed_check_exit_code(tmp_path):
    cfg = _write(tmp_path, '[experiment]\npreset = "duhamel"\n[tolerances]\nratio_low = 1.01\n')
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    data = json.loads((tmp_path / "duhamel" / "manifest.json").read_text())
    assert not data["passed"]


def test_config_error_exit_code(tmp_path):
    cfg = _write(tmp_path, '[params]\nnu = 0\n')
    assert main(["bands", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_regime_abort_exit_code(tmp_path):
    cfg = _write(tmp_path, '[experiment]\npreset = "nonlinear-box"\n[recipe]\nepsilon = 1.0\n'
                 '[grid]\nN = 16\nR = 6.0\n')
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    data = json.loads((tmp_path / "nonlinear-box" / "manifest.json").read_text())
    assert data["status"] == "regime-abort" and not data["passed"]


def test_default_config_echo():
    cfg = default_config("highfreq-decay")
    assert cfg.grid.N == 64
    echo = cfg.echo()
    assert echo["experiment"]["preset"] == "highfreq-decay"
