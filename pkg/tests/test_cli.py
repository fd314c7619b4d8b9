import csv
import math

import numpy as np
import pytest
import yaml

from ionsqueeze import cli, protocols
from ionsqueeze.core import beryllium9
from ionsqueeze.errors import ConfigError


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_table(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def summary(out):
    return yaml.safe_load((out / "summary.yaml").read_text())


FREQ = """
protocol: freq_change
physical:
  omega0_hz: 1e6
freq_change:
  gamma_final: 1.0
  t_f_us: 0.5
  with_preparation: true
sample_points: 51
"""


def test_freq_change_run(tmp_path):
    out = tmp_path / "out"
    assert cli.main([str(write(tmp_path, FREQ)), "-o", str(out)]) == 0
    s = summary(out)
    assert abs(s["result"]["final_n_final_basis"]) < 1e-9
    assert s["checks"]["final_ground_state"]["pass"] is True
    assert s["result"]["r_p"] > 0 and "theta_m" in s["result"]
    header, data = read_table(out / "timeseries.csv")
    assert header == ["time_us", "gamma", "n_omega0", "n_final"]
    assert data.shape == (51, 4)
    assert data[-1, 0] == pytest.approx(0.5) and data[-1, 1] == pytest.approx(1.0)


def test_oracle_flag_cross_checks_freq_change(tmp_path):
    out = tmp_path / "out"
    cfg = FREQ.replace("sample_points: 51", "sample_points: 5\noracle_truncation: 64")
    assert cli.main([str(write(tmp_path, cfg)), "-o", str(out), "--oracle"]) == 0
    assert summary(out)["checks"]["fock_oracle"]["pass"] is True


def test_order_flag_overrides_config(tmp_path):
    out = tmp_path / "out"
    assert cli.main([str(write(tmp_path, FREQ)), "-o", str(out), "--order", "after"]) == 0
    s = summary(out)
    assert s["config"]["freq_change"]["order"] == "after"
    assert abs(s["result"]["final_n_final_basis"]) < 1e-9
    _, data = read_table(out / "timeseries.csv")
    assert data[-1, 3] > 1e-3  # the series shows the bare ramp before the final squeeze


def test_empty_duration_is_identity(tmp_path):
    # [TRIVIAL] zero-length run without any frequency change
    out = tmp_path / "out"
    cfg = "protocol: freq_change\nfreq_change:\n  gamma_final: 0\n  t_f_us: 0\n"
    assert cli.run(write(tmp_path, cfg), output=out) == 0
    _, data = read_table(out / "timeseries.csv")
    assert np.all(np.abs(data) < 1e-15)


def test_separation_run(tmp_path):
    # [TARGET] g_c/2pi within 2% of 92.6 kHz and separation within 1% of 100 um
    out = tmp_path / "out"
    cfg = """
protocol: separation
separation:
  t_p_us: 3
  t_s1_us: 0.5
  t_s3_us: 1
  eta_us: 0.5
  target_separation_um: 100
sample_points: 101
"""
    assert cli.run(write(tmp_path, cfg), output=out) == 0
    s = summary(out)["result"]
    assert s["g_com"]["hz"] == pytest.approx(92.6e3, rel=0.02)
    assert s["g_com"]["rad_s"] == pytest.approx(2 * math.pi * s["g_com"]["hz"])
    assert s["final_separation_um"] == pytest.approx(100, rel=0.01)
    header, data = read_table(out / "timeseries.csv")
    assert header[:3] == ["time_us", "pos_ion1_um", "pos_ion2_um"]
    assert "n_com_omega0" in header and "n_str_omega0" in header
    assert data.shape == (101, len(header))


SWEEP = """
protocol: sweep_freq_change
sweep_freq_change:
  gamma_final: 1.0
  t_f_us: {start: 0.001, stop: 5.0, num: 8, spacing: log}
"""


def test_sweep_inset(tmp_path):
    # [TARGET] starts near 1/8 and decays toward zero
    out = tmp_path / "out"
    assert cli.run(write(tmp_path, SWEEP), output=out) == 0
    header, data = read_table(out / "sweep.csv")
    assert header == ["t_f_us", "n_final"]
    assert data[0, 1] == pytest.approx(0.125, abs=1e-3)
    assert data[-1, 1] < 0.01
    assert summary(out)["result"]["monotone_decreasing"] is True


def test_sweep_with_preparation(tmp_path):
    out = tmp_path / "out"
    cfg = SWEEP.replace("spacing: log}", "spacing: log}\n  with_preparation: true")
    assert cli.run(write(tmp_path, cfg), output=out) == 0
    _, data = read_table(out / "sweep.csv")
    assert np.max(np.abs(data[:, 1])) < 1e-9


def test_single_point_sweep_equals_run(tmp_path):
    cfg = SWEEP.replace("{start: 0.001, stop: 5.0, num: 8, spacing: log}",
                        "{start: 0.5, stop: 0.5, num: 1}")
    out = tmp_path / "out"
    assert cli.run(write(tmp_path, cfg), output=out) == 0
    _, data = read_table(out / "sweep.csv")
    rep = protocols.run_frequency_change(beryllium9().omega0, 1.0, 0.5e-6, False)
    assert data[0, 1] == pytest.approx(rep.final_phonons_final, abs=1e-12)


def test_oracle_protocol(tmp_path):
    out = tmp_path / "out"
    cfg = "protocol: oracle_crosscheck\nseed: 3\noracle_crosscheck:\n  n_schedules: 2\n  truncation: 64\n"
    assert cli.run(write(tmp_path, cfg), output=out) == 0
    assert summary(out)["checks"]["oracle_agreement"]["pass"] is True


def test_deterministic_output(tmp_path):
    out = tmp_path / "out"
    path = write(tmp_path, FREQ)
    cli.run(path, output=out)
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    cli.run(path, output=out)
    assert first == {p.name: p.read_bytes() for p in out.iterdir()}


def test_summary_round_trip(tmp_path):
    out = tmp_path / "out"
    cli.run(write(tmp_path, FREQ), output=out)
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    copy = tmp_path / "again.yaml"
    copy.write_bytes(first["summary.yaml"])
    assert cli.run(copy) == 0
    assert first == {p.name: p.read_bytes() for p in out.iterdir()}


def test_env_var_sets_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.run(write(tmp_path, FREQ)) == 0
    assert (tmp_path / "env" / "summary.yaml").exists()


def test_unknown_key_reports_position(tmp_path, capsys):
    path = write(tmp_path, "protocol: freq_change\nfreq_change:\n  gamma_finl: 1\n")
    assert cli.run(path) == cli.EXIT_CONFIG
    assert "line 3, column 3" in capsys.readouterr().err
    with pytest.raises(ConfigError) as exc:
        cli.load_config(path)
    assert exc.value.line == 3 and exc.value.column == 3


def test_syntax_error_reports_position(tmp_path, capsys):
    assert cli.run(write(tmp_path, "protocol: [freq\n")) == 2
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize("text", [
    "protocol: teleport\n",
    "protocol: freq_change\nsample_points: 0\n",
    "protocol: freq_change\nphysical:\n  omega0_hz: -1\n",
    "protocol: freq_change\nfreq_change:\n  t_f_us: fast\n",
    "protocol: freq_change\nfreq_change:\n  order: during\n",
    "protocol: freq_change\nphysical:\n  species: Ca40\n",
    "protocol: sweep_freq_change\n",
    "- a\n- b\n",
])
def test_invalid_configs_exit_2(tmp_path, text):
    assert cli.run(write(tmp_path, text), output=tmp_path / "o") == 2


def test_missing_file_exit_2(tmp_path):
    assert cli.run(tmp_path / "nope.yaml") == 2


def test_domain_error_exit_3(tmp_path, capsys):
    text = "protocol: freq_change\nfreq_change:\n  gamma_final: -2\n"
    assert cli.run(write(tmp_path, text), output=tmp_path / "o") == 3
    assert "gamma_final" in capsys.readouterr().err


def test_under_truncation_exit_4(tmp_path):
    text = "protocol: oracle_crosscheck\noracle_crosscheck:\n  n_schedules: 3\n  truncation: 4\n"
    assert cli.run(write(tmp_path, text), output=tmp_path / "o") == 4


def test_custom_species(tmp_path):
    text = FREQ.replace("omega0_hz: 1e6", "omega0_hz: 1e6\n  species: Ca40\n  mass_amu: 39.96")
    cfg = cli.load_config(write(tmp_path, text))
    assert cfg.physical.mass == pytest.approx(39.96 * 1.66053906660e-27, rel=1e-9)


def test_yaml12_floats():
    assert yaml.load("x: 1e6", Loader=cli._Loader)["x"] == 1e6
    assert yaml.load("x: 3", Loader=cli._Loader)["x"] == 3
