import json
from pathlib import Path

import pytest

import rabiqd.pipeline
from rabiqd.cli import (
    CSV_HEADER,
    bundled_config_path,
    load_run_config,
    load_sweep_spec,
    main,
    parse_n_list,
    sweep_csv_name,
)
from rabiqd.dynamics import ConfigError, DynamicsError

FAST_RUN = """
g = 0.4
kappa = 0.5
rwa = true
n_max = 3
t_max = 5.0
sample_interval = 1.0
integrator_rel_tol = 1e-8
integrator_abs_tol = 1e-11
"""

FAST_FULL = FAST_RUN.replace("rwa = true", "rwa = false")


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_run_config_defaults_and_overrides(tmp_path):
    cfg = load_run_config(_write(tmp_path, "a.cfg", "g = 0.2  # inline comment\nkappa = 7\n"))
    assert cfg.g == 0.2
    assert cfg.kappa == 7.0
    assert cfg.omega == 1.0
    assert cfg.n_max == 50


def test_load_run_config_rejects_unknown_key(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_run_config(_write(tmp_path, "a.cfg", "coupling = 0.2\n"))
    assert exc.value.field == "coupling"


def test_load_run_config_rejects_bad_value(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_run_config(_write(tmp_path, "a.cfg", "kappa = strong\n"))
    assert exc.value.field == "kappa"
    with pytest.raises(ConfigError) as exc:
        load_run_config(_write(tmp_path, "b.cfg", "rwa = maybe\n"))
    assert exc.value.field == "rwa"


def test_load_run_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.cfg")


def test_cli_run_rwa_vacuum_csv(tmp_path):
    cfg = _write(tmp_path, "run.cfg", FAST_RUN)
    out = tmp_path / "out.csv"
    assert main(["run", str(cfg), "-o", str(out), "--quiet", "--no-plot"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 7   # header + 6 samples
    for line in lines[1:]:
        fields = line.split(",")
        assert len(fields) == 9
        assert float(fields[1]) == 0.0   # discord
        assert float(fields[2]) == 0.0   # concurrence
    manifest = json.loads((tmp_path / "out.csv.manifest.json").read_text())
    assert manifest["sample_count"] == 6
    assert manifest["config"]["rwa"] is True
    assert manifest["terminal_record"]["discord"] == 0.0
    assert not (tmp_path / "out.png").exists()


def test_cli_run_renders_plot_by_default(tmp_path):
    cfg = _write(tmp_path, "run.cfg", FAST_RUN)
    out = tmp_path / "plotted.csv"
    assert main(["run", str(cfg), "-o", str(out), "--quiet"]) == 0
    assert (tmp_path / "plotted.png").exists()


def test_cli_run_invalid_config_exit_1(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.cfg", "kappa = -2.0\n")
    assert main(["run", str(cfg), "-o", str(tmp_path / "x.csv"), "--quiet"]) == 1
    assert "kappa" in capsys.readouterr().err


def test_cli_run_dynamics_failure_exit_2(tmp_path, capsys, monkeypatch):
    def boom(config, **kw):
        raise DynamicsError("invariant violation at t=1: trace deviation 1e-3",
                            t=1.0, trace_dev=1e-3, min_eig=0.0)
    monkeypatch.setattr(rabiqd.pipeline, "run", boom)
    cfg = _write(tmp_path, "run.cfg", FAST_RUN)
    assert main(["run", str(cfg), "-o", str(tmp_path / "x.csv"), "--quiet"]) == 2
    assert "invariant" in capsys.readouterr().err


def test_cli_run_io_failure_exit_3(tmp_path, capsys):
    cfg = _write(tmp_path, "run.cfg", FAST_RUN)
    out = tmp_path / "no" / "such" / "dir" / "x.csv"
    assert main(["run", str(cfg), "-o", str(out), "--quiet", "--no-plot"]) == 3


def test_cli_run_deterministic_and_manifest_roundtrip(tmp_path):
    cfg = _write(tmp_path, "run.cfg", FAST_FULL)
    out1, out2, out3 = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert main(["run", str(cfg), "-o", str(out1), "--quiet", "--no-plot"]) == 0
    assert main(["run", str(cfg), "-o", str(out2), "--quiet", "--no-plot"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    # feeding the manifest back in reproduces the CSV byte for byte
    manifest = str(out1) + ".manifest.json"
    assert main(["run", manifest, "-o", str(out3), "--quiet", "--no-plot"]) == 0
    assert out1.read_bytes() == out3.read_bytes()


def test_cli_csv_values_roundtrip_full_precision(tmp_path):
    cfg = _write(tmp_path, "run.cfg", FAST_FULL)
    out = tmp_path / "prec.csv"
    assert main(["run", str(cfg), "-o", str(out), "--quiet", "--no-plot"]) == 0
    records = rabiqd.pipeline.run_single(load_run_config(cfg))
    lines = out.read_text().splitlines()[1:]
    for line, rec in zip(lines, records):
        fields = [float(v) for v in line.split(",")]
        assert fields[0] == rec.t
        assert fields[1] == rec.discord
        assert fields[5] == rec.n_total


def test_cli_sweep(tmp_path):
    spec = _write(tmp_path, "sweep.cfg", """
label = demo
axis = kappa
values = 0.2, 1.0
g = 0.4
n_max = 3
t_max = 4.0
sample_interval = 1.0
integrator_rel_tol = 1e-8
integrator_abs_tol = 1e-11
""")
    out = tmp_path / "sweepout"
    assert main(["sweep", str(spec), "-o", str(out), "--quiet", "--threads", "2",
                 "--no-plot"]) == 0
    assert (out / "demo_kappa=0.2.csv").exists()
    assert (out / "demo_kappa=1.csv").exists()
    summary = (out / "demo_summary.csv").read_text().splitlines()
    assert summary[0] == "kappa," + CSV_HEADER
    assert len(summary) == 3
    manifest = json.loads((out / "demo_manifest.json").read_text())
    assert manifest["values"] == [0.2, 1.0]


def test_cli_sweep_empty_values_exit_1(tmp_path, capsys):
    spec = _write(tmp_path, "sweep.cfg", "label = d\naxis = g\nvalues =\n")
    assert main(["sweep", str(spec), "-o", str(tmp_path / "o"), "--quiet"]) == 1
    assert "values" in capsys.readouterr().err


def test_cli_sweep_missing_key_exit_1(tmp_path, capsys):
    spec = _write(tmp_path, "sweep.cfg", "axis = g\nvalues = 0.1\n")
    assert main(["sweep", str(spec), "-o", str(tmp_path / "o"), "--quiet"]) == 1
    assert "label" in capsys.readouterr().err


def test_cli_converge(tmp_path):
    cfg = _write(tmp_path, "c.cfg", """
g = 1e-4
kappa = 0.2
t_max = 20.0
sample_interval = 2.0
integrator_rel_tol = 1e-11
integrator_abs_tol = 1e-14
""")
    out = tmp_path / "conv.csv"
    assert main(["converge", str(cfg), "--n", "2:6:2", "-o", str(out), "--quiet",
                 "--no-plot"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,max_delta,converged"
    assert len(lines) == 3
    assert lines[1].startswith("2,")
    assert lines[1].endswith("true")
    manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
    assert manifest["converged_at"] == 2
    assert len(manifest["max_deltas_embedded"]) == 2


def test_cli_converge_single_n_exit_1(tmp_path, capsys):
    cfg = _write(tmp_path, "c.cfg", FAST_RUN)
    assert main(["converge", str(cfg), "--n", "10", "-o",
                 str(tmp_path / "c.csv"), "--quiet"]) == 1
    assert "n" in capsys.readouterr().err


def test_parse_n_list_forms():
    assert parse_n_list("5:55:5") == list(range(5, 56, 5))
    assert parse_n_list("2:4") == [2, 3, 4]
    assert parse_n_list("10,20,40") == [10, 20, 40]
    with pytest.raises(ConfigError):
        parse_n_list("10")
    with pytest.raises(ConfigError):
        parse_n_list("a:b")


def test_sweep_csv_name_pattern():
    assert sweep_csv_name("fig1b", "g", 0.25) == "fig1b_g=0.25.csv"
    assert sweep_csv_name("fig1a", "g", 7.5e-5) == "fig1a_g=7.5e-05.csv"


def test_bundled_configs_parse():
    for name in ("fig1a", "fig1b", "fig2", "fig3a", "fig3b"):
        spec = load_sweep_spec(bundled_config_path(name))
        assert spec.label == name
        assert len(spec.values) >= 2


@pytest.mark.slow
def test_cli_run_bad_cavity_reference_terminal_discord(tmp_path):
    # end-to-end CLI pass over the bad-cavity reference point; the steady
    # discord 0.33 is already locked in well before this shortened horizon
    cfg = _write(tmp_path, "badcav.cfg", """
g = 0.35
kappa = 20
omega0 = 1.01
n_max = 30
t_max = 150
sample_interval = 0.5
""")
    out = tmp_path / "badcav.csv"
    assert main(["run", str(cfg), "-o", str(out), "--quiet", "--no-plot"]) == 0
    last = out.read_text().splitlines()[-1].split(",")
    terminal_discord = float(last[1])
    assert abs(terminal_discord - 0.33) < 0.005
