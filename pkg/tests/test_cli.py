import math
import subprocess
import sys

import numpy as np
import pytest

from mmwave_interference import cli, experiment
from mmwave_interference.exceptions import ConvergenceError
from mmwave_interference.experiment import CSV_HEADER, load_spec, preset, read_curve_csv, spec_from_dict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MINIMAL = """\
name = "tiny"

[network]
lambda_sf = 1e-3
rho = 1e-2
beamwidth = "{beam}"

[snr]
{snr}

[run]
engines = ["analytic", "montecarlo"]
trials = 5000
seed = 3
output_dir = "{out}"
"""


def write_config(tmp_path, beam="20 deg", snr="values = [0.0, 20.0, 40.0]", name="c.toml"):
    out = tmp_path / "out"
    path = tmp_path / name
    path.write_text(MINIMAL.format(beam=beam, snr=snr, out=out.as_posix()))
    return path, out


def stderr_lines(capsys):
    return [line for line in capsys.readouterr().err.splitlines() if line]


def test_run_writes_csv_manifest_and_plot_script(tmp_path, capsys):
    path, out = write_config(tmp_path)
    assert cli.main(["run", str(path)]) == 0
    csv_path = out / "tiny.csv"
    assert csv_path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    cols = read_curve_csv(csv_path)
    assert cols["snr_db"].tolist() == [0.0, 20.0, 40.0]
    assert np.all(cols["trials"] == 5000)
    assert np.all((cols["ber_analytic"] > 0) & (cols["ber_analytic"] < 0.5))
    assert (out / "plot_tiny.py").exists()
    compile((out / "plot_tiny.py").read_text(), "plot_tiny.py", "exec")

    manifest = tomllib.loads((out / "manifest.toml").read_text())
    info = manifest.pop("manifest")
    assert info["tool_version"] == experiment.__version__
    assert info["curves"]["tiny"]["file"] == "tiny.csv"
    # the manifest reloads to exactly the experiment that produced it
    assert spec_from_dict(manifest) == load_spec(path)


def test_rerun_from_manifest_reproduces_outputs(tmp_path):
    path, out = write_config(tmp_path)
    assert cli.main(["run", str(path)]) == 0
    again = tmp_path / "again"
    assert cli.main(["run", str(out / "manifest.toml"), "--output-dir", str(again)]) == 0
    assert (again / "tiny.csv").read_bytes() == (out / "tiny.csv").read_bytes()


def test_manifest_round_trip_of_preset(tmp_path):
    cfg_path = tmp_path / "fig3.toml"
    assert cli.main(["preset", "fig3", "--write-config", str(cfg_path)]) == 0
    assert load_spec(cfg_path) == preset("fig3")


def test_analytic_only_leaves_mc_columns_empty(tmp_path):
    path, out = write_config(tmp_path)
    assert cli.main(["run", str(path), "--engines", "analytic", "--no-plot-script"]) == 0
    cols = read_curve_csv(out / "tiny.csv")
    assert np.all(np.isnan(cols["ber_mc"])) and np.all(np.isnan(cols["trials"]))
    assert not (out / "plot_tiny.py").exists()


def test_runs_are_byte_identical(tmp_path):
    path, out = write_config(tmp_path)
    assert cli.main(["run", str(path), "--output-dir", str(tmp_path / "a")]) == 0
    assert cli.main(["run", str(path), "--output-dir", str(tmp_path / "b"), "--workers", "2"]) == 0
    assert (tmp_path / "a" / "tiny.csv").read_bytes() == (tmp_path / "b" / "tiny.csv").read_bytes()


def test_validate_reports_active_rates(tmp_path, capsys):
    cfg_path = tmp_path / "fig2.toml"
    cli.main(["preset", "fig2", "--write-config", str(cfg_path)])
    assert cli.main(["validate", str(cfg_path)]) == 0
    text = capsys.readouterr().out
    assert "experiment fig2: valid" in text
    for label, cfg in preset("fig2").cases():
        rate = 1e-5 if "1e-05" in label else (1e-4 if "0.0001" in label else 1e-3)
        x = cfg.rho * cfg.radius_d**2 * math.tan(cfg.half_beamwidth)
        expected = rate * math.pi * cfg.radius_d**2 * (1 - math.exp(-x)) / x
        line = next(l for l in text.splitlines() if f"curve {label}:" in l)
        assert float(line.split("mu_K=")[1]) == pytest.approx(expected, rel=1e-13)
    assert "80.000 -> 1e-08" in text


def test_empty_grid_is_a_config_error(tmp_path, capsys):
    path, _ = write_config(tmp_path, snr="values = []")
    assert cli.main(["run", str(path)]) == 1
    err = stderr_lines(capsys)
    assert len(err) == 1 and err[0].startswith("error:") and "SNR grid is empty" in err[0]


def test_flat_beam_is_a_config_error(tmp_path, capsys):
    path, _ = write_config(tmp_path, beam="180 deg")
    assert cli.main(["validate", str(path)]) == 1
    err = stderr_lines(capsys)
    assert len(err) == 1 and err[0].startswith("error:")


@pytest.mark.parametrize(
    "snr",
    ["values = [inf]", "start = 10.0\nstop = 0.0\nstep = 5.0", "values = [\"loud\"]"],
)
def test_bad_grids_are_config_errors(tmp_path, snr):
    path, _ = write_config(tmp_path, snr=snr)
    assert cli.main(["validate", str(path)]) == 1


def test_unknown_network_key_rejected(tmp_path):
    path, _ = write_config(tmp_path)
    path.write_text(path.read_text().replace("rho = 1e-2", "rho = 1e-2\nrhoo = 1.0"))
    assert cli.main(["validate", str(path)]) == 1


def test_malformed_toml_is_a_config_error(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("name = \n")
    assert cli.main(["validate", str(path)]) == 1


def test_missing_file_is_an_io_error(tmp_path, capsys):
    assert cli.main(["validate", str(tmp_path / "none.toml")]) == 3
    assert stderr_lines(capsys)[0].startswith("error:")


def test_unwritable_output_is_an_io_error(tmp_path):
    path, _ = write_config(tmp_path)
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", str(path), "--engines", "analytic", "--output-dir", str(blocker / "x")]) == 3


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    path, _ = write_config(tmp_path)

    def boom(spec):
        raise ConvergenceError("integral did not converge")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["run", str(path)]) == 2
    assert stderr_lines(capsys) == ["error: numerical failure: integral did not converge"]


def test_flag_overrides(tmp_path):
    path, _ = write_config(tmp_path)
    spec = cli._apply_flags(
        load_spec(path),
        cli.build_parser().parse_args(
            ["run", str(path), "--seed", "9", "--trials", "77", "--mode", "explicit", "--engines", "montecarlo"]
        ),
    )
    assert (spec.seed, spec.trials, spec.blockage_mode, spec.engines) == (9, 77, "explicit", ("montecarlo",))


def test_invalid_flag_values_are_config_errors(tmp_path):
    path, _ = write_config(tmp_path)
    assert cli.main(["run", str(path), "--trials", "0"]) == 1
    assert cli.main(["run", str(path), "--engines", "oracle"]) == 1


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "mmwave_interference.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "preset" in res.stdout and "validate" in res.stdout


def test_distance_law_option(tmp_path, capsys):
    path, _ = write_config(tmp_path)
    text = path.read_text()
    path.write_text(text.replace("seed = 3", "seed = 3\ndistance_law = \"uniform\""))
    assert load_spec(path).distance_law == "uniform"
    assert cli.main(["validate", str(path)]) == 0
    assert "distance_law=uniform" in capsys.readouterr().out
    path.write_text(text.replace("seed = 3", "seed = 3\ndistance_law = \"radial\""))
    assert cli.main(["validate", str(path)]) == 1
