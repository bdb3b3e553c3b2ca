import csv
import subprocess
import sys

import numpy as np
import pytest

from dirac_qwalk.cli import main, parse_range
from dirac_qwalk.config import ConfigError, RunConfig
from dirac_qwalk.lattice import LatticeError, load_snapshot

FREE_1D = """\
n_x = 6
ell = 0.1
origin = -3.2, 0, 0
mass = 0.5
initial = gaussian
spinor = 1, 0, 0, 0
width = 0.3
momentum = 4, 0, 0
"""


def rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "free1d.cfg"
    path.write_text(FREE_1D)
    return path


def test_parse_range():
    assert parse_range("7") == [7]
    assert parse_range("7..9") == [7, 8, 9]


def test_config_parsing_and_errors():
    c = RunConfig.from_text(FREE_1D + "n_star = 1/2\nreduced_1d = yes\n")
    assert c.n_star == 0.5 and c.reduced_1d and c.origin == (-3.2, 0.0, 0.0)
    assert c.echo()[0] == "n_x=6"
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.from_text("colour = red\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("potential = coulomb\n")
    with pytest.raises(LatticeError, match="CFL"):
        RunConfig.from_text("n_star = 0.3\n")


def test_evolve_writes_series_and_snapshots(cfg, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["evolve", "--config", str(cfg), "--steps", "64", "--out", str(out), "--every", "32"]) == 0
    series = rows(tmp_path / "run_series.csv")
    assert len(series) == 65
    assert max(abs(float(r["norm"]) - 1) for r in series) < 1e-12
    for k in (0, 32, 64):
        assert (tmp_path / f"run_step{k:06d}.csv").exists()
    # streaming realizes H = -alpha.p + beta m, so the group velocity is -p/E
    assert float(series[-1]["mean_x"]) < float(series[0]["mean_x"]) - 0.04
    assert "final norm" in capsys.readouterr().out


def test_circuit_path_agrees_with_classical(cfg, tmp_path):
    main(["evolve", "--config", str(cfg), "--steps", "10", "--out", str(tmp_path / "c")])
    main(["qevolve", "--config", str(cfg), "--steps", "10", "--out", str(tmp_path / "q")])
    a = load_snapshot(tmp_path / "c_step000010.csv").amps
    b = load_snapshot(tmp_path / "q_step000010.csv").amps
    assert np.max(np.abs(a - b)) < 1e-11
    assert (tmp_path / "q_circuit.txt").read_text().startswith("# circuit")


def test_outputs_are_deterministic(tmp_path):
    cfg = tmp_path / "third.cfg"
    cfg.write_text(FREE_1D + "n_star = 2\n")
    for tag in ("a", "b"):
        assert main(["evolve", "--config", str(cfg), "--steps", "5", "--order", "3", "--out", str(tmp_path / tag)]) == 0
    assert (tmp_path / "a_series.csv").read_bytes() == (tmp_path / "b_series.csv").read_bytes()


def test_half_step_streaming_needs_a_larger_multiplier(cfg, tmp_path, capsys):
    assert main(["evolve", "--config", str(cfg), "--steps", "1", "--order", "3", "--out", str(tmp_path / "h")]) == 2
    assert "not exact" in capsys.readouterr().err


def test_bad_multiplier_exits_nonzero(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("n_x = 3\nn_star = 0.3\n")
    assert main(["evolve", "--config", str(path), "--steps", "1", "--out", str(tmp_path / "x")]) == 2
    assert "CFL" in capsys.readouterr().err


def test_missing_config_exits_nonzero(tmp_path):
    assert main(["evolve", "--config", str(tmp_path / "none.cfg"), "--steps", "1"]) == 2


def test_prepare_round_trip(cfg, tmp_path, capsys):
    main(["evolve", "--config", str(cfg), "--steps", "3", "--out", str(tmp_path / "r")])
    capsys.readouterr()
    assert main(["prepare", "--field", str(tmp_path / "r_step000003.csv"),
                 "--emit-circuit", str(tmp_path / "prep.txt")]) == 0
    fidelity = float(capsys.readouterr().out.split("fidelity")[1])
    assert fidelity > 1 - 1e-10
    assert (tmp_path / "prep.txt").read_text().count("\n") > 1


def test_feit_fleck_command(tmp_path):
    path = tmp_path / "ff.cfg"
    path.write_text("n_x = 2\nell = 0.35\nmass = 1\ninitial = uniform\nspinor = 1, 0, 1, 0\n")
    out = tmp_path / "ff"
    assert main(["feit-fleck", "--config", str(path), "--tf", "35", "--out", str(out), "--energy", "1"]) == 0
    peaks = [float(r["E"]) for r in rows(tmp_path / "ff_peaks.csv")]
    assert min(abs(p - 1) for p in peaks) < 0.1 and min(abs(p + 1) for p in peaks) < 0.1
    filt = rows(tmp_path / "ff_filter.csv")[0]
    assert float(filt["success_probability"]) >= float(filt["bound"])
    assert (tmp_path / "ff_filtered.csv").exists()


def test_dispersion_command(tmp_path):
    out = tmp_path / "disp.csv"
    assert main(["dispersion", "--nstar", "1/2", "--ell", "0.5", "--points", "11", "--out", str(out)]) == 0
    table = rows(out)
    assert len(table) == 11 and "doubling=0" in out.read_text()


def test_search_command(capsys):
    assert main(["search-splittings", "--m", "3", "--r", "7"]) == 0
    assert capsys.readouterr().out == "6,6,6,3,3,3,-2\n"
    main(["search-splittings", "--m", "3", "--r", "6"])
    assert capsys.readouterr().out == ""


def test_resources_command(tmp_path):
    out = tmp_path / "counts.csv"
    assert main(["resources", "--dims", "3", "--n", "2..5", "--epsilon", "1e-10", "--out", str(out)]) == 0
    table = rows(out)
    assert [int(r["width"]) for r in table] == [10, 14, 18, 22]
    dump = (tmp_path / "counts_step1d_n3.txt").read_text()
    assert "n_z = 3" in dump and "not materialized" in dump
    main(["resources", "--dims", "1", "--n", "2..3", "--epsilon", "0.1", "--out", str(out)])
    assert "lowered at epsilon" in (tmp_path / "counts_step1d_n3.txt").read_text()


def test_console_script_is_installed():
    done = subprocess.run([sys.executable, "-m", "dirac_qwalk.cli", "search-splittings", "--r", "7"],
                          capture_output=True, text=True, check=True)
    assert done.stdout.strip() == "6,6,6,3,3,3,-2"
