import filecmp
import os
from importlib.resources import files

import pytest

from msmix.cli import build_parser, main
from msmix.config import emit_config, load_config, with_overrides
from msmix.scenarios import PRESETS

DEMO = str(files("msmix") / "data" / "demo.toml")


def write_config(tmp_path, **solver):
    cfg = with_overrides(load_config(DEMO), **solver)
    path = tmp_path / "run.toml"
    path.write_text(emit_config(cfg))
    return str(path)


def test_help_lists_presets(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    out = capsys.readouterr().out
    for name in PRESETS:
        assert name in out


def test_diffusion_matrix_prints_table(capsys):
    assert main(["diffusion-matrix", DEMO, "--precision", "6"]) == 0
    out = capsys.readouterr().out
    # masses 1 and 2, unit kernel norm: k M / (2 pi m_i m_j) = 3 / (4 pi)
    assert "2.387324e-01" in out


def test_presets_and_show_config(capsys):
    assert main(["presets"]) == 0
    assert main(["show-config", DEMO]) == 0
    out = capsys.readouterr().out
    assert "two-bump" in out and "[solver]" in out


def test_oracle_check_passes(tmp_path):
    out = tmp_path / "oracle.csv"
    assert main(["oracle", "check", DEMO, "--states", "2", "--resolution", "8", "--output", str(out)]) == 0
    assert out.read_text().startswith("state,species_i,species_j")


def test_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[mixture]\nspecies = [{name = "A", mass = -1.0}, {name = "B", mass = 1.0}]\n')
    assert main(["macro", "run", str(bad)]) == 1
    assert "mixture.species[0].mass" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path):
    assert main(["show-config", str(tmp_path / "absent.toml")]) == 3


def test_numerical_failure_exit_code(tmp_path):
    cfg = write_config(tmp_path, heat_scheme="explicit", dt=1.0)
    out = tmp_path / "out"
    assert main(["macro", "run", cfg, "--output-dir", str(out)]) == 2
    assert (out / "diagnostics.csv").exists()
    assert (out / "last_valid_0000.csv").exists()


def test_unwritable_output_dir_exit_code(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["macro", "run", DEMO, "--output-dir", str(blocker)]) == 3


@pytest.mark.parametrize("argv", [["macro", "run"], ["moment", "run"], ["compare"]])
def test_runs_are_byte_identical(tmp_path, argv):
    cfg = write_config(tmp_path, t_end=0.002)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([*argv, cfg, "--output-dir", str(a)]) == 0
    assert main([*argv, cfg, "--output-dir", str(b)]) == 0
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors
