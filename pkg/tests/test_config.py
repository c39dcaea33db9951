import numpy as np
import pytest
import pandas as pd

from os.path import abspath, dirname, join

from fracdecay import *
from fracdecay.base.config import flatten_config, parse_flat_config, save_config
from fracdecay.base.io import read_table, write_table


def _path(cfg):
    return abspath(join(dirname(__file__), cfg))


def test_presets():
    """Tests that every preset resolves to a valid configuration carrying its own parameters."""
    for preset in PRESETS:
        cfg = load_config(preset=preset)
        assert cfg.preset_name == preset

    cfg = load_config(preset="fig3")
    assert cfg.emitter.beta == 5.5e-8
    assert cfg.emitter.detuning == pytest.approx(1 - 8.309e-7)
    assert list(cfg.loss.delta_over_omega) == [0.0, 1e-10, 1e-9]
    assert cfg.lattice.eps_real == 11.76

    cfg = load_config()
    assert cfg.preset_name is None
    assert cfg.basis.count == 169

    with pytest.raises(ConfigError):
        load_config(preset="fig5")


def test_flat_config():
    """Tests that a flat 'section.key = value' file is typed like YAML and merged over the defaults."""
    parsed, origins = parse_flat_config(_path("./user_config/flat_lattice.txt"))
    assert origins["lattice.r_over_a"] == 2
    assert origins["emitter.beta"] == 5

    cfg = load_config(cfg=_path("./user_config/flat_lattice.txt"))
    assert cfg.lattice.r_over_a == 0.30
    assert cfg.basis.count == 59
    assert cfg.basis.n_bands == 12
    assert cfg.emitter.beta == 1e-7
    assert list(cfg.loss.alpha_labels) == ["lossless", "lossy"]
    assert cfg.run.threads == 2

    cfg = load_config(preset="fig3", cfg=_path("./user_config/vacuum_short.yaml"),
                      overrides=["run.threads=3"])
    assert cfg.decay.n_times == 31
    assert cfg.run.threads == 3
    assert cfg.loss.alpha_labels[1] == "3e-4 cm^-1"


def test_validation():
    """Tests that invalid configuration files are rejected with the file and line of the offending entry.
    The test will fail if any invalid file is accepted by config_schema or the consistency checks.
    """
    tests = {
            "./user_config/invalid_radius.txt": "invalid_radius.txt:3", #spheres outside the overlap range
            "./user_config/invalid_line.txt": "invalid_line.txt:2", #missing '='
            "./user_config/invalid_section.txt": "invalid_section.txt:3", #unknown section
            "./user_config/invalid_duplicate.txt": "invalid_duplicate.txt:3", #key given twice
            "./user_config/invalid_bare_section.txt": "invalid_bare_section.txt:1", #section without key
            "./user_config/invalid_detuning.yaml": "emitter.detuning", #band edge outside the window
            "./user_config/invalid_labels.yaml": "loss.alpha_labels", #one label per loss width
            "./user_config/invalid_yaml.yaml": "invalid_yaml.yaml", #YAML that does not parse
            "./user_config/missing.yaml": "not found",
            }
    for cfg, expected in tests.items():
        with pytest.raises(ConfigError) as e:
            load_config(cfg=_path(cfg))
        assert expected in str(e.value), cfg

    with pytest.raises(ConfigError) as e:
        load_config(overrides=["run.threads=["])
    assert "run.threads" in str(e.value)


def test_save_and_tables(tmp_path):
    """Tests the saved configuration and the table header written with the flattened parameters."""
    cfg = load_config(preset="vacuum")
    path = save_config(cfg, str(tmp_path / "run"))
    assert path.endswith(".yaml")

    meta = flatten_config(cfg)
    assert meta["emitter.beta"] == 5.5e-8
    assert meta["preset_name"] == "vacuum"

    frame = pd.DataFrame({"t": [0.0, 1.0], "population": [1.0, 0.5]})
    out = write_table(str(tmp_path / "out" / "table.dat"), frame,
                      dict(meta, strength=np.float64(0.84), bound=np.bool_(True), count=np.int64(3)))
    back, header = read_table(out)
    assert list(back.columns) == ["t", "population"]
    assert back["population"].tolist() == [1.0, 0.5]
    assert header["strength"] == "0.84"
    assert header["bound"] == "True"
    assert header["count"] == "3"
    assert header["dynamics.window_model"] == "vacuum"
