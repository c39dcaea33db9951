import numpy as np
import pytest

from os.path import abspath, dirname, exists, join

from fracdecay import *
from fracdecay import cli
from fracdecay.base.io import read_table


def _path(cfg):
    return abspath(join(dirname(__file__), cfg))


def test_dry_run(capsys):
    """Tests that a dry run prints the resolved configuration and writes nothing."""
    assert cli.main(["decay", "--preset", "fig3", "--dry-run"]) == 0
    out = capsys.readouterr().out
    assert "emitter:" in out
    assert "preset_name: fig3" in out


def test_exit_codes(tmp_path, monkeypatch):
    """Tests the exit codes for invalid input and for numerical failures."""
    out = str(tmp_path)
    assert cli.main(["bands", "--config", _path("./user_config/invalid_radius.txt"), "--out", out]) == 2
    assert cli.main(["bands", "--threads", "0", "--out", out]) == 2

    def fail(cfg):
        raise NumericalError("pole search did not converge", diagnostics={"iterations": 100})

    monkeypatch.setitem(cli.RUNNERS, "decay", fail)
    assert cli.main(["decay", "--preset", "vacuum", "--out", out]) == 3

    with pytest.raises(SystemExit):
        cli.main(["decay", "--preset", "fig9"])


def test_decay_command(tmp_path):
    """Tests the decay command in vacuum: one file per loss label, exponential population and the pole in the header."""
    out = str(tmp_path)
    code = cli.main(["decay", "--preset", "vacuum", "--config", _path("./user_config/vacuum_short.yaml"),
                     "--out", out])
    assert code == 0
    path = join(out, "decay_vacuum.dat")
    assert exists(path)

    frame, meta = read_table(path)
    assert list(frame.columns) == ["t", "t_seconds", "population", "pole_part"]
    assert len(frame) == 31
    rate = 2 * np.pi * 5.5e-8
    assert np.allclose(frame["population"], np.exp(-rate * frame["t"]), rtol=1e-3)
    # |a|^2 = 1/|beta G'(omega0) - i|^2, below one by 2 beta (ln(C - 1) - 1) from the Lamb-shift slope
    log_term = np.log(CUTOFF - 1.0) - CUTOFF / (CUTOFF - 1.0)
    strength = 1.0 / ((np.pi * 5.5e-8)**2 + (1.0 + 5.5e-8 * log_term)**2)
    assert float(meta["strength"]) == pytest.approx(strength, abs=1e-9)
    assert 1.0 - strength == pytest.approx(1.156e-6, rel=1e-3)
    assert meta["alpha_label"] == "vacuum"
    assert meta["preset_name"] == "vacuum"


def test_bands_command(tmp_path):
    """Tests the band structure command on the empty lattice along Γ-X-W."""
    out = str(tmp_path)
    code = cli.main(["bands", "--preset", "empty_lattice", "--config", _path("./user_config/bands_small.yaml"),
                     "--out", out, "--threads", "2"])
    assert code == 0
    frame, meta = read_table(join(out, "bands.dat"))
    assert len(frame) == 7 * 4
    assert meta["basis.actual_count"] == "15"

    gamma = frame[frame["k_index"] == 0]["omega"].to_numpy()
    assert np.allclose(gamma[:2], 0, atol=1e-6)
    x_point = frame[frame["k_index"] == 3]["omega"].to_numpy()
    assert np.allclose(x_point, 1.0)


def test_df_scan_command(tmp_path):
    """Tests the D_f scan command without loss: the threshold limit is flagged and the resolved strength falls with βK."""
    out = str(tmp_path)
    code = cli.main(["df-scan", "--preset", "fig4", "--config", _path("./user_config/df_small.yaml"), "--out", out])
    assert code == 0
    frame, meta = read_table(join(out, "df_scan.dat"))
    assert list(frame.columns) == ["beta_k", "delta_over_omega", "alpha_label", "d_f", "detuning",
                                   "limit", "d_f_resolved"]
    assert len(frame) == 3
    assert np.all(frame["limit"] == 1)
    assert np.all(frame["d_f"] == 0.0)
    resolved = frame["d_f_resolved"].to_numpy()
    assert np.all(np.diff(resolved) < 0)
    assert resolved[0] > 0.98
    assert meta["preset_name"] == "fig4"


def test_ldos_loss_curves():
    """Tests that an absorbing backbone adds a curve broadened by δ = ω_BE (ε_I/ε_R) f / 2 to the configured widths."""
    cfg = load_config(preset="fig1", overrides=["lattice.eps_imag=0.01176"])
    spec = LatticeSpec.from_config(cfg.lattice)
    losses = dict(cli._loss_models(cfg, spec, 0.5, 0.8))
    assert list(losses) == ["lossless", "weak", "strong", "lattice"]
    assert losses["lattice"].delta == pytest.approx(0.8 * 1e-3 * 0.5 / 2)
    assert losses["lattice"].relative_width == pytest.approx(2.5e-4)
    assert losses["lattice"].f == 0.5
    assert losses["weak"].delta == pytest.approx(0.8e-4)

    cfg = load_config(preset="fig1")
    spec = LatticeSpec.from_config(cfg.lattice)
    assert "lattice" not in dict(cli._loss_models(cfg, spec, 0.5, 0.8))
