import csv
import subprocess
import sys

import pytest
import yaml

from elmsync.cli import main
from elmsync.elm import load_model
from elmsync.harness.report import COLUMNS

TINY = {
    "eta_train": 0.05, "eta_test": 0.05, "n_train": 120, "n_test_trials": 30,
    "snr_grid_db": [12], "n_hidden": 24, "n_hidden_raw": 24, "chunk_size": 64,
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY))
    return path


def test_calibrate(capsys):
    assert main(["calibrate", "--target-evm", "40", "--trials", "50"]) == 0
    out = capsys.readouterr().out
    eta = float(out.split("eta=")[1])
    assert 0.04 < eta < 0.06


def test_calibrate_unreachable(capsys):
    assert main(["calibrate", "--target-evm", "100"]) == 2
    assert "unreachable" in capsys.readouterr().err


def test_train_then_eval(tmp_path, tiny_config, capsys):
    model_path = tmp_path / "m.elm"
    assert main(["train", "--config", str(tiny_config), "--out", str(model_path)]) == 0
    model = load_model(model_path)
    assert model.trained and model.n_hidden == 24
    out_csv = tmp_path / "curve.csv"
    assert main(["eval", "--config", str(tiny_config), "--model", str(model_path), "--out", str(out_csv)]) == 0
    with open(out_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(COLUMNS)
    assert rows[0]["n_trials"] == "30" and rows[0]["label_scheme"] == "isi_free"


def test_eval_sc_corr_without_model(tmp_path, tiny_config):
    cfg = tmp_path / "sc.yaml"
    cfg.write_text(yaml.safe_dump(dict(TINY, estimator="sc_corr")))
    assert main(["eval", "--config", str(cfg), "--out", str(tmp_path / "c.csv")]) == 0


def test_eval_elm_without_model_fails(tmp_path, tiny_config, capsys):
    assert main(["eval", "--config", str(tiny_config), "--out", str(tmp_path / "c.csv")]) == 2


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(yaml.safe_dump(dict(TINY, learning_rate=0.1)))
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "m.elm")]) == 2
    assert "learning_rate" in capsys.readouterr().err


def test_sweep_writes_csv_and_figure(tmp_path, tiny_config):
    outdir = tmp_path / "fig2"
    assert main(["sweep", "--scenario", "fig2", "--config", str(tiny_config), "--outdir", str(outdir)]) == 0
    assert len(list(outdir.glob("*.csv"))) == 5
    assert (outdir / "fig2.png").stat().st_size > 0
    # the emitted plot script re-renders from the CSVs on its own
    subprocess.run([sys.executable, str(outdir / "plot_fig2.py")], check=True, cwd=outdir)


def test_selftest_subcommand(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 11 and "FAIL" not in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "elmsync", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "sweep" in res.stdout
