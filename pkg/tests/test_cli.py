import json
import math

import numpy as np
import pytest

from wcdrbm import RbmParams, load_dataset, save_checkpoint, save_dataset
from wcdrbm.bits import all_states
from wcdrbm.cli import (EXIT_BAD_CONFIG, EXIT_MISSING_INPUT, EXIT_NUMERIC,
                        EXIT_OK, main)
from wcdrbm.datasets import Dataset


@pytest.fixture
def bs09_file(tmp_path):
    path = tmp_path / "bs09.ds"
    assert main(["gen-data", "--name", "BS09", "--out", str(path)]) == EXIT_OK
    return path


def test_gen_data_bs16(tmp_path, capsys):
    out = tmp_path / "bs16.ds"
    assert main(["gen-data", "--name", "BS16", "--out", str(out)]) == EXIT_OK
    assert "30 states" in capsys.readouterr().out
    dataset = load_dataset(out)
    assert len(dataset) == 30 and dataset.n_bits == 16


def test_gen_data_bad_name(tmp_path, capsys):
    code = main(["gen-data", "--name", "BS25", "--out", str(tmp_path / "x.ds")])
    assert code == 2  # argparse rejects unknown choices


def test_train_missing_dataset(tmp_path, capsys):
    code = main(["train", "--dataset", str(tmp_path / "missing.ds"),
                 "--estimator", "cd", "--hidden", "4", "--sigma", "0.1",
                 "--lr", "0.05", "--epochs", "10", "--seed", "0",
                 "--out", str(tmp_path / "run")])
    assert code == EXIT_MISSING_INPUT
    assert "dataset not found" in capsys.readouterr().err


def test_train_and_reproducibility(tmp_path, bs09_file):
    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        code = main(["train", "--dataset", str(bs09_file),
                     "--estimator", "wcd", "--k", "2", "--hidden", "9",
                     "--sigma", "0.1", "--lr", "0.05", "--momentum", "0.9",
                     "--epochs", "200", "--seed", "7", "--stride", "50",
                     "--out", str(out)])
        assert code == EXIT_OK
        outs.append(out)
    trace1 = (outs[0] / "kl_trace.csv").read_bytes()
    trace2 = (outs[1] / "kl_trace.csv").read_bytes()
    assert trace1 == trace2
    assert trace1.decode().splitlines()[0] == "epoch,kl"
    assert len(trace1.decode().splitlines()) == 5  # header + 4 eval points
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["config"]["estimator"] == "wcd"
    assert not summary["failed"]
    assert (outs[0] / "best_checkpoint.json").exists()
    assert (outs[0] / "final_checkpoint.json").exists()
    assert (outs[0] / "run_meta.json").exists()
    # the deterministic artifacts must not embed timing
    assert b"wall" not in (outs[0] / "summary.json").read_bytes()


def test_train_config_file_precedence(tmp_path, bs09_file):
    config = tmp_path / "run.cfg"
    config.write_text(
        "estimator = wcd\nk = 2\nhidden = 9\nsigma = 0.1\n"
        "lr = 0.05\nepochs = 100\nseed = 3\nstride = 50\n")
    out1 = tmp_path / "from-config"
    assert main(["train", "--dataset", str(bs09_file), "--config", str(config),
                 "--out", str(out1)]) == EXIT_OK
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["config"]["seed"] == 3
    # CLI flag overrides the file value
    out2 = tmp_path / "override"
    assert main(["train", "--dataset", str(bs09_file), "--config", str(config),
                 "--seed", "5", "--out", str(out2)]) == EXIT_OK
    summary2 = json.loads((out2 / "summary.json").read_text())
    assert summary2["config"]["seed"] == 5


def test_train_divergent_exit_code(tmp_path, bs09_file):
    code = main(["train", "--dataset", str(bs09_file), "--estimator", "cd",
                 "--hidden", "4", "--sigma", "0.1", "--lr", "0.1",
                 "--decay", "1e150", "--epochs", "30", "--seed", "0",
                 "--out", str(tmp_path / "bad")])
    assert code == EXIT_NUMERIC


def test_bad_config_file(tmp_path, bs09_file, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("unknown_key = 3\n")
    code = main(["train", "--dataset", str(bs09_file), "--config", str(config),
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_BAD_CONFIG
    assert "unknown key" in capsys.readouterr().err


def test_eval_exact_flat_model(tmp_path, bs09_file, capsys):
    ckpt = tmp_path / "flat.json"
    save_checkpoint(RbmParams.zeros(9, 4), ckpt)
    code = main(["eval-exact", "--model", str(ckpt), "--dataset", str(bs09_file)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    kl = float(out.split("kl ")[1].split()[0])
    assert kl == pytest.approx(math.log(512 / 14), abs=1e-12)


def test_export_profile_flat_model(tmp_path, capsys):
    ckpt = tmp_path / "flat.json"
    save_checkpoint(RbmParams.zeros(6, 3), ckpt)
    full = Dataset("full6", 6, all_states(6), np.full(64, 1 / 64))
    ds_path = tmp_path / "full6.ds"
    save_dataset(full, ds_path)
    out = tmp_path / "profile.csv"
    code = main(["export-profile", "--model", str(ckpt),
                 "--dataset", str(ds_path), "--out", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "state_index,state_bits,target_prob,model_prob"
    assert len(lines) == 65
    model_probs = [float(line.split(",")[3]) for line in lines[1:]]
    assert sum(model_probs) == pytest.approx(1.0, abs=1e-10)
    assert model_probs[0] == pytest.approx(1 / 64, abs=1e-15)


def test_sample_and_eval_parzen_pipeline(tmp_path, bs09_file):
    ckpt = tmp_path / "flat.json"
    save_checkpoint(RbmParams.zeros(9, 4), ckpt)
    samples = tmp_path / "samples.txt"
    assert main(["sample", "--model", str(ckpt), "--n", "400",
                 "--burn-in", "20", "--thin", "2", "--chains", "16",
                 "--seed", "5", "--out", str(samples)]) == EXIT_OK
    curve = tmp_path / "ull.csv"
    assert main(["eval-parzen", "--samples", str(samples),
                 "--test", str(bs09_file), "--sigma", "0.3",
                 "--points", "100,200,400", "--out", str(curve)]) == EXIT_OK
    lines = curve.read_text().splitlines()
    assert lines[0] == "n_samples,ull"
    assert len(lines) == 4
    assert all(np.isfinite(float(line.split(",")[1])) for line in lines[1:])


def test_compare_pipeline(tmp_path, bs09_file):
    config = tmp_path / "base.cfg"
    config.write_text(
        "estimator = cd\nhidden = 9\nsigma = 0.1\nlr = 0.05\n"
        "momentum = 0.9\nepochs = 60\nstride = 30\n")
    out = tmp_path / "cmp"
    code = main(["compare", "--dataset", str(bs09_file),
                 "--estimators", "cd1,wcd1", "--config", str(config),
                 "--seeds", "2", "--multipliers", "1", "--jobs", "1",
                 "--out", str(out)])
    assert code == EXIT_OK
    records = (out / "compare_records.csv").read_text().splitlines()
    assert records[0] == "estimator,hidden,seed,best_kl,best_epoch,tail_mean_kl,failed"
    assert len(records) == 5  # 2 estimators x 1 multiplier x 2 seeds
    summary = json.loads((out / "compare_summary.json").read_text())
    assert set(summary["estimators"]) == {"cd1", "wcd1"}


def test_compare_bad_estimator_token(tmp_path, bs09_file, capsys):
    code = main(["compare", "--dataset", str(bs09_file),
                 "--estimators", "cd1,xyz", "--epochs", "10",
                 "--hidden", "4", "--sigma", "0.1", "--lr", "0.05",
                 "--estimator", "cd", "--out", str(tmp_path / "x")])
    assert code == EXIT_BAD_CONFIG


def test_grid_pipeline(tmp_path, bs09_file):
    mesh = tmp_path / "mesh.json"
    mesh.write_text(json.dumps({
        "hidden_multipliers": [1], "sigmas": [0.1], "lrs": [0.05, 0.01],
        "momenta": [0.9], "schedules": ["fixed"], "epochs": 40, "stride": 20,
    }))
    out = tmp_path / "grid"
    code = main(["grid", "--dataset", str(bs09_file), "--estimator", "cd1",
                 "--mesh", str(mesh), "--seeds", "2", "--jobs", "1",
                 "--out", str(out)])
    assert code == EXIT_OK
    records = (out / "grid_records.csv").read_text().splitlines()
    assert len(records) == 5  # header + 2 lrs x 2 seeds
    best = json.loads((out / "best_config.json").read_text())
    assert best["estimator"] == "cd"


def test_grid_unknown_mesh_key(tmp_path, bs09_file, capsys):
    mesh = tmp_path / "mesh.json"
    mesh.write_text(json.dumps({"epochs": 10, "sigmass": [0.1]}))
    code = main(["grid", "--dataset", str(bs09_file), "--estimator", "cd1",
                 "--mesh", str(mesh), "--seeds", "1",
                 "--out", str(tmp_path / "g")])
    assert code == EXIT_BAD_CONFIG
    assert "unknown mesh keys" in capsys.readouterr().err
