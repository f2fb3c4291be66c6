import json

import numpy as np
import pytest

from wtpgmr.cli import main
from wtpgmr.dataio import canonical_json, load_dataset, load_model


def run(*argv):
    return main(list(argv))


def build_small(tmp_path, seed=0):
    """gen-data + train on a small reaching set; returns (data, model) paths."""
    data = tmp_path / "ds.json"
    model = tmp_path / "model.json"
    assert run("gen-data", "reaching", "--M", "3", "--T", "80", "--seed", str(seed),
               "--out", str(data)) == 0
    assert run("train", "--data", str(data), "--K", "2", "--out", str(model)) == 0
    return data, model


def test_gen_data_and_train(tmp_path):
    data, model = build_small(tmp_path)
    ds = load_dataset(data)
    assert ds.M == 3 and ds.T == 80
    art = load_model(model)
    assert art.model.K == 2
    assert art.step_gaussians is not None
    assert "dataset_sha256" in art.meta
    assert art.meta["config"]["K"] == 2


def test_gen_data_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("gen-data", "reaching", "--M", "3", "--T", "60", "--seed", "4", "--out", str(a))
    run("gen-data", "reaching", "--M", "3", "--T", "60", "--seed", "4", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_gen_data_pickplace(tmp_path):
    out = tmp_path / "pp.json"
    assert run("gen-data", "pickplace", "--M", "3", "--T", "100", "--out", str(out)) == 0
    ds = load_dataset(out)
    assert ds.dim == 8
    assert ds.meta["hand_channel"] == 7


def test_train_resample(tmp_path):
    data = tmp_path / "ds.json"
    run("gen-data", "reaching", "--M", "3", "--T", "75", "--out", str(data))
    model = tmp_path / "m.json"
    assert run("train", "--data", str(data), "--K", "2", "--resample", "50",
               "--out", str(model)) == 0
    art = load_model(model)
    assert len(art.meta["times"]) == 50


def test_optimize_alpha_updates_artifact(tmp_path):
    data, model = build_small(tmp_path)
    out = tmp_path / "opt.json"
    trace = tmp_path / "trace.csv"
    assert run("optimize-alpha", "--model", str(model), "--data", str(data),
               "--scan", "7", "--trace", str(trace), "--out", str(out)) == 0
    art = load_model(out)
    assert art.alpha is not None and art.window is not None
    assert art.meta["alpha_search"]["n_evaluations"] >= 7
    lines = trace.read_text().splitlines()
    assert lines[0].startswith("# meta: ")
    assert lines[1].split(",")[0] == "alpha"
    assert len(lines) - 2 == art.meta["alpha_search"]["n_evaluations"]


def test_reproduce_both_methods(tmp_path):
    data, model = build_small(tmp_path)
    opt = tmp_path / "opt.json"
    run("optimize-alpha", "--model", str(model), "--data", str(data),
        "--scan", "7", "--out", str(opt))
    ds = load_dataset(data)
    frames_doc = {
        "frames": [
            {"A": f.A.tolist(), "b": f.b.tolist(), "name": f.name}
            for f in ds.demos[0].frames
        ]
    }
    fpath = tmp_path / "frames.json"
    fpath.write_text(canonical_json(frames_doc))
    for method in ("tpgmr", "wtpgmr"):
        out = tmp_path / f"{method}.csv"
        assert run("reproduce", "--model", str(opt), "--frames", str(fpath),
                   "--method", method, "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[1].split(",")[0] == "time"
        assert len(lines) == 2 + ds.T
    a = (tmp_path / "tpgmr.csv").read_text()
    b = (tmp_path / "wtpgmr.csv").read_text()
    assert a != b


def test_reproduce_wtpgmr_needs_alpha(tmp_path):
    data, model = build_small(tmp_path)
    ds = load_dataset(data)
    fpath = tmp_path / "frames.json"
    fpath.write_text(canonical_json({
        "frames": [{"A": f.A.tolist(), "b": f.b.tolist(), "name": f.name}
                   for f in ds.demos[0].frames]
    }))
    out = tmp_path / "t.csv"
    assert run("reproduce", "--model", str(model), "--frames", str(fpath),
               "--method", "wtpgmr", "--out", str(out)) == 1


def test_cross_validate_report(tmp_path):
    data, _ = build_small(tmp_path)
    report = tmp_path / "cv.json"
    assert run("cross-validate", "--data", str(data), "--K", "2", "--method", "tpgmr",
               "--report", str(report)) == 0
    doc = json.loads(report.read_text())
    assert doc["method"] == "tpgmr"
    assert len(doc["per_fold"]) == 3
    assert np.isfinite(doc["rmse_mean"])
    folds_csv = report.with_suffix(".csv")
    assert folds_csv.exists()
    assert len(folds_csv.read_text().splitlines()) == 2 + 3  # meta + header + folds


def test_grid_eval_report(tmp_path):
    data, model = build_small(tmp_path)
    opt = tmp_path / "opt.json"
    run("optimize-alpha", "--model", str(model), "--data", str(data),
        "--scan", "7", "--out", str(opt))
    report = tmp_path / "grid.json"
    assert run("grid-eval", "--model", str(opt), "--method", "wtpgmr",
               "--cells", "3", "--grid-extent", "4", "--report", str(report)) == 0
    doc = json.loads(report.read_text())
    assert doc["summary"]["n_cells"] == 9
    cells_csv = report.with_suffix(".csv")
    assert len(cells_csv.read_text().splitlines()) >= 1 + 9


def test_grid_eval_fixed_orientation(tmp_path):
    data, model = build_small(tmp_path)
    report = tmp_path / "grid.json"
    assert run("grid-eval", "--model", str(model), "--method", "tpgmr",
               "--cells", "3", "--orientation", "fixed:0.5",
               "--report", str(report)) == 0
    doc = json.loads(report.read_text())
    assert doc["config"]["orientation"] == "fixed:0.5"


def test_weights_csv(tmp_path):
    data, model = build_small(tmp_path)
    out = tmp_path / "w.csv"
    assert run("weights", "--model", str(model), "--alpha", "-1.0",
               "--window", "5", "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[1].split(",")[0] == "step"
    body = np.array([row.split(",")[1:] for row in lines[2:]], dtype=float)
    assert np.abs(body.sum(axis=1) - 1.0).max() < 1e-9


def test_exit_codes(tmp_path):
    # validation problems exit 1
    assert run("gen-data", "reaching", "--M", "1", "--out", str(tmp_path / "x.json")) == 1
    assert run("train", "--data", str(tmp_path / "missing.json"),
               "--out", str(tmp_path / "m.json")) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("train", "--data", str(bad), "--out", str(tmp_path / "m.json")) == 1
    with pytest.raises(SystemExit):
        run("--help")


def test_unknown_arguments_exit_1(tmp_path):
    assert run("gen-data", "reaching", "--bogus", "1",
               "--out", str(tmp_path / "x.json")) == 1


def test_full_chain_byte_reproducible(tmp_path):
    # Identical commands + identical inputs must give byte-identical outputs;
    # artifacts may record the input path, so both passes reuse the same paths.
    outs = []
    for _ in range(2):
        data, model = build_small(tmp_path, seed=11)
        opt = tmp_path / "opt.json"
        run("optimize-alpha", "--model", str(model), "--data", str(data),
            "--scan", "7", "--out", str(opt))
        w = tmp_path / "w.csv"
        run("weights", "--model", str(opt), "--out", str(w))
        outs.append((data.read_bytes(), model.read_bytes(),
                     opt.read_bytes(), w.read_bytes()))
        for p in (data, model, opt, w):
            p.unlink()
    assert outs[0] == outs[1]
