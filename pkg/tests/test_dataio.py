import json

import numpy as np
import pytest

from wtpgmr.dataio import (
    DataError,
    ModelArtifact,
    TraySpec,
    canonical_json,
    dataset_from_dict,
    dataset_to_dict,
    export_csv,
    gen_pickplace,
    gen_reaching,
    load_dataset,
    load_model,
    model_from_dict,
    model_to_dict,
    save_dataset,
    save_model,
    sha256_file,
)
from wtpgmr.relevance import RelevanceProfile, fit_step_gaussians
from wtpgmr.tpmodel import Trajectory, fit_em


def test_canonical_json_is_stable_and_strict():
    a = canonical_json({"b": 1.5, "a": [1, 2]})
    b = canonical_json({"a": [1, 2], "b": 1.5})
    assert a == b
    assert a.endswith("\n")
    assert a.index('"a"') < a.index('"b"')
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})


def test_float_repr_roundtrips():
    x = 0.1 + 0.2
    s = canonical_json({"x": x})
    assert json.loads(s)["x"] == x


def test_dataset_roundtrip(tmp_path):
    ds = gen_reaching(M=3, T=40, seed=5)
    p = tmp_path / "ds.json"
    save_dataset(ds, p)
    back = load_dataset(p)
    assert back.M == ds.M and back.T == ds.T
    for d_old, d_new in zip(ds.demos, back.demos):
        assert np.allclose(d_old.points, d_new.points, atol=0.0)
        for f_old, f_new in zip(d_old.frames, d_new.frames):
            assert np.allclose(f_old.A, f_new.A, atol=0.0)
            assert np.allclose(f_old.b, f_new.b, atol=0.0)
            assert f_old.name == f_new.name
    assert back.meta["name"] == ds.meta["name"]


def test_dataset_save_is_byte_deterministic(tmp_path):
    ds = gen_reaching(M=3, T=40, seed=5)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_dataset(ds, p1)
    save_dataset(ds, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert sha256_file(p1) == sha256_file(p2)


def test_dataset_from_dict_error_paths():
    ds = gen_reaching(M=2, T=20, seed=0)
    doc = dataset_to_dict(ds)
    bad = json.loads(canonical_json(doc))
    del bad["demos"]
    with pytest.raises(DataError) as e:
        dataset_from_dict(bad)
    assert "demos" in str(e.value)

    bad = json.loads(canonical_json(doc))
    bad["demos"][1]["frames"][0]["A"] = [[1.0, 0.0], [0.0, 1.0]]
    with pytest.raises(DataError) as e:
        dataset_from_dict(bad)
    assert "demos[1]" in str(e.value)


def test_model_artifact_roundtrip(tmp_path):
    ds = gen_reaching(M=3, T=40, seed=1)
    model = fit_em(ds, 2)
    sg = fit_step_gaussians(ds)
    art = ModelArtifact(model, step_gaussians=sg, alpha=-1.25, window=5, meta={"K": 2})
    p = tmp_path / "model.json"
    save_model(art, p)
    back = load_model(p)
    assert back.model.K == 2 and back.model.P == 2
    assert np.allclose(back.model.priors, model.priors, atol=0.0)
    assert np.allclose(back.model.means, model.means, atol=0.0)
    assert np.allclose(back.model.covs, model.covs, atol=0.0)
    assert np.allclose(back.step_gaussians.covs, sg.covs, atol=0.0)
    assert back.alpha == -1.25 and back.window == 5
    assert back.meta["K"] == 2


def test_model_without_optional_fields(tmp_path):
    ds = gen_reaching(M=3, T=40, seed=1)
    model = fit_em(ds, 2)
    art = ModelArtifact(model)
    p = tmp_path / "bare.json"
    save_model(art, p)
    back = load_model(p)
    assert back.step_gaussians is None and back.alpha is None


def test_model_from_dict_rejects_bad_shapes():
    ds = gen_reaching(M=3, T=40, seed=1)
    art = ModelArtifact(fit_em(ds, 2))
    doc = json.loads(canonical_json(model_to_dict(art)))
    doc["priors"] = [0.5]
    with pytest.raises(DataError):
        model_from_dict(doc)


def test_gen_reaching_deterministic_and_valid():
    a = gen_reaching(M=4, T=100, seed=9)
    b = gen_reaching(M=4, T=100, seed=9)
    c = gen_reaching(M=4, T=100, seed=10)
    for da, db in zip(a.demos, b.demos):
        assert np.array_equal(da.points, db.points)
    assert not np.array_equal(a.demos[0].points, c.demos[0].points)
    assert a.M == 4 and a.T == 100 and a.dim == 3 and a.n_frames == 2
    for demo in a.demos:
        for fr in demo.frames:
            fr.check_time_block()
    # goal frame anchored at the shared goal
    assert np.allclose(a.demos[0].frames[-1].b[1:], [-0.8, -0.8])
    with pytest.raises(DataError):
        gen_reaching(M=1)
    with pytest.raises(DataError):
        gen_reaching(T=5)


def test_gen_reaching_paths_end_at_goal():
    ds = gen_reaching(M=4, T=200, seed=0, noise_std=0.0)
    for demo in ds.demos:
        assert np.linalg.norm(demo.points[-1, 1:] - [-0.8, -0.8]) < 1e-9
        # withdrawal is straight in start-frame coordinates
        loc = demo.frames[0].inverse_apply(demo.points)
        n_exit = 60
        assert np.abs(loc[:n_exit, 2]).max() < 1e-9
        assert np.all(np.diff(loc[:n_exit, 1]) > 0)


def test_gen_pickplace_channels_and_meta():
    ds = gen_pickplace(M=3, T=200, seed=0)
    assert ds.dim == 8 and ds.n_frames == 2
    assert ds.meta["hand_channel"] == 7
    assert ds.meta["position_channels"] == [1, 2, 3]
    hand = ds.demos[0].points[:, 7]
    assert hand.min() == 0.0 and hand.max() == 1.0
    # grasp frame sits on the target; disposal frame is shared
    d0, d1 = ds.demos[0], ds.demos[1]
    assert not np.allclose(d0.frames[0].b, d1.frames[0].b)
    assert np.allclose(d0.frames[1].b, d1.frames[1].b)


def test_gen_pickplace_demo_targets_cluster_in_two_rows():
    tray = TraySpec()
    grid = tray.positions()
    ys = sorted({p[1] for p in grid})
    ds = gen_pickplace(M=3, T=100, seed=0)
    tgt_ys = [d.frames[0].b[2] for d in ds.demos]
    assert {round(y, 6) for y in tgt_ys} <= {round(ys[0], 6), round(ys[-1], 6)}


def test_gen_pickplace_rejects_bad_targets():
    with pytest.raises(DataError):
        gen_pickplace(M=3, targets=np.zeros((2, 3)))


def test_tray_positions_grid():
    tray = TraySpec(nx=4, ny=3)
    pos = tray.positions()
    assert pos.shape == (12, 3)
    assert np.isclose(pos[:, 2], tray.z).all()


def test_export_csv_trajectory_and_profile(tmp_path):
    times = np.arange(1.0, 6.0)
    traj = Trajectory(times, np.zeros((5, 2)), np.tile(np.eye(2), (5, 1, 1)))
    p = tmp_path / "traj.csv"
    export_csv(traj, p, meta={"kind": "test"})
    text = p.read_text()
    assert text.startswith("# meta: ")
    header = text.splitlines()[1]
    assert header.split(",")[0] == "time"
    assert len(text.splitlines()) == 2 + 5

    prof = RelevanceProfile(np.full((4, 2), 0.5))
    p2 = tmp_path / "prof.csv"
    export_csv(prof, p2)
    assert len(p2.read_text().splitlines()) == 1 + 4

    rows = [{"a": 1, "b": 2.5}, {"a": 2, "b": -1.0}]
    p3 = tmp_path / "rows.csv"
    export_csv(rows, p3)
    assert p3.read_text().splitlines()[0] == "a,b"


def test_export_csv_deterministic(tmp_path):
    times = np.arange(1.0, 4.0)
    traj = Trajectory(times, np.full((3, 2), 1 / 3), np.tile(np.eye(2), (3, 1, 1)))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    export_csv(traj, p1, meta={"seed": 3})
    export_csv(traj, p2, meta={"seed": 3})
    assert p1.read_bytes() == p2.read_bytes()
