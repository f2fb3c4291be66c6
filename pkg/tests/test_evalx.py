import numpy as np
import pytest

from wtpgmr.dataio import gen_pickplace, gen_reaching, TraySpec, _ident_frame
from wtpgmr.evalx import (
    ConstraintBoxes,
    GridSpec,
    LooConfig,
    ModelBundle,
    boxes_from_dict,
    boxes_to_dict,
    constraint_error,
    critical_point_errors,
    demo_mean_angle,
    endpoint_errors,
    fit_constraint_boxes,
    grid_eval,
    loo_cross_validate,
    path_length,
    rmse,
)
from wtpgmr.optimize import AlphaSearchConfig
from wtpgmr.relevance import RelevanceProfile, default_window, fit_step_gaussians, frame_weights, smooth
from wtpgmr.tpmodel import EmConfig, ModelError, TaskFrame, Trajectory, fit_em


def line_traj(T=20, a=(0.0, 0.0), b=(3.0, 4.0)):
    times = np.arange(1.0, T + 1.0)
    u = np.linspace(0.0, 1.0, T)[:, None]
    means = np.asarray(a) + u * (np.asarray(b) - np.asarray(a))
    covs = np.tile(np.eye(2) * 1e-4, (T, 1, 1))
    return Trajectory(times, means, covs)


def planar_frame(angle, x, y, name=""):
    c, s = np.cos(angle), np.sin(angle)
    A = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    return TaskFrame(A, np.array([0.0, x, y]), name)


def test_path_length_straight_line():
    traj = line_traj()
    assert np.isclose(path_length(traj), 5.0, atol=1e-12)


def test_endpoint_errors():
    traj = line_traj(a=(0.0, 0.0), b=(3.0, 4.0))
    start = planar_frame(0.3, 0.0, 0.0)
    goal = planar_frame(0.0, 3.0, 3.0)
    es, eg = endpoint_errors(traj, start, goal)
    assert np.isclose(es, 0.0, atol=1e-12)
    assert np.isclose(eg, 1.0, atol=1e-12)


def test_rmse_closed_form():
    ds = gen_reaching(M=2, T=20, seed=0)
    demo = ds.demos[0]
    traj = Trajectory(
        demo.points[:, 0],
        demo.points[:, 1:] + np.array([0.3, 0.4]),
        np.tile(np.eye(2), (20, 1, 1)),
    )
    assert np.isclose(rmse(traj, demo), 0.5, atol=1e-12)


def test_constraint_boxes_roundtrip_and_errors():
    ds = gen_reaching(M=4, T=200, seed=0)
    boxes = fit_constraint_boxes(ds)
    again = boxes_from_dict(boxes_to_dict(boxes))
    assert np.allclose(again.start_lo, boxes.start_lo)
    assert np.allclose(again.goal_hi, boxes.goal_hi)
    assert again.n_pts == boxes.n_pts

    # each demonstration must roughly satisfy its own boxes
    for demo in ds.demos:
        traj = Trajectory(
            demo.points[:, 0], demo.points[:, 1:], np.tile(np.eye(2), (ds.T, 1, 1))
        )
        err = constraint_error(traj, demo.frames[0], demo.frames[-1], boxes)
        assert err <= 4

    # a far-away trajectory misses both boxes entirely
    far = line_traj(T=200, a=(50.0, 50.0), b=(60.0, 60.0))
    err = constraint_error(far, ds.demos[0].frames[0], ds.demos[0].frames[-1], boxes)
    assert err == 2 * boxes.n_pts


def test_constraint_boxes_margin_grows():
    ds = gen_reaching(M=4, T=100, seed=3)
    tight = fit_constraint_boxes(ds, margin=0.0)
    wide = fit_constraint_boxes(ds, margin=0.5)
    assert np.all(wide.start_lo <= tight.start_lo)
    assert np.all(wide.goal_hi >= tight.goal_hi)


def test_demo_mean_angle_circular():
    f = lambda a: planar_frame(a, 0.0, 0.0)
    demos = gen_reaching(M=2, T=20, seed=0).demos
    d0 = demos[0].__class__(demos[0].points, (f(np.deg2rad(170.0)), f(0.0)))
    d1 = demos[1].__class__(demos[1].points, (f(np.deg2rad(-170.0)), f(0.0)))
    ds = gen_reaching(M=2, T=20, seed=0).__class__((d0, d1), {})
    ang = demo_mean_angle(ds)
    assert np.isclose(np.cos(ang), np.cos(np.pi), atol=1e-9)


def test_loo_cross_validate_runs_both_methods():
    ds = gen_reaching(M=3, T=60, seed=0)
    cfg = LooConfig(
        em=EmConfig(max_iters=60),
        search=AlphaSearchConfig(scan_points=7, tol=1e-2),
    )
    bm, bs, bf = loo_cross_validate(ds, "tpgmr", 2, cfg)
    wm, ws, wf = loo_cross_validate(ds, "wtpgmr", 2, cfg)
    assert len(bf) == len(wf) == 3
    assert np.isfinite([bm, bs, wm, ws]).all()
    assert bm == pytest.approx(np.mean(bf))
    with pytest.raises(ModelError):
        loo_cross_validate(ds, "dmp", 2, cfg)


def test_grid_eval_layout_and_summary():
    ds = gen_reaching(M=3, T=60, seed=1)
    model = fit_em(ds, 2)
    times = ds.demos[0].points[:, 0]
    boxes = fit_constraint_boxes(ds)
    grid = GridSpec(
        goal_frame=ds.demos[0].frames[-1],
        x_range=(-1.0, 1.0),
        y_range=(-2.0, 2.0),
        cells_per_side=3,
    )
    rows, summary = grid_eval(ModelBundle(model, times), grid, boxes, dataset=ds)
    assert len(rows) == 9
    xs = [r["cell_x"] for r in rows]
    ys = [r["cell_y"] for r in rows]
    # row-major, x fastest
    assert xs[:3] == [-1.0, 0.0, 1.0]
    assert ys[:3] == [-2.0, -2.0, -2.0] and ys[-1] == 2.0
    for key in ("path_length_mean", "end_err_mean", "constraint_err_mean", "n_cells"):
        assert key in summary
    assert summary["n_cells"] == 9
    assert summary["n_failed"] == 0


def test_grid_eval_fixed_orientation_and_weighted_bundle():
    ds = gen_reaching(M=3, T=60, seed=2)
    model = fit_em(ds, 2)
    times = ds.demos[0].points[:, 0]
    boxes = fit_constraint_boxes(ds)
    prof = smooth(frame_weights(fit_step_gaussians(ds), -1.0), default_window(ds.T))
    grid = GridSpec(
        goal_frame=ds.demos[0].frames[-1],
        cells_per_side=3,
        orientation_rule="fixed",
        orientation_angle=0.25,
    )
    rows, summary = grid_eval(ModelBundle(model, times, prof), grid, boxes)
    assert summary["n_cells"] == 9
    assert np.isfinite(summary["end_err_mean"])


def test_grid_eval_demo_mean_needs_dataset():
    ds = gen_reaching(M=3, T=60, seed=2)
    model = fit_em(ds, 2)
    grid = GridSpec(goal_frame=ds.demos[0].frames[-1], cells_per_side=3)
    boxes = fit_constraint_boxes(ds)
    with pytest.raises(ModelError):
        grid_eval(ModelBundle(model, ds.demos[0].points[:, 0]), grid, boxes)


def test_critical_points_hand_built():
    ds = gen_pickplace(M=3, T=200, seed=0)
    demo = ds.demos[0]
    traj = Trajectory(
        demo.points[:, 0],
        demo.points[:, 1:],
        np.tile(np.eye(7) * 1e-6, (200, 1, 1)),
    )
    s, g, p = critical_point_errors(traj, ds, frames=demo.frames)
    # feeding a demonstration back: errors are the demo-to-mean spreads
    assert s < 0.05 and g < 0.05 and p < 0.05
    with pytest.raises(ModelError):
        critical_point_errors(traj, ds)


def test_critical_points_never_closing_hand():
    ds = gen_pickplace(M=3, T=200, seed=0)
    demo = ds.demos[0]
    pts = demo.points[:, 1:].copy()
    pts[:, -1] = 1.0  # hand never closes
    traj = Trajectory(demo.points[:, 0], pts, np.tile(np.eye(7), (200, 1, 1)))
    s, g, p = critical_point_errors(traj, ds, frames=demo.frames)
    assert np.isfinite(s)
    assert np.isnan(g) and np.isnan(p)


def test_grid_spec_validation():
    goal = planar_frame(0.0, 0.0, 0.0)
    with pytest.raises(ModelError):
        GridSpec(goal_frame=goal, cells_per_side=1)
    with pytest.raises(ModelError):
        GridSpec(goal_frame=goal, orientation_rule="random")


def test_constraint_boxes_validation():
    with pytest.raises(ModelError):
        ConstraintBoxes(
            start_lo=np.array([1.0, 1.0]),
            start_hi=np.array([0.0, 0.0]),
            goal_lo=np.zeros(2),
            goal_hi=np.ones(2),
            n_pts=10,
        )
