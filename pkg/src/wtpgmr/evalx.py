"""Evaluation protocols: exhaustive leave-one-out cross-validation, grid
extrapolation sweeps with path/endpoint/constraint metrics, and
critical-point errors for tasks with a hand-control channel.

Conventions: the first task frame of a demonstration anchors the start of
the motion (or the grasp target), the last frame anchors the goal (or the
disposal point). Grid sweeps place a fresh start frame at every cell
center and keep the goal frame fixed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .gaussian import GaussianError
from .optimize import AlphaSearchConfig, optimize_alpha
from .relevance import (
    RelevanceProfile,
    default_window,
    fit_step_gaussians,
    frame_weights,
    reproduce_weighted,
    smooth,
)
from .tpmodel import (
    Dataset,
    EmConfig,
    ModelError,
    TPGMM,
    TaskFrame,
    Trajectory,
    fit_em,
    reproduce,
)

__all__ = [
    "METHODS",
    "GridSpec",
    "ConstraintBoxes",
    "TrajMetrics",
    "ModelBundle",
    "LooConfig",
    "path_length",
    "endpoint_errors",
    "fit_constraint_boxes",
    "constraint_error",
    "evaluate_trajectory",
    "boxes_to_dict",
    "boxes_from_dict",
    "rmse",
    "loo_cross_validate",
    "demo_mean_angle",
    "grid_eval",
    "critical_point_errors",
]

METHODS = ("tpgmr", "wtpgmr")


@dataclass(frozen=True)
class GridSpec:
    """Extrapolation sweep layout: cell centers get the start frame, the
    goal frame stays fixed. orientation_rule 'demo_mean' uses the circular
    mean of the demonstrated start orientations; 'fixed' uses
    orientation_angle as given."""

    goal_frame: TaskFrame
    x_range: tuple = (-5.0, 5.0)
    y_range: tuple = (-5.0, 5.0)
    cells_per_side: int = 21
    orientation_rule: str = "demo_mean"
    orientation_angle: float = 0.0

    def __post_init__(self):
        if not (self.x_range[0] < self.x_range[1] and self.y_range[0] < self.y_range[1]):
            raise ModelError("grid ranges must be non-degenerate")
        if self.cells_per_side < 2:
            raise ModelError("cells_per_side must be at least 2")
        if self.orientation_rule not in ("demo_mean", "fixed"):
            raise ModelError(f"unknown orientation_rule {self.orientation_rule!r}")


@dataclass(frozen=True)
class ConstraintBoxes:
    """Axis-aligned boxes, in the local coordinates of the start and goal
    frames, containing the first/last n_pts of every demonstration."""

    start_lo: np.ndarray
    start_hi: np.ndarray
    goal_lo: np.ndarray
    goal_hi: np.ndarray
    n_pts: int = 10

    def __post_init__(self):
        for name in ("start_lo", "start_hi", "goal_lo", "goal_hi"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))
        if not (self.start_lo <= self.start_hi).all() or not (self.goal_lo <= self.goal_hi).all():
            raise ModelError("box bounds are inverted")
        if self.n_pts < 1:
            raise ModelError("n_pts must be positive")


@dataclass(frozen=True)
class TrajMetrics:
    path_length: float
    start_error: float
    end_error: float
    constraint_error: int
    grasp_error: float | None = None
    place_error: float | None = None


@dataclass(frozen=True)
class ModelBundle:
    """A generation recipe for evaluation runs: the trained mixture, the
    query times, and (for the weighted method) a ready relevance profile;
    profile None selects the unweighted baseline."""

    model: TPGMM
    times: np.ndarray
    profile: RelevanceProfile | None = None

    def generate(self, frames) -> Trajectory:
        if self.profile is None:
            return reproduce(self.model, frames, self.times)
        return reproduce_weighted(self.model, frames, self.profile, self.times)


@dataclass(frozen=True)
class LooConfig:
    em: EmConfig = field(default_factory=EmConfig)
    bounds: tuple = (-8.0, 8.0)
    search: AlphaSearchConfig = field(default_factory=AlphaSearchConfig)


def path_length(traj: Trajectory, pos_idx=None) -> float:
    """Summed Euclidean segment lengths over the position channels."""
    if traj.T < 2:
        raise ModelError("path length needs at least 2 points")
    pos = traj.means if pos_idx is None else traj.means[:, list(pos_idx)]
    return float(np.linalg.norm(np.diff(pos, axis=0), axis=1).sum())


def endpoint_errors(traj: Trajectory, start: TaskFrame, goal: TaskFrame, pos_idx=None):
    """Distances of the first mean to the start-frame origin and the last
    mean to the goal-frame origin (position channels only)."""
    idx = list(range(traj.means.shape[1])) if pos_idx is None else list(pos_idx)
    first, last = traj.means[0, idx], traj.means[-1, idx]
    s_err = float(np.linalg.norm(first - start.b[1:][idx]))
    e_err = float(np.linalg.norm(last - goal.b[1:][idx]))
    return s_err, e_err


def _local_spatial(frame: TaskFrame, times, means) -> np.ndarray:
    rows = np.column_stack([np.asarray(times, float), np.asarray(means, float)])
    return frame.inverse_apply(rows)[:, 1:]


def fit_constraint_boxes(dataset: Dataset, n_pts: int = 10, margin: float = 0.05) -> ConstraintBoxes:
    """Minimal boxes containing the first/last n_pts of every demo,
    expressed in the start/goal frame's local spatial coordinates and
    inflated by a fractional margin per side."""
    if n_pts < 1 or n_pts > dataset.T:
        raise ModelError(f"n_pts={n_pts} out of range for T={dataset.T}")
    heads, tails = [], []
    for demo in dataset.demos:
        heads.append(_local_spatial(demo.frames[0], demo.points[:n_pts, 0], demo.points[:n_pts, 1:]))
        tails.append(_local_spatial(demo.frames[-1], demo.points[-n_pts:, 0], demo.points[-n_pts:, 1:]))
    head, tail = np.vstack(heads), np.vstack(tails)

    def inflate(lo, hi):
        center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        half = half * (1.0 + margin)
        return center - half, center + half

    s_lo, s_hi = inflate(head.min(axis=0), head.max(axis=0))
    g_lo, g_hi = inflate(tail.min(axis=0), tail.max(axis=0))
    return ConstraintBoxes(s_lo, s_hi, g_lo, g_hi, n_pts)


def constraint_error(traj: Trajectory, start: TaskFrame, goal: TaskFrame, boxes: ConstraintBoxes) -> int:
    """Count deviation from n_pts inside each box, summed over both ends.

    0 means the trajectory enters and leaves exactly like the
    demonstrations; too many points inside count against, like too few.
    """
    local_s = _local_spatial(start, traj.times, traj.means)
    local_g = _local_spatial(goal, traj.times, traj.means)
    in_s = np.all((local_s >= boxes.start_lo) & (local_s <= boxes.start_hi), axis=1)
    in_g = np.all((local_g >= boxes.goal_lo) & (local_g <= boxes.goal_hi), axis=1)
    return int(abs(int(in_s.sum()) - boxes.n_pts) + abs(int(in_g.sum()) - boxes.n_pts))


def evaluate_trajectory(
    traj: Trajectory,
    start: TaskFrame,
    goal: TaskFrame,
    boxes: ConstraintBoxes,
    pos_idx=None,
) -> TrajMetrics:
    """All scalar metrics of one generated trajectory in one place."""
    s_err, e_err = endpoint_errors(traj, start, goal, pos_idx)
    return TrajMetrics(
        path_length(traj, pos_idx),
        s_err,
        e_err,
        constraint_error(traj, start, goal, boxes),
    )


def boxes_to_dict(boxes: ConstraintBoxes) -> dict:
    return {
        "start_lo": boxes.start_lo.tolist(),
        "start_hi": boxes.start_hi.tolist(),
        "goal_lo": boxes.goal_lo.tolist(),
        "goal_hi": boxes.goal_hi.tolist(),
        "n_pts": boxes.n_pts,
    }


def boxes_from_dict(doc: dict) -> ConstraintBoxes:
    return ConstraintBoxes(
        np.asarray(doc["start_lo"], float),
        np.asarray(doc["start_hi"], float),
        np.asarray(doc["goal_lo"], float),
        np.asarray(doc["goal_hi"], float),
        int(doc["n_pts"]),
    )


def rmse(traj: Trajectory, demo) -> float:
    """Root mean squared pointwise distance over spatial channels."""
    diff = demo.points[:, 1:] - traj.means
    return float(np.sqrt(np.mean(np.sum(diff**2, axis=1))))


def loo_cross_validate(dataset: Dataset, method: str, K: int, cfg: LooConfig = LooConfig()):
    """Hold out each demonstration once, retrain from scratch, generate
    with the held-out frames, and score RMSE against the held-out path.

    For the weighted method the exponent is optimized on the training
    folds only. Returns (rmse_mean, rmse_std, per_fold) with the
    population std over folds.
    """
    if method not in METHODS:
        raise ModelError(f"unknown method {method!r}")
    if dataset.M < 2:
        raise ModelError("cross-validation needs at least 2 demonstrations")
    per_fold = []
    for m in range(dataset.M):
        train = Dataset(
            tuple(d for i, d in enumerate(dataset.demos) if i != m), dataset.meta
        )
        held = dataset.demos[m]
        model = fit_em(train, K, cfg.em)
        times = held.points[:, 0]
        if method == "tpgmr":
            traj = reproduce(model, held.frames, times)
        else:
            res = optimize_alpha(model, train, cfg.bounds, cfg.search)
            window = cfg.search.window
            if window is None:
                window = default_window(train.T)
            profile = smooth(frame_weights(fit_step_gaussians(train), res.alpha_star), window)
            traj = reproduce_weighted(model, held.frames, profile, times)
        per_fold.append(rmse(traj, held))
    arr = np.asarray(per_fold)
    return float(arr.mean()), float(arr.std()), per_fold


def demo_mean_angle(dataset: Dataset) -> float:
    """Circular mean of the demonstrated start-frame rotations (planar)."""
    angs = np.array(
        [np.arctan2(d.frames[0].A[2, 1], d.frames[0].A[1, 1]) for d in dataset.demos]
    )
    return float(np.arctan2(np.sin(angs).mean(), np.cos(angs).mean()))


def _planar_frame(angle: float, x: float, y: float, name: str) -> TaskFrame:
    c, s = np.cos(angle), np.sin(angle)
    A = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    return TaskFrame(A, np.array([0.0, x, y]), name)


def grid_eval(
    bundle: ModelBundle,
    grid: GridSpec,
    boxes: ConstraintBoxes,
    dataset: Dataset | None = None,
    n_threads: int = 1,
):
    """Generate one trajectory per grid cell and score it.

    Returns (rows, summary): rows in row-major cell order (x fastest),
    one dict per cell with keys cell_x, cell_y, path_length, start_err,
    end_err, constraint_err, flags; summary holds nan-aware mean/std per
    metric. A cell whose generation raises numerically is kept as a row
    with NaN metrics and flags=1 rather than aborting the sweep;
    otherwise flags counts regression underflow fallbacks.
    """
    if bundle.model.dim != 3:
        raise ModelError("grid evaluation expects a planar (t, x, y) model")
    if grid.orientation_rule == "demo_mean":
        if dataset is None:
            raise ModelError("orientation_rule 'demo_mean' needs the dataset")
        angle = demo_mean_angle(dataset)
    else:
        angle = grid.orientation_angle

    xs = np.linspace(grid.x_range[0], grid.x_range[1], grid.cells_per_side)
    ys = np.linspace(grid.y_range[0], grid.y_range[1], grid.cells_per_side)
    cells = [(cx, cy) for cy in ys for cx in xs]

    def run_cell(cell):
        cx, cy = cell
        start = _planar_frame(angle, cx, cy, "start")
        frames = (start, grid.goal_frame)
        try:
            traj = bundle.generate(frames)
            tm = evaluate_trajectory(traj, start, grid.goal_frame, boxes)
            return {
                "cell_x": float(cx),
                "cell_y": float(cy),
                "path_length": tm.path_length,
                "start_err": tm.start_error,
                "end_err": tm.end_error,
                "constraint_err": tm.constraint_error,
                "flags": int((traj.flags != 0).sum()),
            }
        except (GaussianError, ModelError, np.linalg.LinAlgError, FloatingPointError):
            return {
                "cell_x": float(cx),
                "cell_y": float(cy),
                "path_length": float("nan"),
                "start_err": float("nan"),
                "end_err": float("nan"),
                "constraint_err": float("nan"),
                "flags": 1,
            }

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]

    summary = {}
    for key in ("path_length", "start_err", "end_err", "constraint_err"):
        col = np.array([r[key] for r in rows], dtype=float)
        summary[f"{key}_mean"] = float(np.nanmean(col))
        summary[f"{key}_std"] = float(np.nanstd(col))
    summary["n_cells"] = len(rows)
    summary["n_failed"] = int(sum(1 for r in rows if r["flags"] == 1 and np.isnan(r["path_length"])))
    return rows, summary


def critical_point_errors(
    traj: Trajectory,
    dataset: Dataset,
    frames=None,
    threshold: float = 0.5,
):
    """Start/grasp/place location errors for hand-channel tasks.

    The hand channel (1 = open, 0 = closed; index from dataset meta,
    default the last channel) defines the critical points: grasp is the
    first downward crossing of the threshold, place the first upward
    crossing after it. References are the mean demo locations, with grasp
    and place expressed in the grasp-target and disposal frames of each
    demo; the generated trajectory is measured in its own frames, which
    must be supplied. A hand signal that never closes (or never reopens)
    yields NaN for the affected errors.
    """
    if frames is None:
        raise ModelError("supply the task frames the trajectory was generated with")
    frames = tuple(frames)
    hand_ch = int(dataset.meta.get("hand_channel", dataset.dim - 1))
    pos_ch = list(dataset.meta.get("position_channels", range(1, dataset.dim - 1)))
    pos_local = [c - 1 for c in pos_ch]  # spatial-array indices

    starts, grasps, places = [], [], []
    for demo in dataset.demos:
        hand = demo.points[:, hand_ch]
        below = hand < threshold
        if not below.any():
            raise ModelError("a demonstration never closes its hand")
        ci = int(np.argmax(below))
        above_after = hand[ci:] >= threshold
        if not above_after.any():
            raise ModelError("a demonstration never reopens its hand")
        oi = ci + int(np.argmax(above_after))
        starts.append(demo.points[0, pos_ch])
        grasps.append(demo.frames[0].inverse_apply(demo.points[ci])[0, pos_ch])
        places.append(demo.frames[-1].inverse_apply(demo.points[oi])[0, pos_ch])
    start_ref = np.mean(starts, axis=0)
    grasp_ref = np.mean(grasps, axis=0)
    place_ref = np.mean(places, axis=0)

    start_err = float(np.linalg.norm(traj.means[0, pos_local] - start_ref))
    hand_g = traj.means[:, hand_ch - 1]
    below_g = hand_g < threshold
    if not below_g.any():
        return start_err, float("nan"), float("nan")
    ci = int(np.argmax(below_g))
    rows = np.column_stack([traj.times, traj.means])
    grasp_local = frames[0].inverse_apply(rows[ci])[0, pos_ch]
    grasp_err = float(np.linalg.norm(grasp_local - grasp_ref))
    above_after = hand_g[ci:] >= threshold
    if not above_after.any():
        return start_err, grasp_err, float("nan")
    oi = ci + int(np.argmax(above_after))
    place_local = frames[-1].inverse_apply(rows[oi])[0, pos_ch]
    place_err = float(np.linalg.norm(place_local - place_ref))
    return start_err, grasp_err, place_err
