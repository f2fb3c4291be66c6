"""Command line front end for the full pipeline: synthetic data
generation, training, exponent optimization, trajectory generation, and
the two evaluation protocols.

Every output embeds the resolved configuration and the SHA-256 of each
input file, and all writers are canonical, so rerunning a command on the
same inputs reproduces its outputs byte for byte. Exit codes: 0 success,
1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .dataio import (
    DataError,
    ModelArtifact,
    canonical_json,
    export_csv,
    gen_pickplace,
    gen_reaching,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    sha256_file,
)
from .evalx import (
    GridSpec,
    ModelBundle,
    boxes_from_dict,
    boxes_to_dict,
    demo_mean_angle,
    fit_constraint_boxes,
    grid_eval,
    loo_cross_validate,
    LooConfig,
)
from .gaussian import GaussianError
from .optimize import AlphaSearchConfig, LossConfig, OptimizeError, optimize_alpha
from .relevance import default_window, fit_step_gaussians, frame_weights, smooth
from .tpmodel import ModelError, TaskFrame, fit_em, reproduce, resample
from .relevance import reproduce_weighted

__all__ = ["main"]


class CliError(Exception):
    """Bad flags or inputs; reported on stderr with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get("TPR_THREADS", "1")))
    except ValueError:
        return 1


def _say(msg: str) -> None:
    print(msg)


def _write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(doc))


def _sibling_csv(path: str) -> str:
    base, _ = os.path.splitext(path)
    return base + ".csv"


def _frames_from_doc(doc, D: int):
    """Frames JSON: either {"frames": [{A, b, name?}, ...]} or a bare list."""
    if isinstance(doc, dict):
        doc = doc.get("frames", doc)
    if not isinstance(doc, list) or not doc:
        raise CliError("frames file must hold a non-empty list of {A, b} objects")
    frames = []
    for j, fdoc in enumerate(doc):
        try:
            frame = TaskFrame(
                np.asarray(fdoc["A"], dtype=float),
                np.asarray(fdoc["b"], dtype=float),
                str(fdoc.get("name", "")),
            )
        except (KeyError, TypeError, ModelError) as exc:
            raise CliError(f"frames[{j}]: {exc}") from exc
        if frame.dim != D:
            raise CliError(f"frames[{j}]: dimension {frame.dim} does not match model D={D}")
        frames.append(frame)
    return tuple(frames)


def _profile_from_artifact(art: ModelArtifact, alpha=None, window=None):
    if art.step_gaussians is None:
        raise CliError("model file has no per-step Gaussians; re-run train")
    if alpha is None:
        alpha = art.alpha
    if alpha is None:
        raise CliError("no exponent available; run optimize-alpha or pass --alpha")
    if window is None:
        window = art.window if art.window is not None else default_window(art.step_gaussians.T)
    return smooth(frame_weights(art.step_gaussians, float(alpha)), int(window))


# ---------------------------------------------------------------- commands


def _cmd_gen_data(args) -> int:
    noise = args.noise
    if noise is None:
        noise = 0.001 if args.task == "reaching" else 0.005
    if args.task == "reaching":
        ds = gen_reaching(args.M, args.T, args.seed, noise)
    else:
        ds = gen_pickplace(args.M, args.T, args.seed, noise_std=noise)
    ds.meta["config"] = {
        "command": "gen-data",
        "task": args.task,
        "M": args.M,
        "T": args.T,
        "seed": args.seed,
        "noise_std": noise,
    }
    save_dataset(ds, args.out)
    _say(f"wrote {args.out}: M={ds.M} T={ds.T} D={ds.dim} P={ds.n_frames}")
    return 0


def _cmd_train(args) -> int:
    ds = load_dataset(args.data)
    if args.resample is not None:
        ds = resample(ds, args.resample)
    if not ds.aligned:
        raise CliError("demonstrations have unequal lengths; pass --resample T")
    if not 1 <= args.K <= ds.T:
        raise CliError(f"--K must be in 1..{ds.T}")
    if ds.M < 2:
        raise CliError("training needs at least 2 demonstrations")

    model = fit_em(ds, args.K)
    sg = fit_step_gaussians(ds)
    boxes = fit_constraint_boxes(ds, n_pts=args.box_pts)
    goal = ds.demos[0].frames[-1]
    meta = {
        "dataset_sha256": sha256_file(args.data),
        "dataset_name": ds.meta.get("name", ""),
        "channel_names": list(ds.meta.get("channel_names", [])),
        "frame_names": list(ds.meta.get("frame_names", [])),
        "times": ds.demos[0].points[:, 0].tolist(),
        "goal_frame": {"A": goal.A.tolist(), "b": goal.b.tolist(), "name": goal.name},
        "start_angle": demo_mean_angle(ds),
        "boxes": boxes_to_dict(boxes),
        "config": {
            "command": "train",
            "data": str(args.data),
            "K": args.K,
            "resample": args.resample,
            "box_pts": args.box_pts,
        },
    }
    for key in ("hand_channel", "position_channels"):
        if key in ds.meta:
            meta[key] = ds.meta[key]
    save_model(ModelArtifact(model, sg, None, None, meta), args.out)
    _say(
        f"wrote {args.out}: K={model.K} P={model.P} D={model.dim} "
        f"log-likelihood={model.log_likelihoods[-1]:.6g} "
        f"({len(model.log_likelihoods)} EM iterations)"
    )
    return 0


def _cmd_optimize_alpha(args) -> int:
    art = load_model(args.model)
    ds = load_dataset(args.data)
    if ds.dim != art.model.dim or ds.n_frames != art.model.P:
        raise CliError(
            f"data ({ds.dim} channels, {ds.n_frames} frames) does not match "
            f"model ({art.model.dim} channels, {art.model.P} frames)"
        )
    if not ds.aligned:
        raise CliError("demonstrations have unequal lengths; resample first")
    lo, hi = args.bounds
    if not lo < hi:
        raise CliError(f"--bounds must be increasing, got {lo} {hi}")
    cfg = AlphaSearchConfig(
        scan_points=args.scan,
        window=args.window,
        loss=LossConfig(args.loss_mode),
    )
    res = optimize_alpha(art.model, ds, (lo, hi), cfg)
    window = args.window if args.window is not None else default_window(ds.T)
    meta = dict(art.meta)
    meta["alpha_search"] = {
        "config": {
            "command": "optimize-alpha",
            "model": str(args.model),
            "data": str(args.data),
            "bounds": [lo, hi],
            "scan": args.scan,
            "window": window,
            "loss_mode": args.loss_mode,
        },
        "data_sha256": sha256_file(args.data),
        "model_sha256": sha256_file(args.model),
        "loss_star": res.loss_star,
        "n_evaluations": len(res.evaluations),
    }
    save_model(
        ModelArtifact(art.model, art.step_gaussians, res.alpha_star, window, meta),
        args.out,
    )
    if args.trace is not None:
        rows = [{"alpha": a, "loss": v} for a, v in res.evaluations]
        export_csv(rows, args.trace, meta=meta["alpha_search"]["config"])
    _say(
        f"wrote {args.out}: alpha={res.alpha_star:.6g} loss={res.loss_star:.6g} "
        f"window={window} ({len(res.evaluations)} evaluations)"
    )
    return 0


def _cmd_reproduce(args) -> int:
    art = load_model(args.model)
    with open(args.frames, "r", encoding="utf-8") as fh:
        try:
            frames_doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"{args.frames}: not valid JSON ({exc})") from exc
    frames = _frames_from_doc(frames_doc, art.model.dim)
    if len(frames) != art.model.P:
        raise CliError(f"model expects {art.model.P} frames, file has {len(frames)}")
    times = art.meta.get("times")
    if not times:
        raise CliError("model file lacks generation times; re-run train")
    times = np.asarray(times, dtype=float)
    if args.method == "tpgmr":
        traj = reproduce(art.model, frames, times)
    else:
        profile = _profile_from_artifact(art)
        traj = reproduce_weighted(art.model, frames, profile, times)
    config = {
        "command": "reproduce",
        "model": str(args.model),
        "model_sha256": sha256_file(args.model),
        "frames": str(args.frames),
        "frames_sha256": sha256_file(args.frames),
        "method": args.method,
    }
    export_csv(traj, args.out, meta=config)
    _say(f"wrote {args.out}: {traj.T} steps, method={args.method}")
    return 0


def _cmd_cross_validate(args) -> int:
    ds = load_dataset(args.data)
    if not ds.aligned:
        raise CliError("demonstrations have unequal lengths; resample first")
    lo, hi = args.bounds
    if not lo < hi:
        raise CliError(f"--bounds must be increasing, got {lo} {hi}")
    cfg = LooConfig(
        bounds=(lo, hi),
        search=AlphaSearchConfig(
            scan_points=args.scan, window=args.window, loss=LossConfig(args.loss_mode)
        ),
    )
    mean, std, folds = loo_cross_validate(ds, args.method, args.K, cfg)
    config = {
        "command": "cross-validate",
        "data": str(args.data),
        "data_sha256": sha256_file(args.data),
        "method": args.method,
        "K": args.K,
        "bounds": [lo, hi],
        "scan": args.scan,
        "window": args.window,
        "loss_mode": args.loss_mode,
    }
    report = {
        "method": args.method,
        "K": args.K,
        "n_folds": len(folds),
        "rmse_mean": mean,
        "rmse_std": std,
        "per_fold": folds,
        "config": config,
    }
    _write_json(report, args.report)
    rows = [{"fold": i, "rmse": v} for i, v in enumerate(folds)]
    export_csv(rows, _sibling_csv(args.report), meta=config)
    _say(f"{args.method}: rmse_mean={mean:.6g} rmse_std={std:.6g} over {len(folds)} folds")
    return 0


def _cmd_grid_eval(args) -> int:
    art = load_model(args.model)
    for key in ("goal_frame", "boxes", "times"):
        if key not in art.meta:
            raise CliError(f"model file lacks training metadata {key!r}; re-run train")
    goal_doc = art.meta["goal_frame"]
    goal = TaskFrame(
        np.asarray(goal_doc["A"], float),
        np.asarray(goal_doc["b"], float),
        str(goal_doc.get("name", "goal")),
    )
    boxes = boxes_from_dict(art.meta["boxes"])
    times = np.asarray(art.meta["times"], dtype=float)

    if args.orientation == "demo_mean":
        if "start_angle" not in art.meta:
            raise CliError("model file lacks start_angle metadata; re-run train")
        rule, angle = "fixed", float(art.meta["start_angle"])
    elif args.orientation.startswith("fixed:"):
        try:
            rule, angle = "fixed", float(args.orientation.split(":", 1)[1])
        except ValueError as exc:
            raise CliError(f"bad --orientation {args.orientation!r}") from exc
    else:
        raise CliError("--orientation must be demo_mean or fixed:<radians>")

    half = args.grid_extent / 2.0
    grid = GridSpec(
        goal_frame=goal,
        x_range=(-half, half),
        y_range=(-half, half),
        cells_per_side=args.cells,
        orientation_rule=rule,
        orientation_angle=angle,
    )
    profile = None
    if args.method == "wtpgmr":
        profile = _profile_from_artifact(art)
    bundle = ModelBundle(art.model, times, profile)
    rows, summary = grid_eval(bundle, grid, boxes, n_threads=_n_threads())
    config = {
        "command": "grid-eval",
        "model": str(args.model),
        "model_sha256": sha256_file(args.model),
        "method": args.method,
        "grid_extent": args.grid_extent,
        "cells": args.cells,
        "orientation": args.orientation,
        "resolved_angle": angle,
    }
    _write_json({"summary": summary, "config": config}, args.report)
    export_csv(rows, _sibling_csv(args.report), meta=config)
    _say(
        f"{args.method}: {summary['n_cells']} cells, "
        f"constraint_err_mean={summary['constraint_err_mean']:.6g} "
        f"end_err_mean={summary['end_err_mean']:.6g} "
        f"path_length_mean={summary['path_length_mean']:.6g}"
    )
    return 0


def _cmd_weights(args) -> int:
    art = load_model(args.model)
    profile = _profile_from_artifact(art, alpha=args.alpha, window=args.window)
    config = {
        "command": "weights",
        "model": str(args.model),
        "model_sha256": sha256_file(args.model),
        "alpha": profile.alpha,
        "window": profile.window,
    }
    export_csv(profile, args.out, meta=config)
    _say(f"wrote {args.out}: {profile.T} steps x {profile.P} frames, alpha={profile.alpha:.6g}")
    return 0


# ------------------------------------------------------------------ parser


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wtpgmr", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen-data", help="generate a synthetic demonstration set")
    p.add_argument("task", choices=["reaching", "pickplace"])
    p.add_argument("--M", type=int, default=4, help="number of demonstrations")
    p.add_argument("--T", type=int, default=200, help="points per demonstration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=None, help="spatial noise std")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_gen_data)

    p = sub.add_parser("train", help="fit the mixture and the per-step Gaussians")
    p.add_argument("--data", required=True)
    p.add_argument("--K", type=int, default=3, help="mixture components")
    p.add_argument("--resample", type=int, default=None, help="align demos to this length first")
    p.add_argument("--box-pts", type=int, default=10, help="points per constraint box end")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("optimize-alpha", help="search the weight exponent")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--bounds", nargs=2, type=float, default=[-8.0, 8.0], metavar=("LO", "HI"))
    p.add_argument("--scan", type=int, default=33, help="coarse scan points (0 to skip)")
    p.add_argument("--window", type=int, default=None, help="smoothing width (odd)")
    p.add_argument("--loss-mode", choices=["inverse", "literal"], default="inverse")
    p.add_argument("--trace", default=None, help="optional CSV of (alpha, loss) evaluations")
    p.add_argument("--out", required=True, help="updated model file")
    p.set_defaults(handler=_cmd_optimize_alpha)

    p = sub.add_parser("reproduce", help="generate a trajectory for given frames")
    p.add_argument("--model", required=True)
    p.add_argument("--frames", required=True, help="JSON file with the task frames")
    p.add_argument("--method", choices=["tpgmr", "wtpgmr"], required=True)
    p.add_argument("--out", required=True, help="trajectory CSV")
    p.set_defaults(handler=_cmd_reproduce)

    p = sub.add_parser("cross-validate", help="exhaustive leave-one-out RMSE")
    p.add_argument("--data", required=True)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--method", choices=["tpgmr", "wtpgmr"], required=True)
    p.add_argument("--bounds", nargs=2, type=float, default=[-8.0, 8.0], metavar=("LO", "HI"))
    p.add_argument("--scan", type=int, default=33)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--loss-mode", choices=["inverse", "literal"], default="inverse")
    p.add_argument("--report", required=True, help="summary JSON (per-fold CSV beside it)")
    p.set_defaults(handler=_cmd_cross_validate)

    p = sub.add_parser("grid-eval", help="extrapolation sweep over start positions")
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=["tpgmr", "wtpgmr"], default="wtpgmr")
    p.add_argument("--grid-extent", type=float, default=10.0, help="side length, centred on 0")
    p.add_argument("--cells", type=int, default=21, help="cells per side")
    p.add_argument("--orientation", default="demo_mean", help="demo_mean or fixed:<radians>")
    p.add_argument("--report", required=True, help="summary JSON (cell CSV beside it)")
    p.set_defaults(handler=_cmd_grid_eval)

    p = sub.add_parser("weights", help="export the per-step frame weight profile")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha", type=float, default=None, help="override the stored exponent")
    p.add_argument("--window", type=int, default=None, help="override the stored smoothing")
    p.add_argument("--out", required=True, help="profile CSV")
    p.set_defaults(handler=_cmd_weights)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except (CliError, DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GaussianError, ModelError, OptimizeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
