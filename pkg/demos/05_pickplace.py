"""Pick-and-place: grasp accuracy across a tray of unseen targets.

Three demonstrations grasp objects near one edge of the tray and drop
them at a fixed disposal point. The trained model is then asked to grasp
at 100 tray positions, most of them far from the demonstrated ones. The
grasp error is the distance, in the grasp-target frame, between where
the generated hand closes and where the demonstrated hands closed.

Run:  python3 demos/05_pickplace.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wtpgmr.dataio import TraySpec, gen_pickplace
from wtpgmr.evalx import critical_point_errors
from wtpgmr.optimize import optimize_alpha
from wtpgmr.relevance import (
    default_window,
    fit_step_gaussians,
    frame_weights,
    reproduce_weighted,
    smooth,
)
from wtpgmr.tpmodel import TaskFrame, fit_em, reproduce

OUT = os.path.join(os.path.dirname(__file__), "out")


def anchor(pos, name):
    b = np.zeros(8)
    b[1:4] = pos
    return TaskFrame(np.eye(8), b, name)


def main():
    os.makedirs(OUT, exist_ok=True)
    ds = gen_pickplace(M=3, T=200, seed=0)
    demo_targets = np.array([d.frames[0].b[1:4] for d in ds.demos])
    print(f"dataset: {ds.M} demos x {ds.T} steps, {ds.dim} channels")
    print(f"demonstrated grasp targets:\n{demo_targets.round(3)}")

    model = fit_em(ds, 7)
    res = optimize_alpha(model, ds)
    print(f"alpha*={res.alpha_star:.3f}")
    profile = smooth(
        frame_weights(fit_step_gaussians(ds), res.alpha_star), default_window(ds.T)
    )
    times = ds.demos[0].points[:, 0]

    tray = TraySpec()
    disposal = np.asarray(tray.disposal)
    targets = tray.positions()
    errs = {"baseline": [], "weighted": []}
    for tgt in targets:
        frames = (anchor(tgt, "grasp"), anchor(disposal, "disposal"))
        tb = reproduce(model, frames, times)
        tw = reproduce_weighted(model, frames, profile, times)
        errs["baseline"].append(critical_point_errors(tb, ds, frames)[1])
        errs["weighted"].append(critical_point_errors(tw, ds, frames)[1])

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
    vmax = np.nanmax(errs["baseline"])
    for ax, name in zip(axes, errs):
        e = np.asarray(errs[name])
        print(f"{name:9s} grasp error: median {np.nanmedian(e):.4f}  "
              f"max {np.nanmax(e):.4f}")
        sc = ax.scatter(targets[:, 0], targets[:, 1], c=e, s=60,
                        vmin=0.0, vmax=vmax, cmap="viridis")
        ax.plot(demo_targets[:, 0], demo_targets[:, 1], "r^", ms=9,
                mec="w", label="demonstrated")
        ax.set_title(f"{name}: grasp error per tray target")
        ax.set_aspect("equal")
        ax.legend(loc="lower right", fontsize=8)
        fig.colorbar(sc, ax=ax, shrink=0.9)
    fig.tight_layout()
    path = os.path.join(OUT, "pickplace_tray.png")
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
