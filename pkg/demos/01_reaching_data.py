"""Generate a synthetic reaching dataset and look at it from each frame.

Every demonstration leaves its start pose along the gripper axis, swings
through a curved mid-section, and descends vertically into the shared
goal. Seen from the world the paths fan out; seen from the start frame
the exits line up; seen from the goal frame the approaches line up. That
frame-dependent agreement is exactly what the relevance weights pick up.

Run:  python3 demos/01_reaching_data.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wtpgmr.dataio import gen_reaching

OUT = os.path.join(os.path.dirname(__file__), "out")


def local_paths(ds, frame_idx):
    """Each demo's spatial path expressed in one of its own frames."""
    out = []
    for demo in ds.demos:
        loc = demo.frames[frame_idx].inverse_apply(demo.points)
        out.append(loc[:, 1:3])
    return out


def main():
    os.makedirs(OUT, exist_ok=True)
    ds = gen_reaching(M=4, T=200, seed=0)
    print(f"dataset: {ds.M} demos x {ds.T} steps, channels (t, x, y)")
    for demo in ds.demos:
        names = ", ".join(f.name for f in demo.frames)
        print(f"  start {demo.points[0, 1:3].round(3)}  frames: {names}")

    fig, axes = plt.subplots(1, 3, figsize=(13, 4.2))
    for demo in ds.demos:
        axes[0].plot(demo.points[:, 1], demo.points[:, 2], lw=1.2)
        axes[0].plot(*demo.points[0, 1:3], "o", ms=4, color="k")
    axes[0].plot(-0.8, -0.8, "r*", ms=12, label="goal")
    axes[0].set_title("world frame")
    axes[0].legend()

    for ax, j, title in ((axes[1], 0, "start frame"), (axes[2], 1, "goal frame")):
        for path in local_paths(ds, j):
            ax.plot(path[:, 0], path[:, 1], lw=1.2)
        ax.set_title(f"{title} (local coordinates)")

    for ax in axes:
        ax.set_aspect("equal")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    path = os.path.join(OUT, "reaching_frames.png")
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
