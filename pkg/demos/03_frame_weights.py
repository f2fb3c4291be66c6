"""How the relevance profile reacts to the shape exponent.

Per step and frame, the demonstrations are summarized by a single local
Gaussian; the weights are a softmax over the frames' covariance
determinants raised to the exponent alpha. alpha = 0 ignores the data
(uniform weights), negative alpha favours the frame in which the demos
cluster tightest, positive alpha favours the loosest frame. The search
picks the exponent whose regenerated training demos match best where
the model claims confidence.

Run:  python3 demos/03_frame_weights.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wtpgmr.dataio import gen_reaching
from wtpgmr.optimize import optimize_alpha
from wtpgmr.relevance import default_window, fit_step_gaussians, frame_weights, smooth
from wtpgmr.tpmodel import fit_em

OUT = os.path.join(os.path.dirname(__file__), "out")


def main():
    os.makedirs(OUT, exist_ok=True)
    ds = gen_reaching(M=4, T=200, seed=1)
    model = fit_em(ds, 3)
    sg = fit_step_gaussians(ds)
    window = default_window(ds.T)

    res = optimize_alpha(model, ds)
    print(f"alpha*={res.alpha_star:.3f} loss={res.loss_star:.3g} "
          f"window={window} ({len(res.evaluations)} evaluations)")

    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    for alpha in (0.0, -0.5, res.alpha_star, -4.0):
        profile = smooth(frame_weights(sg, alpha), window)
        label = f"alpha={alpha:.2f}"
        if abs(alpha - res.alpha_star) < 1e-12:
            label += " (optimized)"
        axes[0].plot(profile.weights[:, 0], label=label)
    axes[0].set_xlabel("step")
    axes[0].set_ylabel("weight of the start frame")
    axes[0].set_ylim(-0.02, 1.02)
    axes[0].legend(fontsize=8)
    axes[0].set_title("smoothed weight profiles")

    alphas = [a for a, _ in sorted(res.evaluations)]
    losses = [v for _, v in sorted(res.evaluations)]
    axes[1].plot(alphas, losses, ".-", ms=4)
    axes[1].axvline(res.alpha_star, color="r", ls="--", lw=1)
    axes[1].set_xlabel("alpha")
    axes[1].set_ylabel("variance-weighted loss")
    axes[1].set_title("search evaluations")
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    path = os.path.join(OUT, "frame_weights.png")
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
