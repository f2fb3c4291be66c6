"""Serialization (canonical JSON dataset/model files, CSV export) and the
two synthetic task generators: planar reaching and 8-channel pick-place.

JSON files are written canonically: sorted keys, two-space indent, repr
floats. That makes save -> load -> save byte-stable, which the command
line layer relies on for reproducibility checks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .relevance import RelevanceProfile, StepGaussians
from .tpmodel import Dataset, Demonstration, ModelError, TaskFrame, TPGMM, Trajectory

__all__ = [
    "DataError",
    "DATASET_SCHEMA_VERSION",
    "MODEL_SCHEMA_VERSION",
    "ModelArtifact",
    "canonical_json",
    "sha256_file",
    "dataset_to_dict",
    "dataset_from_dict",
    "save_dataset",
    "load_dataset",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "gen_reaching",
    "TraySpec",
    "gen_pickplace",
    "export_csv",
]

DATASET_SCHEMA_VERSION = 1
MODEL_SCHEMA_VERSION = 1


class DataError(ValueError):
    """Malformed file or schema violation; message carries the JSON path."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise DataError(f"{path}: {msg}")


def _get(doc: dict, key: str, path: str):
    _require(isinstance(doc, dict), path, "expected an object")
    _require(key in doc, path, f"missing key {key!r}")
    return doc[key]


# ---------------------------------------------------------------- datasets


def dataset_to_dict(dataset: Dataset) -> dict:
    meta = dict(dataset.meta)
    return {
        "schema_version": DATASET_SCHEMA_VERSION,
        "kind": "dataset",
        "name": meta.get("name", ""),
        "D": dataset.dim,
        "P": dataset.n_frames,
        "channel_names": list(meta.get("channel_names", [])),
        "meta": meta,
        "demos": [
            {
                "points": demo.points.tolist(),
                "frames": [
                    {"A": f.A.tolist(), "b": f.b.tolist(), "name": f.name}
                    for f in demo.frames
                ],
            }
            for demo in dataset.demos
        ],
    }


def dataset_from_dict(doc: dict, path: str = "$") -> Dataset:
    _require(isinstance(doc, dict), path, "expected an object")
    version = _get(doc, "schema_version", path)
    _require(version == DATASET_SCHEMA_VERSION, path, f"unsupported schema_version {version}")
    D = _get(doc, "D", path)
    P = _get(doc, "P", path)
    demos_doc = _get(doc, "demos", path)
    _require(isinstance(demos_doc, list) and demos_doc, f"{path}.demos", "must be a non-empty list")
    demos = []
    for m, ddoc in enumerate(demos_doc):
        dpath = f"{path}.demos[{m}]"
        pts = np.asarray(_get(ddoc, "points", dpath), dtype=float)
        _require(pts.ndim == 2, f"{dpath}.points", "must be a rectangular 2-d array")
        _require(pts.shape[1] == D, f"{dpath}.points", f"row width {pts.shape[1]} != D={D}")
        frames_doc = _get(ddoc, "frames", dpath)
        _require(len(frames_doc) == P, f"{dpath}.frames", f"expected {P} frames")
        frames = []
        for j, fdoc in enumerate(frames_doc):
            fpath = f"{dpath}.frames[{j}]"
            try:
                frames.append(
                    TaskFrame(
                        np.asarray(_get(fdoc, "A", fpath), dtype=float),
                        np.asarray(_get(fdoc, "b", fpath), dtype=float),
                        str(fdoc.get("name", "")),
                    )
                )
            except ModelError as exc:
                raise DataError(f"{fpath}: {exc}") from exc
        try:
            demos.append(Demonstration(pts, tuple(frames)))
        except ModelError as exc:
            raise DataError(f"{dpath}: {exc}") from exc
    meta = dict(doc.get("meta", {}))
    meta.setdefault("name", doc.get("name", ""))
    meta.setdefault("channel_names", list(doc.get("channel_names", [])))
    try:
        return Dataset(tuple(demos), meta)
    except ModelError as exc:
        raise DataError(f"{path}: {exc}") from exc


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(dataset_to_dict(dataset)))


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc
    return dataset_from_dict(doc)


# ------------------------------------------------------------------ models


@dataclass(frozen=True)
class ModelArtifact:
    """Everything a generation run needs: the mixture, the per-step fits,
    the chosen exponent/window (absent until optimized), and free-form
    training metadata (goal frame, constraint boxes, hashes, config)."""

    model: TPGMM
    step_gaussians: StepGaussians | None = None
    alpha: float | None = None
    window: int | None = None
    meta: dict = field(default_factory=dict)


def model_to_dict(art: ModelArtifact) -> dict:
    model = art.model
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "kind": "model",
        "K": model.K,
        "P": model.P,
        "D": model.dim,
        "priors": model.priors.tolist(),
        "frames_models": [
            {"means": model.means[j].tolist(), "covs": model.covs[j].tolist()}
            for j in range(model.P)
        ],
        "step_gaussians": None,
        "alpha": art.alpha,
        "window": art.window,
        "training_meta": dict(art.meta),
    }
    if art.step_gaussians is not None:
        sg = art.step_gaussians
        doc["step_gaussians"] = {"means": sg.means.tolist(), "covs": sg.covs.tolist()}
    return doc


def model_from_dict(doc: dict, path: str = "$") -> ModelArtifact:
    _require(isinstance(doc, dict), path, "expected an object")
    version = _get(doc, "schema_version", path)
    _require(version == MODEL_SCHEMA_VERSION, path, f"unsupported schema_version {version}")
    K, P, D = (_get(doc, k, path) for k in ("K", "P", "D"))
    priors = np.asarray(_get(doc, "priors", path), dtype=float)
    frames_doc = _get(doc, "frames_models", path)
    _require(len(frames_doc) == P, f"{path}.frames_models", f"expected {P} entries")
    means = np.empty((P, K, D))
    covs = np.empty((P, K, D, D))
    for j, fdoc in enumerate(frames_doc):
        fpath = f"{path}.frames_models[{j}]"
        mu = np.asarray(_get(fdoc, "means", fpath), dtype=float)
        sig = np.asarray(_get(fdoc, "covs", fpath), dtype=float)
        _require(mu.shape == (K, D), f"{fpath}.means", f"shape {mu.shape} != ({K}, {D})")
        _require(sig.shape == (K, D, D), f"{fpath}.covs", f"shape {sig.shape} != ({K}, {D}, {D})")
        means[j], covs[j] = mu, sig
    try:
        model = TPGMM(priors, means, covs)
    except ModelError as exc:
        raise DataError(f"{path}: {exc}") from exc
    sg = None
    sg_doc = doc.get("step_gaussians")
    if sg_doc is not None:
        try:
            sg = StepGaussians(
                np.asarray(_get(sg_doc, "means", f"{path}.step_gaussians"), dtype=float),
                np.asarray(_get(sg_doc, "covs", f"{path}.step_gaussians"), dtype=float),
            )
        except ModelError as exc:
            raise DataError(f"{path}.step_gaussians: {exc}") from exc
    alpha = doc.get("alpha")
    window = doc.get("window")
    return ModelArtifact(
        model,
        sg,
        None if alpha is None else float(alpha),
        None if window is None else int(window),
        dict(doc.get("training_meta", {})),
    )


def save_model(art: ModelArtifact, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(model_to_dict(art)))


def load_model(path) -> ModelArtifact:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)


# -------------------------------------------------------------- generators


def _rot_frame(angle: float, origin, name: str) -> TaskFrame:
    c, s = np.cos(angle), np.sin(angle)
    A = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    return TaskFrame(A, np.array([0.0, origin[0], origin[1]]), name)


def gen_reaching(M: int = 4, T: int = 200, seed: int = 0, noise_std: float = 0.001) -> Dataset:
    """Planar pocket-to-pocket reaching demonstrations.

    Every path withdraws straight along the start frame's x axis (first
    30% of the steps, fixed length, like pulling out of a slot), bends
    through a cubic curve onto a shared vertical approach corridor, and
    descends into the goal at (-0.8, -0.8) from roughly 1.5 away. The
    start frame sits on the start position rotated to the direction of
    travel; the goal frame has identity orientation. The withdrawal is
    identical across demonstrations in start-frame coordinates and the
    corridor is identical in goal-frame coordinates, so each frame is
    informative over its own portion of the motion. Deterministic given
    the arguments.
    """
    if M < 2:
        raise DataError(f"M={M}: need at least 2 demonstrations")
    if T < 20:
        raise DataError(f"T={T}: need at least 20 points")
    rng = np.random.default_rng(seed)
    goal = np.array([-0.8, -0.8])
    base = np.linspace(np.deg2rad(25.0), np.deg2rad(155.0), M)
    n_exit = int(round(0.30 * T))
    n_app = int(round(0.40 * T))
    n_mid = T - n_exit - n_app
    entry = goal + np.array([0.0, 0.75])
    demos = []
    for m in range(M):
        phi = base[m] + rng.normal(0.0, np.deg2rad(8.0))
        r = 1.5 + rng.normal(0.0, 0.22)
        start = goal + r * np.array([np.cos(phi), np.sin(phi)])
        heading = np.arctan2(*(entry - start)[::-1]) + rng.normal(0.0, np.deg2rad(10.0))
        d = np.array([np.cos(heading), np.sin(heading)])

        e = start + 0.45 * d
        k = 0.35 * np.linalg.norm(entry - e)
        c1, c2 = e + k * d, entry + np.array([0.0, k])

        u1 = np.linspace(0.0, 1.0, n_exit, endpoint=False)[:, None]
        seg1 = start + u1 * (e - start)
        u = np.linspace(0.0, 1.0, n_mid, endpoint=False)[:, None]
        seg2 = (
            (1 - u) ** 3 * e
            + 3 * (1 - u) ** 2 * u * c1
            + 3 * (1 - u) * u**2 * c2
            + u**3 * entry
        )
        u3 = np.linspace(0.0, 1.0, n_app)[:, None]
        seg3 = entry + u3 * (goal - entry)

        xy = np.vstack([seg1, seg2, seg3])
        xy = xy + rng.normal(0.0, 1.0, xy.shape) * noise_std
        pts = np.column_stack([np.arange(1, T + 1, dtype=float), xy])
        frames = (
            _rot_frame(heading, start, "start"),
            TaskFrame(np.eye(3), np.array([0.0, goal[0], goal[1]]), "goal"),
        )
        demos.append(Demonstration(pts, frames))
    meta = {
        "name": "reaching",
        "channel_names": ["t", "x", "y"],
        "frame_names": ["start", "goal"],
    }
    return Dataset(tuple(demos), meta)


@dataclass(frozen=True)
class TraySpec:
    """Grid of graspable target positions plus fixed scene anchors."""

    nx: int = 10
    ny: int = 10
    x_range: tuple = (0.3, 0.7)
    y_range: tuple = (-0.2, 0.2)
    z: float = 0.02
    disposal: tuple = (0.1, -0.45, 0.05)
    home: tuple = (0.0, 0.0, 0.35)
    hover: float = 0.15

    def positions(self) -> np.ndarray:
        xs = np.linspace(*self.x_range, self.nx)
        ys = np.linspace(*self.y_range, self.ny)
        gx, gy = np.meshgrid(xs, ys, indexing="xy")
        out = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, self.z)])
        return out


def _ident_frame(pos, name: str) -> TaskFrame:
    b = np.zeros(8)
    b[1:4] = pos
    return TaskFrame(np.eye(8), b, name)


def _smoothstep(u: np.ndarray) -> np.ndarray:
    return u * u * (3.0 - 2.0 * u)


def gen_pickplace(
    M: int = 3,
    T: int = 200,
    seed: int = 0,
    tray: TraySpec = TraySpec(),
    targets=None,
    noise_std: float = 0.005,
) -> Dataset:
    """Pick-and-place demonstrations over an 8-channel state
    (t, x, y, z, rx, ry, rz, hand).

    Motion: home, hover over the target, descend, close the hand (1 ->
    0), lift, carry to the disposal point, open the hand (0 -> 1), and
    retreat. Orientation stays pointing down. Default demo targets
    cluster near the left edge of the top and bottom tray rows (two
    compact regions); pass explicit target positions to override. Both
    task frames (grasp target, disposal) are pure translations.
    Deterministic given the arguments.
    """
    if M < 2:
        raise DataError(f"M={M}: need at least 2 demonstrations")
    if T < 50:
        raise DataError(f"T={T}: need at least 50 points")
    rng = np.random.default_rng(seed)
    grid = tray.positions()
    if targets is None:
        # Alternate between the top and bottom rows, staying near the
        # left edge so the sweep extrapolates across the rest of the tray.
        ys = grid[:, 1]
        top = grid[ys == ys.max()]
        bot = grid[ys == ys.min()]
        targets = []
        for m in range(M):
            row = top if m % 2 == 0 else bot
            targets.append(row[(m // 2) % row.shape[0]])
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (M, 3):
        raise DataError(f"targets must be ({M}, 3), got {targets.shape}")

    home = np.asarray(tray.home)
    disp = np.asarray(tray.disposal)
    above_d = disp + np.array([0.0, 0.0, tray.hover])
    u = np.linspace(0.0, 1.0, T)
    hand = np.interp(u, [0.0, 0.34, 0.38, 0.78, 0.82, 1.0], [1, 1, 0, 0, 1, 1])
    ori = np.tile([np.pi, 0.0, 0.0], (T, 1))

    demos = []
    for m in range(M):
        tgt = targets[m]
        above_t = tgt + np.array([0.0, 0.0, tray.hover])
        segs = [
            (0.00, 0.18, home, above_t),
            (0.18, 0.30, above_t, tgt),
            (0.30, 0.40, tgt, tgt),
            (0.40, 0.52, tgt, above_t),
            (0.52, 0.68, above_t, above_d),
            (0.68, 0.76, above_d, disp),
            (0.76, 0.86, disp, disp),
            (0.86, 1.00, disp, above_d),
        ]
        pos = np.empty((T, 3))
        for lo, hi, p_from, p_to in segs:
            sel = (u >= lo) & (u < hi) if hi < 1.0 else (u >= lo)
            if not np.any(sel):
                continue
            s = _smoothstep((u[sel] - lo) / (hi - lo))
            pos[sel] = p_from + s[:, None] * (p_to - p_from)
        pos = pos + rng.normal(0.0, 1.0, pos.shape) * noise_std
        pts = np.column_stack([np.arange(1, T + 1, dtype=float), pos, ori, hand])
        frames = (_ident_frame(tgt, "grasp"), _ident_frame(disp, "disposal"))
        demos.append(Demonstration(pts, frames))
    meta = {
        "name": "pickplace",
        "channel_names": ["t", "x", "y", "z", "rx", "ry", "rz", "h"],
        "frame_names": ["grasp", "disposal"],
        "hand_channel": 7,
        "position_channels": [1, 2, 3],
    }
    return Dataset(tuple(demos), meta)


# -------------------------------------------------------------- CSV export


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def export_csv(obj, path, meta: dict | None = None) -> None:
    """Write a trajectory, relevance profile, or metrics table as CSV.

    Full float precision (repr), deterministic column order; an optional
    metadata dict becomes a single '# meta: {...}' comment line above the
    header.
    """
    if isinstance(obj, Trajectory):
        S = obj.means.shape[1]
        header = (
            ["time"]
            + [f"mean_{c + 1}" for c in range(S)]
            + [f"var_{c + 1}" for c in range(S)]
            + ["flag"]
        )
        rows = [
            [obj.times[n]]
            + list(obj.means[n])
            + list(np.diag(obj.covs[n]))
            + [int(obj.flags[n])]
            for n in range(obj.T)
        ]
    elif isinstance(obj, RelevanceProfile):
        header = ["step"] + [f"frame_{j + 1}" for j in range(obj.P)]
        rows = [[n + 1] + list(obj.weights[n]) for n in range(obj.T)]
    elif isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            raise DataError("cannot export an empty table")
        header = list(obj[0].keys())
        for r, row in enumerate(obj):
            if list(row.keys()) != header:
                raise DataError(f"table row {r} does not match the header")
        rows = [[row[k] for k in header] for row in obj]
    else:
        raise DataError(f"cannot export object of type {type(obj).__name__}")

    lines = []
    if meta is not None:
        lines.append(
            "# meta: "
            + json.dumps(meta, sort_keys=True, separators=(",", ":"), allow_nan=False)
        )
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
