"""Per-frame tracking loop: bootstrap, candidate evaluation, member updates.

Frame order per step: draw candidates, score them with the frozen member
models, flag/vote/label, measure member disagreement and reweight, push
each member's selected samples and retrain it, then test for occlusion and
either re-estimate the state or hold the previous one. Updates run before
the occlusion branch unless ``freeze_on_occlusion`` is set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import ensemble as ens
from .classifier import LinearModel, MemberState, TrainingBuffer, update
from .ensemble import EnsembleConfig, Mode, TrackerOutput
from .errors import InitializationError, NoPositiveError
from .features import FAMILY_DIM, Family, Frame, family_matrices
from .geometry import BBox, clamp_boxes, clamp_to_frame, iou_many
from .sampling import draw_sample_arrays

CHECKPOINT_VERSION = 1

INIT_POSITIVES = 64
INIT_NEGATIVES = 192
INIT_EPOCHS = 50
INIT_POS_IOU = 0.8
INIT_NEG_IOU = 0.3
_REJECTION_CAP = 10_000

# Appearance windows are padded around the candidate box so the object
# contour falls inside the descriptor patch; without it the scale response
# is flat and the score-weighted estimate shrink-drifts.
CONTEXT_SCALE = 1.35


def _appearance_boxes(boxes: np.ndarray) -> np.ndarray:
    out = np.array(boxes, dtype=np.float64)
    out[:, 2] *= CONTEXT_SCALE
    out[:, 3] *= CONTEXT_SCALE
    return out


@dataclass
class TrackerState:
    cfg: EnsembleConfig
    members: list
    box: BBox
    frame_index: int
    rng: np.random.Generator
    frame_size: tuple

    @property
    def alphas(self) -> np.ndarray:
        return np.array([m.alpha for m in self.members], dtype=np.float64)


def _rejection_draw(
    gt: BBox,
    frame_w: int,
    frame_h: int,
    rng: np.random.Generator,
    count: int,
    accept,
    spread_xy: float,
    spread_s: float,
    include_identity: bool,
) -> np.ndarray:
    """Uniform proposals around gt filtered by an IoU predicate."""
    rows = []
    if include_identity:
        rows.append(gt.as_array())
    total = len(rows)
    drawn = 0
    while total < count:
        if drawn >= _REJECTION_CAP:
            raise InitializationError(
                f"could not draw {count} samples within {_REJECTION_CAP} proposals"
            )
        batch = min(256, _REJECTION_CAP - drawn)
        drawn += batch
        dx = rng.uniform(-spread_xy * gt.w, spread_xy * gt.w, batch)
        dy = rng.uniform(-spread_xy * gt.h, spread_xy * gt.h, batch)
        ds = rng.uniform(-spread_s, spread_s, batch)
        scale = np.exp(ds)
        raw = np.column_stack([gt.cx + dx, gt.cy + dy, gt.w * scale, gt.h * scale])
        boxes = clamp_boxes(raw, frame_w, frame_h)
        keep = accept(iou_many(boxes, gt))
        for b in boxes[keep]:
            rows.append(b)
            total += 1
            if total == count:
                break
    return np.stack(rows)


def make_members(cfg: EnsembleConfig) -> list:
    spans = cfg.member_spans()
    families = cfg.member_families()
    return [
        MemberState(
            model=LinearModel.zeros(FAMILY_DIM[fam], cfg.learn_rate, cfg.reg),
            buffer=TrainingBuffer(span, FAMILY_DIM[fam]),
            family=fam,
            tau=cfg.tau_member,
        )
        for span, fam in zip(spans, families)
    ]


def init_tracker(
    frame: Frame,
    gt: BBox,
    cfg: EnsembleConfig,
    rng: np.random.Generator | None = None,
) -> TrackerState:
    """Bootstrap every member from ground truth on the first frame.

    Draws 64 positives (IoU >= 0.8, identity first) and 192 negatives
    (IoU <= 0.3, within twice the search radius), pushes all of them into
    every member's buffer at frame index 1, and trains 50 epochs.
    """
    cfg.validate()
    if rng is None:
        rng = np.random.default_rng(cfg.sampler.seed)
    if clamp_to_frame(gt, frame.width, frame.height) != gt:
        raise InitializationError("ground-truth box is degenerate or outside the frame")

    pos = _rejection_draw(
        gt, frame.width, frame.height, rng, INIT_POSITIVES,
        lambda r: r >= INIT_POS_IOU, spread_xy=0.12, spread_s=0.05,
        include_identity=True,
    )
    neg = _rejection_draw(
        gt, frame.width, frame.height, rng, INIT_NEGATIVES,
        lambda r: r <= INIT_NEG_IOU,
        spread_xy=2.0 * cfg.sampler.sigma_xy_rel, spread_s=0.15,
        include_identity=False,
    )
    boxes = np.vstack([pos, neg])
    labels = np.concatenate([
        np.ones(INIT_POSITIVES), -np.ones(INIT_NEGATIVES)
    ])

    members = make_members(cfg)
    feats = family_matrices(frame, _appearance_boxes(boxes), {m.family for m in members})
    for member in members:
        member.buffer.push(feats[member.family], labels, frame.index)
        update(member.model, member.buffer, INIT_EPOCHS)

    return TrackerState(
        cfg=cfg,
        members=members,
        box=gt,
        frame_index=frame.index,
        rng=rng,
        frame_size=(frame.width, frame.height),
    )


def _member_margins(members, feats, boxes_n: int) -> np.ndarray:
    margins = np.empty((boxes_n, len(members)), dtype=np.float64)
    for c, member in enumerate(members):
        X = feats[member.family]
        margins[:, c] = X @ member.model.weights + member.model.bias
    return margins


def _selection_for_member(cfg, c, z, labels, etas, scores):
    if cfg.mode is Mode.PLAIN:
        return np.flatnonzero(labels != 0)
    if cfg.mode in (Mode.ACET_MINUS, Mode.COTRACK):
        # committee truncation disabled: every eligible sample trains
        return np.flatnonzero((z[:, c] != 0) & (labels != 0))
    return ens.select_training_indices(z[:, c], labels, etas, scores, cfg.m)


def step(state: TrackerState, frame: Frame) -> TrackerOutput:
    """Advance the tracker by one frame (state is updated in place)."""
    cfg = state.cfg
    if frame.index != state.frame_index + 1:
        raise ValueError(
            f"expected frame {state.frame_index + 1}, got {frame.index}"
        )
    frame_w, frame_h = frame.width, frame.height
    transforms, boxes = draw_sample_arrays(
        state.box, frame_w, frame_h, cfg.sampler, state.rng
    )

    families = {m.family for m in state.members}
    feats = family_matrices(frame, _appearance_boxes(boxes), families)
    margins = _member_margins(state.members, feats, boxes.shape[0])
    alphas = state.alphas

    z, scores, labels, etas = ens.evaluate_candidates(margins, alphas, cfg)
    counts, fracs = ens.classifier_errors(margins, labels)
    new_alphas = ens.classifier_weight(counts, cfg.epsilon)
    occluded = ens.detect_occlusion(fracs, cfg.tau_occ)

    if not (cfg.freeze_on_occlusion and occluded):
        for c, member in enumerate(state.members):
            idx = _selection_for_member(cfg, c, z, labels, etas, scores)
            member.buffer.push(
                feats[member.family][idx], labels[idx], frame.index
            )
            if idx.size:
                update(member.model, member.buffer, cfg.epochs)

    if occluded:
        new_box = state.box
    else:
        try:
            new_box = clamp_to_frame(
                ens.estimate_from_arrays(boxes, scores, labels), frame_w, frame_h
            )
        except NoPositiveError:
            occluded = True
            new_box = state.box

    for c, member in enumerate(state.members):
        member.alpha = float(new_alphas[c])
        member.last_error = int(counts[c])
    state.box = new_box
    state.frame_index = frame.index

    return TrackerOutput(
        frame=frame.index,
        box=new_box,
        occluded=occluded,
        errors=fracs,
        weights=new_alphas,
        mean_error=float(np.mean(fracs)),
    )


def save_checkpoint(state: TrackerState, path) -> None:
    """Single-file versioned checkpoint: config, members, buffers, RNG."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": state.cfg.to_dict(),
        "frame_index": state.frame_index,
        "box": list(state.box.as_array()),
        "frame_size": list(state.frame_size),
        "rng_state": state.rng.bit_generator.state,
        "members": [m.to_snapshot() for m in state.members],
    }
    arrays = {}
    for i, m in enumerate(state.members):
        arrays[f"member{i}_weights"] = m.model.weights
        arrays[f"member{i}_X"] = m.buffer.X
        arrays[f"member{i}_y"] = m.buffer.labels
        arrays[f"member{i}_frames"] = m.buffer.frames
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def load_checkpoint(path) -> TrackerState:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise InitializationError(
                f"unsupported checkpoint version {meta.get('version')!r}"
            )
        cfg = EnsembleConfig.from_dict(meta["config"])
        members = []
        for i, snap in enumerate(meta["members"]):
            model = LinearModel.from_snapshot(snap["model"])
            model.weights = data[f"member{i}_weights"].copy()
            fam = Family(snap["family"])
            buf = TrainingBuffer(int(snap["span"]), model.dim)
            X = data[f"member{i}_X"]
            y = data[f"member{i}_y"]
            frames = data[f"member{i}_frames"]
            for f in np.unique(frames):
                sel = frames == f
                buf.push(X[sel], y[sel], int(f))
            member = MemberState(
                model=model,
                buffer=buf,
                family=fam,
                tau=float(snap["tau"]),
                alpha=float(snap["alpha"]),
                last_error=int(snap["last_error"]),
            )
            members.append(member)
        rng = np.random.default_rng()
        rng.bit_generator.state = meta["rng_state"]
        return TrackerState(
            cfg=cfg,
            members=members,
            box=BBox(*meta["box"]),
            frame_index=int(meta["frame_index"]),
            rng=rng,
            frame_size=tuple(meta["frame_size"]),
        )
