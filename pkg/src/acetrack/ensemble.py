"""Ensemble decision rules: flags, masked voting, labels, committee selection.

All operations accept either one sample (margins shape (n,)) or a batch
(margins shape (N, n)) and work on the trailing axis. The tracker loop in
``tracker.py`` drives the batch forms; the scalar forms match the
per-sample definitions one to one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NoPositiveError
from .features import Family, FeatureVector
from .geometry import BBox, Transform
from .sampling import SamplerConfig


class Mode(enum.Enum):
    ACET = "acet"
    ACET_MINUS = "acet-minus"
    PLAIN = "plain"
    COTRACK = "cotrack"


@dataclass
class EnsembleConfig:
    """All tracker hyperparameters.

    spans are the per-member memory horizons in frames (strictly
    increasing); tau_member is the symmetric member uncertainty threshold;
    kappa_ens expresses the ensemble label threshold as a fraction of the
    active vote weight; m is the committee retraining subset size.
    """

    n: int = 4
    spans: tuple = (2, 8, 30, 120)
    mode: Mode = Mode.ACET
    tau_member: float = 0.4
    kappa_ens: float = 0.25
    tau_occ: float = 0.5
    m: int = 16
    epsilon: float = 1e-6
    learn_rate: float = 0.02
    reg: float = 1e-3
    epochs: int = 10
    freeze_on_occlusion: bool = False
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    @classmethod
    def for_mode(cls, mode: Mode, **overrides) -> "EnsembleConfig":
        """Config with mode-appropriate defaults (cotrack is a 2-member setup)."""
        if mode is Mode.COTRACK:
            overrides.setdefault("n", 2)
            overrides.setdefault("spans", (8, 120))
        cfg = cls(mode=mode, **overrides)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.n < 2:
            raise ConfigError("ensemble needs at least 2 members")
        if self.mode is Mode.COTRACK and self.n != 2:
            raise ConfigError("cotrack mode requires exactly 2 members")
        if len(self.spans) != self.n:
            raise ConfigError(f"expected {self.n} spans, got {len(self.spans)}")
        if any(b <= a for a, b in zip(self.spans, self.spans[1:])):
            raise ConfigError("spans must be strictly increasing")
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if not 0 < self.kappa_ens < 1:
            raise ConfigError("kappa_ens must be in (0, 1)")
        if not 0 < self.tau_occ < 1:
            raise ConfigError("tau_occ must be in (0, 1)")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.tau_member > 0:
            raise ConfigError("tau_member must be positive")
        self.sampler.validate()

    def member_spans(self) -> tuple:
        """Effective spans; the ablation mode levels them to the longest."""
        if self.mode is Mode.ACET_MINUS:
            return (max(self.spans),) * self.n
        return tuple(self.spans)

    def member_families(self) -> tuple:
        """Feature family per member; the ablation mode alternates GRAD/COLOR."""
        if self.mode is Mode.ACET_MINUS:
            return tuple(
                Family.GRAD if i % 2 == 0 else Family.COLOR for i in range(self.n)
            )
        return (Family.CONCAT,) * self.n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "spans": list(self.spans),
            "mode": self.mode.value,
            "tau_member": self.tau_member,
            "kappa_ens": self.kappa_ens,
            "tau_occ": self.tau_occ,
            "m": self.m,
            "epsilon": self.epsilon,
            "learn_rate": self.learn_rate,
            "reg": self.reg,
            "epochs": self.epochs,
            "freeze_on_occlusion": self.freeze_on_occlusion,
            "n_samples": self.sampler.n_samples,
            "sigma_xy_rel": self.sampler.sigma_xy_rel,
            "sigma_scale": self.sampler.sigma_scale,
            "seed": self.sampler.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleConfig":
        d = dict(d)
        sampler = SamplerConfig(
            n_samples=int(d.pop("n_samples", 400)),
            sigma_xy_rel=float(d.pop("sigma_xy_rel", 0.3)),
            sigma_scale=float(d.pop("sigma_scale", 0.05)),
            seed=int(d.pop("seed", 0)),
        )
        mode = d.pop("mode", Mode.ACET)
        if isinstance(mode, str):
            mode = Mode(mode)
        spans = tuple(d.pop("spans", (2, 8, 30, 120)))
        known = {
            "n", "tau_member", "kappa_ens", "tau_occ", "m", "epsilon",
            "learn_rate", "reg", "epochs", "freeze_on_occlusion",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key: {sorted(unknown)[0]}")
        cfg = cls(mode=mode, spans=spans, sampler=sampler, **d)
        cfg.validate()
        return cfg


@dataclass
class Sample:
    """One scored candidate."""

    transform: Transform
    box: BBox
    margins: np.ndarray  # per-member signed margins, shape (n,)
    flags: np.ndarray  # confidence flags z, shape (n,), uint8
    score: float  # masked weighted vote s
    label: int  # -1 / 0 / +1
    informativeness: int  # eta = popcount(z)
    x: FeatureVector | None = None

    def validate(self) -> None:
        assert self.informativeness == int(np.sum(self.flags != 0))
        assert self.label in (-1, 0, 1)


@dataclass
class TrackerOutput:
    """Per-frame result record."""

    frame: int
    box: BBox
    occluded: bool
    errors: np.ndarray  # normalized per-member error fractions
    weights: np.ndarray  # per-member vote weights alpha
    mean_error: float


def uncertainty_flags(margins: np.ndarray, tau_member: float) -> np.ndarray:
    """z = 0 strictly inside the (-tau, tau) band, 1 otherwise (uint8)."""
    m = np.asarray(margins, dtype=np.float64)
    inside = (-tau_member < m) & (m < tau_member)
    return (~inside).astype(np.uint8)


def informativeness(z: np.ndarray):
    """Number of confident members, eta = sum(z)."""
    z = np.asarray(z)
    total = (z != 0).sum(axis=-1)
    return int(total) if np.isscalar(total) or total.ndim == 0 else total


def ensemble_score(margins: np.ndarray, z: np.ndarray, alphas: np.ndarray):
    """Masked weighted vote: sum_c alpha_c * z_c * sign(margin_c)."""
    m = np.asarray(margins, dtype=np.float64)
    out = np.sum(np.sign(m) * np.asarray(z) * np.asarray(alphas), axis=-1)
    return float(out) if out.ndim == 0 else out


def plain_ensemble_score(margins: np.ndarray, alphas: np.ndarray):
    """Unmasked weighted vote: sum_c alpha_c * sign(margin_c)."""
    m = np.asarray(margins, dtype=np.float64)
    out = np.sum(np.sign(m) * np.asarray(alphas), axis=-1)
    return float(out) if out.ndim == 0 else out


def cotrack_score(margins: np.ndarray, alphas: np.ndarray, tau_member: float):
    """Two-member collaborative score.

    If member 1 is uncertain, member 2 answers alone (and vice versa,
    first case taking precedence when both are uncertain); otherwise the
    weighted raw margins add.
    """
    m = np.asarray(margins, dtype=np.float64)
    if m.shape[-1] != 2:
        raise ConfigError("cotrack_score requires exactly 2 members")
    a = np.asarray(alphas, dtype=np.float64)
    h1, h2 = m[..., 0], m[..., 1]
    unc1 = (-tau_member < h1) & (h1 < tau_member)
    unc2 = (-tau_member < h2) & (h2 < tau_member)
    out = np.where(unc1, a[1] * h2, np.where(unc2, a[0] * h1, a[0] * h1 + a[1] * h2))
    return float(out) if out.ndim == 0 else out


def ensemble_label(s, z: np.ndarray, alphas: np.ndarray, kappa_ens: float):
    """Label from the masked vote, thresholded at +/- kappa * active weight.

    The active weight W = sum_c alpha_c z_c rescales the threshold per
    sample; with no active voters (W == 0) the label is 0.
    """
    s = np.asarray(s, dtype=np.float64)
    w = np.sum(np.asarray(z) * np.asarray(alphas), axis=-1)
    thr = kappa_ens * w
    out = np.where(w == 0, 0, np.where(s > thr, 1, np.where(s < -thr, -1, 0)))
    return int(out) if out.ndim == 0 else out.astype(np.int64)


def label_scores(s, tau: float):
    """Vectorized thresholded labeling for raw (cotrack) scores."""
    s = np.asarray(s, dtype=np.float64)
    out = np.where(s > tau, 1, np.where(s < -tau, -1, 0))
    return int(out) if out.ndim == 0 else out.astype(np.int64)


def select_training_indices(
    z_c: np.ndarray,
    labels: np.ndarray,
    etas: np.ndarray,
    scores: np.ndarray,
    m: int,
) -> np.ndarray:
    """Committee pick for one member: flagged, labeled, most informative first.

    Eligible samples (z_c == 1 and label != 0) are sorted by ascending eta
    (fewest confident members = most informative), ties by |score| then by
    sample index, and truncated to m.
    """
    eligible = np.flatnonzero((np.asarray(z_c) != 0) & (np.asarray(labels) != 0))
    if eligible.size == 0:
        return eligible
    keys = (
        eligible,
        np.abs(np.asarray(scores, dtype=np.float64)[eligible]),
        np.asarray(etas)[eligible],
    )
    order = np.lexsort(keys)
    return eligible[order][:m]


def select_training_set(member_idx: int, samples: list, m: int) -> list:
    """Sample-object wrapper over :func:`select_training_indices`."""
    if not samples:
        return []
    z_c = np.array([s.flags[member_idx] for s in samples])
    labels = np.array([s.label for s in samples])
    etas = np.array([s.informativeness for s in samples])
    scores = np.array([s.score for s in samples])
    idx = select_training_indices(z_c, labels, etas, scores, m)
    return [samples[i] for i in idx]


def classifier_errors(margins: np.ndarray, labels: np.ndarray):
    """Per-member disagreement with the ensemble labels.

    Counts sign(margin_c) != label over labeled samples only (label 0
    carries no supervision), plus the fraction over the labeled count.
    Returns (counts (n,), fractions (n,)).
    """
    m = np.atleast_2d(np.asarray(margins, dtype=np.float64))
    labels = np.asarray(labels)
    labeled = labels != 0
    n_labeled = int(labeled.sum())
    if n_labeled == 0:
        counts = np.zeros(m.shape[1], dtype=np.int64)
        return counts, counts.astype(np.float64)
    disagree = np.sign(m[labeled]) != labels[labeled, None]
    counts = disagree.sum(axis=0).astype(np.int64)
    return counts, counts / float(max(1, n_labeled))


def classifier_error(member_idx: int, samples: list) -> tuple[int, float]:
    """Sample-object wrapper; returns (count, normalized fraction)."""
    if not samples:
        return 0, 0.0
    margins = np.stack([s.margins for s in samples])
    labels = np.array([s.label for s in samples])
    counts, fracs = classifier_errors(margins, labels)
    return int(counts[member_idx]), float(fracs[member_idx])


def classifier_weight(errors: np.ndarray, epsilon: float) -> np.ndarray:
    """Vote weights alpha_c = 1 - (e_c + eps) / (sum e + eps).

    With zero total error the formula degenerates to 0 for everyone, so
    that case maps to all-ones instead (full agreement = full confidence).
    """
    e = np.asarray(errors, dtype=np.float64)
    total = e.sum()
    if total == 0:
        return np.ones_like(e)
    return 1.0 - (e + epsilon) / (total + epsilon)


def detect_occlusion(errors_normalized: np.ndarray, tau_occ: float) -> bool:
    """Occluded when the mean normalized member error strictly exceeds tau."""
    return bool(np.mean(np.asarray(errors_normalized, dtype=np.float64)) > tau_occ)


def estimate_from_arrays(
    boxes: np.ndarray, scores: np.ndarray, labels: np.ndarray
) -> BBox:
    """Score-weighted mean of the positively labeled candidate boxes.

    Weights are normalized to sum to 1 so the estimate is a convex
    combination of candidate boxes (invariant to uniform score scaling).
    """
    labels = np.asarray(labels)
    pos = labels > 0
    if not np.any(pos):
        raise NoPositiveError("no positively labeled candidate")
    s = np.asarray(scores, dtype=np.float64)[pos]
    total = s.sum()
    if total <= 0:
        raise NoPositiveError("positive candidates carry no positive score")
    weights = s / total
    cx, cy, w, h = weights @ np.asarray(boxes, dtype=np.float64)[pos]
    return BBox(cx, cy, w, h)


def estimate_state(samples: list) -> BBox:
    """Sample-object wrapper over :func:`estimate_from_arrays`."""
    if not samples:
        raise NoPositiveError("no samples")
    boxes = np.array([s.box.as_array() for s in samples])
    scores = np.array([s.score for s in samples])
    labels = np.array([s.label for s in samples])
    return estimate_from_arrays(boxes, scores, labels)


def evaluate_candidates(
    margins: np.ndarray, alphas: np.ndarray, cfg: EnsembleConfig
):
    """Mode-dependent scoring pipeline for a margin batch.

    Returns (flags (N, n), scores (N,), labels (N,), etas (N,)). Flags are
    always the uncertainty flags; the score/label rule switches with the
    mode (masked vote, unmasked vote, or two-member collaboration).
    """
    margins = np.asarray(margins, dtype=np.float64)
    z = uncertainty_flags(margins, cfg.tau_member)
    if cfg.mode is Mode.PLAIN:
        s = plain_ensemble_score(margins, alphas)
        labels = ensemble_label(s, np.ones_like(z), alphas, cfg.kappa_ens)
    elif cfg.mode is Mode.COTRACK:
        s = cotrack_score(margins, alphas, cfg.tau_member)
        labels = label_scores(s, cfg.tau_member)
    else:
        s = ensemble_score(margins, z, alphas)
        labels = ensemble_label(s, z, alphas, cfg.kappa_ens)
    etas = informativeness(z)
    return z, s, labels, etas
