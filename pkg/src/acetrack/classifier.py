"""One ensemble member: online linear scorer + memory-bounded training buffer.

The base learner is an L2-regularized linear hinge classifier trained by
SGD. Its signed margin feeds the uncertainty-band labeling rule, and its
training data lives in a buffer that forgets everything older than the
member's memory span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DataError
from .features import Family

SNAPSHOT_VERSION = 1


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float = 0.0
    learn_rate: float = 0.02
    reg: float = 1e-3

    @classmethod
    def zeros(cls, dim: int, learn_rate: float = 0.02, reg: float = 1e-3) -> "LinearModel":
        return cls(np.zeros(dim, dtype=np.float64), 0.0, learn_rate, reg)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def to_snapshot(self) -> dict:
        """Flat, versioned record for checkpointing."""
        return {
            "version": SNAPSHOT_VERSION,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "learn_rate": self.learn_rate,
            "reg": self.reg,
        }

    @classmethod
    def from_snapshot(cls, rec: dict) -> "LinearModel":
        if rec.get("version") != SNAPSHOT_VERSION:
            raise ConfigError(f"unsupported model snapshot version {rec.get('version')!r}")
        return cls(
            np.asarray(rec["weights"], dtype=np.float64),
            float(rec["bias"]),
            float(rec["learn_rate"]),
            float(rec["reg"]),
        )


def score(model: LinearModel, x: np.ndarray) -> float:
    """Signed margin h(x) = <w, x> + b."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ConfigError(
            f"feature dim {x.shape} does not match model dim {model.weights.shape}"
        )
    return float(x @ model.weights + model.bias)


def label_single(margin: float, tau_l: float, tau_u: float) -> int:
    """Thresholded label: +1 above tau_u, -1 below tau_l, else 0.

    The uncertain band is closed: margins exactly at a threshold stay 0.
    """
    if not tau_l < tau_u:
        raise ConfigError("tau_l must be < tau_u")
    if margin > tau_u:
        return 1
    if margin < tau_l:
        return -1
    return 0


class TrainingBuffer:
    """Labeled samples from the last `span` frames, in arrival order.

    Entries older than (latest frame - span) are evicted on every push.
    Storage is one contiguous matrix so the SGD kernel trains on a view.
    """

    def __init__(self, span: int, dim: int, capacity: int = 256):
        if span < 0:
            raise ConfigError("span must be >= 0")
        self.span = int(span)
        self.dim = int(dim)
        self._X = np.empty((capacity, dim), dtype=np.float64)
        self._y = np.empty(capacity, dtype=np.float64)
        self._frames = np.empty(capacity, dtype=np.int64)
        self._start = 0
        self._end = 0
        self.latest_frame = 0

    def __len__(self) -> int:
        return self._end - self._start

    @property
    def X(self) -> np.ndarray:
        return self._X[self._start : self._end]

    @property
    def labels(self) -> np.ndarray:
        return self._y[self._start : self._end]

    @property
    def frames(self) -> np.ndarray:
        return self._frames[self._start : self._end]

    def _ensure_room(self, extra: int) -> None:
        if self._end + extra <= self._X.shape[0]:
            return
        size = len(self)
        cap = max(self._X.shape[0], 64)
        while cap < 2 * (size + extra):
            cap *= 2
        new_X = np.empty((cap, self.dim), dtype=np.float64)
        new_y = np.empty(cap, dtype=np.float64)
        new_f = np.empty(cap, dtype=np.int64)
        new_X[:size] = self.X
        new_y[:size] = self.labels
        new_f[:size] = self.frames
        self._X, self._y, self._frames = new_X, new_y, new_f
        self._start, self._end = 0, size

    def push(self, X: np.ndarray, labels: np.ndarray, frame_idx: int) -> None:
        """Append a batch of labeled vectors for one frame, then evict."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.float64)
        if frame_idx < self.latest_frame:
            raise ValueError("frame indices must be non-decreasing across pushes")
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ConfigError(f"expected (*, {self.dim}) features, got {X.shape}")
        if X.shape[0] != labels.shape[0]:
            raise ConfigError("feature/label count mismatch")
        if labels.size and not np.all(np.abs(labels) == 1.0):
            raise ValueError("buffer labels must be +1 or -1")
        if X.size and not np.all(np.isfinite(X)):
            raise DataError("non-finite feature values pushed to buffer")
        n = X.shape[0]
        if n:
            self._ensure_room(n)
            self._X[self._end : self._end + n] = X
            self._y[self._end : self._end + n] = labels
            self._frames[self._end : self._end + n] = frame_idx
            self._end += n
        self.latest_frame = max(self.latest_frame, int(frame_idx))
        cutoff = self.latest_frame - self.span
        while self._start < self._end and self._frames[self._start] < cutoff:
            self._start += 1


def push_samples(buffer: TrainingBuffer, items: list) -> TrainingBuffer:
    """Push (x, label, frame_idx) tuples one frame group at a time."""
    i = 0
    while i < len(items):
        j = i
        frame = items[i][2]
        while j < len(items) and items[j][2] == frame:
            j += 1
        X = np.stack([np.asarray(it[0], dtype=np.float64) for it in items[i:j]])
        labels = np.array([it[1] for it in items[i:j]], dtype=np.float64)
        buffer.push(X, labels, frame)
        i = j
    if not items:
        # still apply the eviction contract
        buffer.push(np.empty((0, buffer.dim)), np.empty(0), buffer.latest_frame)
    return buffer


def update(model: LinearModel, buffer: TrainingBuffer, epochs: int) -> LinearModel:
    """Hinge-loss SGD over the whole buffer, `epochs` passes, in place.

    Pass order is buffer order (frame index, then insertion order), so the
    result is reproducible bit for bit. No-op on an empty buffer.
    """
    if len(buffer) == 0:
        return model
    if buffer.dim != model.dim:
        raise ConfigError("buffer/model dimension mismatch")
    model.bias = kernels.hinge_sgd(
        model.weights,
        model.bias,
        buffer.X,
        buffer.labels,
        int(epochs),
        model.learn_rate,
        model.reg,
    )
    if not np.all(np.isfinite(model.weights)) or not np.isfinite(model.bias):
        raise DataError("model diverged to non-finite weights")
    return model


@dataclass
class MemberState:
    """One ensemble member: model, memory buffer, vote weight, bookkeeping."""

    model: LinearModel
    buffer: TrainingBuffer
    family: Family
    tau: float = 0.4  # tau_u; tau_l is -tau (symmetric band)
    alpha: float = 1.0
    last_error: int = 0

    @property
    def span(self) -> int:
        return self.buffer.span

    def to_snapshot(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "model": self.model.to_snapshot(),
            "span": self.buffer.span,
            "family": self.family.value,
            "tau": self.tau,
            "alpha": self.alpha,
            "last_error": self.last_error,
        }
