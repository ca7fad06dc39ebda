"""Candidate-state proposal: a Gaussian field around the previous target box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateStateError
from .geometry import LOG_SCALE_LIMIT, MIN_SIDE, BBox, Transform, clamp_boxes


@dataclass
class SamplerConfig:
    """Search-field parameters.

    sigma_xy_rel scales the translation sigma by the target size, so the
    search radius follows the target; sigma_scale is the sigma of the
    log-scale component, truncated at |ds| <= ln 2.
    """

    n_samples: int = 400
    sigma_xy_rel: float = 0.3
    sigma_scale: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if self.n_samples < 16:
            raise ConfigError(f"n_samples must be >= 16, got {self.n_samples}")
        if not self.sigma_xy_rel > 0:
            raise ConfigError("sigma_xy_rel must be positive")
        if self.sigma_scale < 0:
            raise ConfigError("sigma_scale must be >= 0")


def draw_sample_arrays(
    prev: BBox,
    frame_w: float,
    frame_h: float,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n_samples candidate transforms and their clamped boxes.

    Returns (transforms (N, 3) as [dx, dy, ds], boxes (N, 4) center form).
    Row 0 is always the identity transform so the previous location is
    evaluated every frame.
    """
    cfg.validate()
    if prev.w < MIN_SIDE or prev.h < MIN_SIDE:
        raise DegenerateStateError(
            f"previous box too small to sample around ({prev.w}x{prev.h})"
        )
    n = cfg.n_samples
    dx = rng.normal(0.0, cfg.sigma_xy_rel * prev.w, n)
    dy = rng.normal(0.0, cfg.sigma_xy_rel * prev.h, n)
    ds = rng.normal(0.0, cfg.sigma_scale, n) if cfg.sigma_scale > 0 else np.zeros(n)
    ds = np.clip(ds, -LOG_SCALE_LIMIT, LOG_SCALE_LIMIT)
    dx[0] = dy[0] = ds[0] = 0.0

    transforms = np.column_stack([dx, dy, ds])
    scale = np.exp(ds)
    raw = np.column_stack([prev.cx + dx, prev.cy + dy, prev.w * scale, prev.h * scale])
    boxes = clamp_boxes(raw, frame_w, frame_h)
    return transforms, boxes


def draw_samples(
    prev: BBox,
    frame_w: float,
    frame_h: float,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> list[tuple[Transform, BBox]]:
    """List-of-pairs convenience wrapper over :func:`draw_sample_arrays`."""
    transforms, boxes = draw_sample_arrays(prev, frame_w, frame_h, cfg, rng)
    return [
        (Transform(*t), BBox(*b))
        for t, b in zip(transforms.tolist(), boxes.tolist())
    ]
