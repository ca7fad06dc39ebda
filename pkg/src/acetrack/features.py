"""Fixed-length appearance descriptors for candidate boxes.

Two families are provided so ensemble members can be built on different
cues: a gradient-orientation descriptor (GRAD, 512 values) and per-channel
color histograms (COLOR, 48 values). CONCAT appends GRAD then COLOR. Every
box is resampled to a canonical 32x32 patch first, so vector length is
independent of box scale.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateStateError
from .geometry import BBox

PATCH = kernels.PATCH


class Family(enum.Enum):
    GRAD = "grad"
    COLOR = "color"
    CONCAT = "concat"


FAMILY_DIM = {
    Family.GRAD: kernels.GRAD_DIM,
    Family.COLOR: kernels.COLOR_DIM,
    Family.CONCAT: kernels.GRAD_DIM + kernels.COLOR_DIM,
}

_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class Frame:
    """One RGB image plus its 1-based frame number.

    Wraps an (H, W, 3) uint8 array; float grayscale/RGB planes in [0, 1]
    are derived lazily and cached since every candidate box shares them.
    """

    __slots__ = ("rgb", "index", "_gray", "_rgbf")

    def __init__(self, rgb: np.ndarray, index: int):
        rgb = np.ascontiguousarray(rgb)
        if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError("frame data must be (H, W, 3) uint8")
        if index < 1:
            raise ValueError("frame index must be >= 1")
        self.rgb = rgb
        self.index = int(index)
        self._gray = None
        self._rgbf = None

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def data(self) -> bytes:
        """Row-major byte buffer, length width*height*3."""
        return self.rgb.tobytes()

    @property
    def rgbf(self) -> np.ndarray:
        if self._rgbf is None:
            self._rgbf = self.rgb.astype(np.float64) / 255.0
        return self._rgbf

    @property
    def gray(self) -> np.ndarray:
        if self._gray is None:
            self._gray = np.ascontiguousarray(self.rgbf @ _LUMA)
        return self._gray


@dataclass
class FeatureVector:
    values: np.ndarray
    family: Family

    def __len__(self) -> int:
        return self.values.shape[0]


def _check_boxes(boxes: np.ndarray, frame: Frame) -> None:
    if boxes.shape[0] == 0:
        return
    if np.any(boxes[:, 2] <= 0) or np.any(boxes[:, 3] <= 0):
        raise DegenerateStateError("box with non-positive area")


def extract_patch(frame: Frame, box: BBox) -> tuple[np.ndarray, np.ndarray]:
    """Resample a box region to a (32, 32) gray and (32, 32, 3) RGB patch."""
    boxes = box.as_array()[None, :]
    _check_boxes(boxes, frame)
    gray_p, rgb_p = kernels.extract_patches(frame.gray, frame.rgbf, boxes)
    return gray_p[0], rgb_p[0]


def grad_features(patch_gray: np.ndarray) -> FeatureVector:
    values = kernels.grad_descriptors(np.ascontiguousarray(patch_gray, dtype=np.float64)[None])
    return FeatureVector(values[0], Family.GRAD)


def color_features(patch_rgb: np.ndarray) -> FeatureVector:
    values = kernels.color_descriptors(np.ascontiguousarray(patch_rgb, dtype=np.float64)[None])
    return FeatureVector(values[0], Family.COLOR)


def feature_matrix(frame: Frame, boxes: np.ndarray, family: Family) -> np.ndarray:
    """(N, dim) descriptor matrix for an (N, 4) center-form box array."""
    return family_matrices(frame, boxes, (family,))[family]


def family_matrices(
    frame: Frame, boxes: np.ndarray, families
) -> dict[Family, np.ndarray]:
    """Descriptors for several families at once, sharing the patch pass."""
    boxes = np.ascontiguousarray(boxes, dtype=np.float64)
    _check_boxes(boxes, frame)
    wanted = set(families)
    gray_p, rgb_p = kernels.extract_patches(frame.gray, frame.rgbf, boxes)
    out: dict[Family, np.ndarray] = {}
    need_grad = wanted & {Family.GRAD, Family.CONCAT}
    need_color = wanted & {Family.COLOR, Family.CONCAT}
    g = kernels.grad_descriptors(gray_p) if need_grad else None
    c = kernels.color_descriptors(rgb_p) if need_color else None
    if Family.GRAD in wanted:
        out[Family.GRAD] = g
    if Family.COLOR in wanted:
        out[Family.COLOR] = c
    if Family.CONCAT in wanted:
        out[Family.CONCAT] = np.hstack([g, c])
    return out


def feature_vector(frame: Frame, box: BBox, family: Family) -> FeatureVector:
    mat = feature_matrix(frame, box.as_array()[None, :], family)
    return FeatureVector(mat[0], family)
