"""Pure-numpy kernels; the fallback backend and the semantic reference.

The compiled backend in ``_native.pyx`` mirrors these functions expression
for expression so both produce the same floating-point results up to
summation-order noise (~1e-15 relative). Anything that affects a discrete
decision (orientation binning, histogram bin choice, reflection indexing)
uses bit-identical arithmetic in both backends.
"""

from __future__ import annotations

import math

import numpy as np

PATCH = 32
N_BINS = 8
CELL = 8
GRID = PATCH // CELL  # 4x4 cell grid
GRAD_DIM = 512  # 16 cyclic 2x2-cell blocks x 4 cells x 8 bins
COLOR_BINS = 16
COLOR_DIM = 48
BLOCK_CLIP = 0.2
_NORM_EPS = 1e-12

# Orientation bin boundaries k*pi/8, k=1..7, as (cos, sin) direction vectors.
# After mapping the gradient into the upper half-plane, bin(g) counts the
# boundaries with cos_k*gy - sin_k*gx >= 0, i.e. angle(g) >= k*pi/8.
ORIENT_COS = tuple(math.cos(k * (math.pi / 8.0)) for k in range(1, N_BINS))
ORIENT_SIN = tuple(math.sin(k * (math.pi / 8.0)) for k in range(1, N_BINS))

# Patch-pixel center offsets in normalized box coordinates (exact doubles:
# (i + 0.5) / 32 is a power-of-two division).
_U = (np.arange(PATCH, dtype=np.float64) + 0.5) / PATCH

# Flattened cell index of every patch pixel, row-major.
_CELL_OF_PIXEL = (
    (np.arange(PATCH) // CELL)[:, None] * GRID + (np.arange(PATCH) // CELL)[None, :]
)


def _reflect(idx: np.ndarray, n: int) -> np.ndarray:
    """Mirror out-of-range indices back into [0, n): -1 -> 0, n -> n-1."""
    idx = np.mod(idx, 2 * n)
    return np.where(idx >= n, 2 * n - 1 - idx, idx)


def extract_patches(gray: np.ndarray, rgb: np.ndarray, boxes: np.ndarray):
    """Bilinearly resample each box region to 32x32 gray + 32x32x3 RGB.

    `gray` is (H, W) float64 in [0, 1], `rgb` (H, W, 3) float64, `boxes`
    (N, 4) center form. Out-of-frame reads mirror at the border.
    """
    gray = np.ascontiguousarray(gray, dtype=np.float64)
    rgb = np.ascontiguousarray(rgb, dtype=np.float64)
    boxes = np.ascontiguousarray(boxes, dtype=np.float64)
    h_img, w_img = gray.shape

    cx, cy, w, h = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    x1 = cx - 0.5 * w
    y1 = cy - 0.5 * h
    sx = x1[:, None] + _U[None, :] * w[:, None] - 0.5  # (N, 32)
    sy = y1[:, None] + _U[None, :] * h[:, None] - 0.5

    fx0 = np.floor(sx)
    fy0 = np.floor(sy)
    tx = sx - fx0
    ty = sy - fy0
    x0 = fx0.astype(np.int64)
    y0 = fy0.astype(np.int64)
    xa = _reflect(x0, w_img)
    xb = _reflect(x0 + 1, w_img)
    ya = _reflect(y0, h_img)
    yb = _reflect(y0 + 1, h_img)

    # Row gathers: index (n, i, j) -> pixel (y[n, i], x[n, j]).
    ya_ = ya[:, :, None]
    yb_ = yb[:, :, None]
    xa_ = xa[:, None, :]
    xb_ = xb[:, None, :]
    tx_ = tx[:, None, :]
    ty_ = ty[:, :, None]

    top = (1.0 - tx_) * gray[ya_, xa_] + tx_ * gray[ya_, xb_]
    bot = (1.0 - tx_) * gray[yb_, xa_] + tx_ * gray[yb_, xb_]
    gray_patches = (1.0 - ty_) * top + ty_ * bot

    txc = tx_[..., None]
    tyc = ty_[..., None]
    top = (1.0 - txc) * rgb[ya_, xa_] + txc * rgb[ya_, xb_]
    bot = (1.0 - txc) * rgb[yb_, xa_] + txc * rgb[yb_, xb_]
    rgb_patches = (1.0 - tyc) * top + tyc * bot

    return gray_patches, rgb_patches


def grad_descriptors(patches: np.ndarray) -> np.ndarray:
    """Gradient-orientation descriptor (512 values) per 32x32 gray patch.

    Central-difference gradients (borders reuse the edge pixel), 8 unsigned
    orientation bins, magnitude-weighted 8x8-pixel cell histograms, then the
    16 cyclic 2x2-cell blocks each L2-hys normalized (clip 0.2).
    """
    p = np.ascontiguousarray(patches, dtype=np.float64)
    n = p.shape[0]

    gx = np.empty_like(p)
    gx[:, :, 1:-1] = (p[:, :, 2:] - p[:, :, :-2]) * 0.5
    gx[:, :, 0] = (p[:, :, 1] - p[:, :, 0]) * 0.5
    gx[:, :, -1] = (p[:, :, -1] - p[:, :, -2]) * 0.5
    gy = np.empty_like(p)
    gy[:, 1:-1, :] = (p[:, 2:, :] - p[:, :-2, :]) * 0.5
    gy[:, 0, :] = (p[:, 1, :] - p[:, 0, :]) * 0.5
    gy[:, -1, :] = (p[:, -1, :] - p[:, -2, :]) * 0.5

    mag = np.sqrt(gx * gx + gy * gy)
    flip = (gy < 0.0) | ((gy == 0.0) & (gx < 0.0))
    gx = np.where(flip, -gx, gx)
    gy = np.where(flip, -gy, gy)

    bins = np.zeros(p.shape, dtype=np.int64)
    for c, s in zip(ORIENT_COS, ORIENT_SIN):
        bins += c * gy - s * gx >= 0.0

    flat = (
        np.arange(n, dtype=np.int64)[:, None, None] * (GRID * GRID * N_BINS)
        + _CELL_OF_PIXEL[None, :, :] * N_BINS
        + bins
    )
    hist = np.bincount(
        flat.ravel(), weights=mag.ravel(), minlength=n * GRID * GRID * N_BINS
    ).reshape(n, GRID, GRID, N_BINS)

    blocks = np.stack(
        [
            hist,
            np.roll(hist, -1, axis=2),
            np.roll(hist, -1, axis=1),
            np.roll(np.roll(hist, -1, axis=1), -1, axis=2),
        ],
        axis=3,
    ).reshape(n, GRID * GRID, 4 * N_BINS)

    norm = np.sqrt(np.sum(blocks * blocks, axis=-1, keepdims=True))
    v = blocks / np.maximum(norm, _NORM_EPS)
    v = np.minimum(v, BLOCK_CLIP)
    norm = np.sqrt(np.sum(v * v, axis=-1, keepdims=True))
    v = v / np.maximum(norm, _NORM_EPS)
    return v.reshape(n, GRAD_DIM)


def color_descriptors(patches: np.ndarray) -> np.ndarray:
    """Per-channel 16-bin histograms (L1-normalized) per 32x32x3 patch."""
    p = np.ascontiguousarray(patches, dtype=np.float64)
    n = p.shape[0]
    bins = np.minimum((p * float(COLOR_BINS)).astype(np.int64), COLOR_BINS - 1)
    chan = np.arange(3, dtype=np.int64)[None, None, None, :]
    flat = (
        np.arange(n, dtype=np.int64)[:, None, None, None] * COLOR_DIM
        + chan * COLOR_BINS
        + bins
    )
    counts = np.bincount(flat.ravel(), minlength=n * COLOR_DIM).reshape(n, COLOR_DIM)
    return counts / float(PATCH * PATCH)


def hinge_sgd(
    w: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    epochs: int,
    lr: float,
    reg: float,
) -> float:
    """In-place SGD on L2-regularized hinge loss; returns the new bias.

    Entries are visited in buffer order, `epochs` full passes, with step
    size eta_k = lr / (1 + reg*lr*k) for global step k within this call.
    The bias is not regularized.
    """
    n = X.shape[0]
    k = 0
    for _ in range(epochs):
        for i in range(n):
            eta = lr / (1.0 + reg * lr * k)
            yi = y[i]
            margin = yi * (float(X[i] @ w) + bias)
            w *= 1.0 - eta * reg
            if margin < 1.0:
                w += (eta * yi) * X[i]
                bias += eta * yi
            k += 1
    return bias
