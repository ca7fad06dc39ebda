"""Sequence IO: OTB-layout directories and synthetic ground-truthed scenes.

An OTB-layout directory holds `img/0001.jpg` (or .png) style frames plus
`groundtruth_rect.txt` with one "x,y,w,h" line per frame (1-based integer
top-left corner) and an optional `attrs.txt` tag list. Synthetic sequences
are generated in memory and can be written back to the same layout.
"""

from __future__ import annotations

import re
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .configfile import load_kv_file
from .errors import FormatError
from .features import Frame
from .geometry import BBox, bbox_from_xywh, bbox_to_xywh

ATTRIBUTES = ("IV", "SV", "IPR", "OPR", "FM", "MB", "DEF", "LR", "OCC", "OV", "BC")

_GT_SPLIT = re.compile(r"[,\t\s]+")
_IMG_EXTS = (".jpg", ".jpeg", ".png")


class _LruFrames:
    """Decode-on-demand frame store with a small LRU window."""

    def __init__(self, paths: list, window: int = 8):
        self._paths = paths
        self._window = window
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()

    def __len__(self) -> int:
        return len(self._paths)

    def get(self, i: int) -> np.ndarray:
        if i in self._cache:
            self._cache.move_to_end(i)
            return self._cache[i]
        with Image.open(self._paths[i]) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
        self._cache[i] = arr
        if len(self._cache) > self._window:
            self._cache.popitem(last=False)
        return arr


class _ArrayFrames:
    def __init__(self, arrays: list):
        self._arrays = arrays

    def __len__(self) -> int:
        return len(self._arrays)

    def get(self, i: int) -> np.ndarray:
        return self._arrays[i]


@dataclass
class Sequence:
    """Ordered frames with per-frame ground truth and attribute tags."""

    name: str
    gt: list
    attributes: frozenset
    _frames: object = field(repr=False)

    def __post_init__(self):
        if len(self.gt) != len(self._frames) or len(self.gt) < 2:
            raise FormatError(
                f"sequence {self.name!r}: {len(self._frames)} frames vs "
                f"{len(self.gt)} ground-truth boxes (need equal counts >= 2)"
            )

    def __len__(self) -> int:
        return len(self.gt)

    def frame(self, i: int) -> Frame:
        """Frame at 0-based position i; Frame.index is the 1-based number."""
        return Frame(self._frames.get(i), i + 1)


def load_otb_sequence(path) -> Sequence:
    path = Path(path)
    gt_file = path / "groundtruth_rect.txt"
    if not gt_file.is_file():
        raise FormatError(f"missing ground-truth file: {gt_file}")
    img_dir = path / "img"
    if not img_dir.is_dir():
        raise FormatError(f"missing image directory: {img_dir}")
    paths = sorted(
        p for p in img_dir.iterdir() if p.suffix.lower() in _IMG_EXTS
    )
    if not paths:
        raise FormatError(f"no frames found under {img_dir}")

    gt = []
    for lineno, line in enumerate(gt_file.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = _GT_SPLIT.split(line)
        if len(parts) != 4:
            raise FormatError(f"{gt_file}:{lineno}: expected 4 fields, got {line!r}")
        try:
            x, y, w, h = (float(p) for p in parts)
            gt.append(bbox_from_xywh(x, y, w, h))
        except ValueError as exc:
            raise FormatError(f"{gt_file}:{lineno}: {exc}") from exc
    if len(gt) != len(paths):
        raise FormatError(
            f"{path}: {len(paths)} images but {len(gt)} ground-truth lines"
        )

    attributes = frozenset()
    attrs_file = path / "attrs.txt"
    if attrs_file.is_file():
        tags = [t for t in _GT_SPLIT.split(attrs_file.read_text().strip()) if t]
        unknown = [t for t in tags if t not in ATTRIBUTES]
        if unknown:
            raise FormatError(f"{attrs_file}: unknown attribute tag {unknown[0]!r}")
        attributes = frozenset(tags)

    return Sequence(path.name, gt, attributes, _LruFrames(paths))


def save_otb_sequence(seq: Sequence, path) -> None:
    path = Path(path)
    img_dir = path / "img"
    img_dir.mkdir(parents=True, exist_ok=True)
    for i in range(len(seq)):
        Image.fromarray(seq.frame(i).rgb).save(img_dir / f"{i + 1:04d}.png")
    lines = []
    for box in seq.gt:
        x, y, w, h = bbox_to_xywh(box)
        lines.append(f"{x},{y},{w},{h}")
    (path / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n")
    if seq.attributes:
        (path / "attrs.txt").write_text(" ".join(sorted(seq.attributes)) + "\n")


@dataclass
class SynthConfig:
    """Declarative synthetic-scene spec.

    The target is a textured rectangle following `path` waypoints at
    constant `speed`; `drift` control points (frame, factor) interpolate
    the appearance from the primary color/texture to the alternate one;
    `occlusions` are (start_frame, end_frame, x, y, w, h) covers drawn on
    top; everything derives deterministically from `seed`.
    """

    name: str = "synthetic"
    frame_w: int = 320
    frame_h: int = 240
    n_frames: int = 120
    target_w: int = 40
    target_h: int = 40
    color: tuple = (210, 50, 40)
    color2: tuple = (40, 180, 70)
    texture_amp: float = 40.0
    path: tuple = ((60, 120), (260, 120))
    speed: float = 2.0
    drift: tuple = ()
    occlusions: tuple = ()
    noise_sigma: float = 4.0
    clutter_amp: float = 60.0
    clutter_chroma: float = 0.25
    seed: int = 0
    attributes: tuple = ()

    def validate(self) -> None:
        if self.n_frames < 2:
            raise FormatError("n_frames must be >= 2")
        if min(self.target_w, self.target_h) < 8:
            raise FormatError("target must be at least 8x8")
        if not self.path:
            raise FormatError("path needs at least one waypoint")
        for start, end, *_ in self.occlusions:
            if not (1 <= start <= end <= self.n_frames):
                raise FormatError(f"occlusion interval [{start}, {end}] out of range")
        for f, factor in self.drift:
            if not 0.0 <= factor <= 1.0:
                raise FormatError(f"drift factor {factor} outside [0, 1]")
        for tag in self.attributes:
            if tag not in ATTRIBUTES:
                raise FormatError(f"unknown attribute tag {tag!r}")

    @classmethod
    def from_dict(cls, d: dict, source: str = "<synth>") -> "SynthConfig":
        d = dict(d)
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(d) - known
        if unknown:
            raise FormatError(f"{source}: unknown config key: {sorted(unknown)[0]}")
        for key in ("color", "color2", "attributes"):
            if key in d:
                d[key] = tuple(d[key])
        for key in ("path", "drift", "occlusions"):
            if key in d:
                d[key] = tuple(tuple(item) for item in d[key])
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "SynthConfig":
        return cls.from_dict(load_kv_file(path), source=str(path))


def _value_noise(rng: np.random.Generator, h: int, w: int, cell: int = 24) -> np.ndarray:
    """Smooth [0, 1] noise: a coarse random grid bilinearly upsampled."""
    gh = h // cell + 2
    gw = w // cell + 2
    grid = rng.random((gh, gw))
    ys = np.arange(h) / cell
    xs = np.arange(w) / cell
    y0 = ys.astype(np.int64)
    x0 = xs.astype(np.int64)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = (1 - fx) * grid[y0][:, x0] + fx * grid[y0][:, x0 + 1]
    bot = (1 - fx) * grid[y0 + 1][:, x0] + fx * grid[y0 + 1][:, x0 + 1]
    return (1 - fy) * top + fy * bot


def _path_positions(cfg: SynthConfig) -> np.ndarray:
    """Constant-speed centers along the waypoint polyline, one per frame."""
    pts = np.asarray(cfg.path, dtype=np.float64)
    if len(pts) == 1:
        return np.repeat(pts, cfg.n_frames, axis=0)
    seg = np.diff(pts, axis=0)
    seg_len = np.sqrt((seg**2).sum(axis=1))
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    dist = np.minimum(np.arange(cfg.n_frames) * cfg.speed, cum[-1])
    idx = np.clip(np.searchsorted(cum, dist, side="right") - 1, 0, len(seg) - 1)
    frac = (dist - cum[idx]) / np.where(seg_len[idx] > 0, seg_len[idx], 1.0)
    return pts[idx] + seg[idx] * frac[:, None]


def _drift_factor(cfg: SynthConfig, frame_no: int) -> float:
    """Piecewise-linear interpolation of the drift schedule (0 before, flat after)."""
    if not cfg.drift:
        return 0.0
    pts = sorted(cfg.drift)
    frames = [p[0] for p in pts]
    factors = [p[1] for p in pts]
    return float(np.interp(frame_no, frames, factors, left=0.0))


def synth_generate(cfg: SynthConfig) -> Sequence:
    """Deterministic synthetic sequence with exact ground truth."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.frame_h, cfg.frame_w
    tw, th = cfg.target_w, cfg.target_h

    # clutter = shared luminance noise + per-channel chroma noise; with low
    # clutter_chroma the background stays gray-toned so hue separates it
    # from the target, with high values colored distractor blobs appear
    luma = 2.0 * _value_noise(rng, h, w) - 1.0
    background = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        chroma = 2.0 * _value_noise(rng, h, w) - 1.0
        background[:, :, c] = 90.0 + cfg.clutter_amp * (
            (1.0 - cfg.clutter_chroma) * luma + cfg.clutter_chroma * chroma
        )

    # macro-structured texture plus a dark border ring: descriptors need
    # part-level structure and a visible silhouette to localize against
    tex_cell = max(4, min(th, tw) // 3)
    tex = (2.0 * _value_noise(rng, th, tw, cell=tex_cell) - 1.0)[..., None]
    tex_b = (2.0 * _value_noise(rng, th, tw, cell=tex_cell) - 1.0)[..., None]
    color_a = np.asarray(cfg.color, dtype=np.float64)
    color_b = np.asarray(cfg.color2, dtype=np.float64)
    border = np.zeros((th, tw, 1))
    ring = max(2, min(th, tw) // 12)
    border[:ring] = border[-ring:] = 1.0
    border[:, :ring] = border[:, -ring:] = 1.0

    occ_tex = 40.0 + 30.0 * rng.random((h, w, 1))

    centers = _path_positions(cfg)
    noise_rng = np.random.default_rng(cfg.seed + 1)

    frames = []
    gt = []
    for t in range(cfg.n_frames):
        frame_no = t + 1
        img = background.copy()

        f = _drift_factor(cfg, frame_no)
        appearance = (1 - f) * (color_a + cfg.texture_amp * tex) + f * (
            color_b + cfg.texture_amp * tex_b
        )
        appearance = appearance * (1.0 - 0.65 * border)

        cx, cy = centers[t]
        x = int(np.floor(cx - tw / 2 + 0.5))
        y = int(np.floor(cy - th / 2 + 0.5))
        x0, y0 = max(x, 0), max(y, 0)
        x1, y1 = min(x + tw, w), min(y + th, h)
        if x1 > x0 and y1 > y0:
            img[y0:y1, x0:x1] = appearance[y0 - y : y1 - y, x0 - x : x1 - x]

        for start, end, ox, oy, ow, oh in cfg.occlusions:
            if start <= frame_no <= end:
                ox0, oy0 = max(int(ox), 0), max(int(oy), 0)
                ox1, oy1 = min(int(ox + ow), w), min(int(oy + oh), h)
                if ox1 > ox0 and oy1 > oy0:
                    img[oy0:oy1, ox0:ox1] = occ_tex[oy0:oy1, ox0:ox1]

        if cfg.noise_sigma > 0:
            img = img + noise_rng.normal(0.0, cfg.noise_sigma, img.shape)
        frames.append(np.clip(img, 0, 255).astype(np.uint8))
        gt.append(bbox_from_xywh(x + 1, y + 1, tw, th))

    return Sequence(cfg.name, gt, frozenset(cfg.attributes), _ArrayFrames(frames))


def standard_suite(seed: int = 0) -> list:
    """The five verification scenarios used by the acceptance gates."""
    common = dict(frame_w=320, frame_h=240, n_frames=120, target_w=40, target_h=40)
    plain = SynthConfig(
        name="plain-motion",
        path=((50, 70), (270, 170)),
        speed=2.2,
        seed=seed + 11,
        **common,
    )
    abrupt = SynthConfig(
        name="abrupt-drift",
        path=((60, 120), (260, 120)),
        speed=1.8,
        drift=((59, 0.0), (60, 1.0)),
        attributes=("IV",),
        seed=seed + 23,
        **common,
    )
    gradual = SynthConfig(
        name="gradual-drift",
        path=((60, 150), (260, 90)),
        speed=1.8,
        drift=((20, 0.0), (100, 1.0)),
        attributes=("IV",),
        seed=seed + 37,
        **common,
    )
    # slow pass under a static cover spanning the frames 40-55 path segment
    occl_path = ((80, 120), (240, 120))
    occl = SynthConfig(
        name="full-occlusion",
        path=occl_path,
        speed=1.5,
        occlusions=((40, 55, 110, 80, 120, 80),),
        attributes=("OCC",),
        seed=seed + 41,
        **common,
    )
    clutter = SynthConfig(
        name="clutter",
        path=((60, 80), (260, 160)),
        speed=2.0,
        clutter_amp=100.0,
        clutter_chroma=0.8,
        texture_amp=25.0,
        noise_sigma=8.0,
        attributes=("BC",),
        seed=seed + 53,
        **common,
    )
    return [plain, abrupt, gradual, occl, clutter]
