"""One-pass evaluation, success curves, AUC, and per-attribute aggregation."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .datasets import ATTRIBUTES, Sequence
from .ensemble import EnsembleConfig
from .errors import EvaluationError
from .geometry import iou
from .tracker import init_tracker, step

# The 21 overlap thresholds 0.00, 0.05, ..., 1.00.
THRESHOLDS = np.linspace(0.0, 1.0, 21)


@dataclass
class SuccessCurve:
    thresholds: np.ndarray
    rates: np.ndarray
    auc: float


def success_curve(ious) -> SuccessCurve:
    """Fraction of frames with overlap strictly above each threshold.

    AUC is the mean of the 21 rates.
    """
    ious = np.asarray(ious, dtype=np.float64)
    if ious.size == 0:
        raise EvaluationError("cannot build a success curve from zero frames")
    if np.any(ious < 0) or np.any(ious > 1):
        raise EvaluationError("iou values must lie in [0, 1]")
    rates = (ious[:, None] > THRESHOLDS[None, :]).mean(axis=0)
    return SuccessCurve(THRESHOLDS.copy(), rates, float(rates.mean()))


@dataclass
class OPEResult:
    sequence: str
    boxes: list
    ious: np.ndarray
    occluded: np.ndarray
    outputs: list
    curve: SuccessCurve
    fps: float


def run_ope(cfg: EnsembleConfig, seq: Sequence, seed: int | None = None) -> OPEResult:
    """One-pass run: initialize on frame 1 ground truth, step once per frame.

    Every frame is scored against ground truth, including frames where the
    tracker held its previous box under occlusion.
    """
    rng = np.random.default_rng(cfg.sampler.seed if seed is None else seed)
    start = time.perf_counter()
    state = init_tracker(seq.frame(0), seq.gt[0], cfg, rng)
    boxes = [state.box]
    ious = [iou(state.box, seq.gt[0])]
    occluded = [False]
    outputs = []
    for i in range(1, len(seq)):
        out = step(state, seq.frame(i))
        outputs.append(out)
        boxes.append(out.box)
        ious.append(iou(out.box, seq.gt[i]))
        occluded.append(out.occluded)
    elapsed = time.perf_counter() - start
    ious = np.array(ious)
    return OPEResult(
        sequence=seq.name,
        boxes=boxes,
        ious=ious,
        occluded=np.array(occluded),
        outputs=outputs,
        curve=success_curve(ious),
        fps=len(seq) / elapsed if elapsed > 0 else float("inf"),
    )


def attribute_table(results: dict, attrs: dict) -> list:
    """Per-attribute mean AUC rows: (attribute, sequence count, mean AUC).

    `results` maps sequence name -> SuccessCurve, `attrs` maps sequence
    name -> tag set. The ALL row aggregates every sequence; attributes with
    no tagged sequence are omitted with a warning.
    """
    if not results:
        raise EvaluationError("no results to aggregate")
    rows = [("ALL", len(results), float(np.mean([c.auc for c in results.values()])))]
    for tag in ATTRIBUTES:
        aucs = [
            results[name].auc for name in results if tag in attrs.get(name, ())
        ]
        if not aucs:
            warnings.warn(f"attribute {tag}: no sequences, omitted", stacklevel=2)
            continue
        rows.append((tag, len(aucs), float(np.mean(aucs))))
    return rows


def attribute_table_csv(tables: dict) -> str:
    """Multi-column CSV comparing modes: one column of rows per tracker mode.

    `tables` maps mode name -> row list from :func:`attribute_table`; rows
    are joined on the attribute name.
    """
    modes = list(tables)
    seen = []
    for rows in tables.values():
        for tag, _, _ in rows:
            if tag not in seen:
                seen.append(tag)
    lines = ["attribute," + ",".join(modes)]
    for tag in seen:
        cells = []
        for mode in modes:
            match = [f"{auc:.6f}" for t, _, auc in tables[mode] if t == tag]
            cells.append(match[0] if match else "")
        lines.append(f"{tag}," + ",".join(cells))
    return "\n".join(lines) + "\n"


_SVG_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_success_plot(curves: dict, title: str = "Success plot") -> str:
    """Self-contained SVG: one polyline per labeled curve, AUC in the legend."""
    if not curves:
        raise EvaluationError("nothing to plot")
    width, height, pad = 640, 480, 60
    inner_w, inner_h = width - 2 * pad, height - 2 * pad

    def px(t: float) -> float:
        return pad + t * inner_w

    def py(r: float) -> float:
        return height - pad - r * inner_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="30" text-anchor="middle" '
        f'font-family="sans-serif" font-size="18">{title}</text>',
    ]
    for k in range(6):
        t = k / 5
        parts.append(
            f'<line x1="{px(t):.1f}" y1="{py(0):.1f}" x2="{px(t):.1f}" '
            f'y2="{py(1):.1f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<line x1="{px(0):.1f}" y1="{py(t):.1f}" x2="{px(1):.1f}" '
            f'y2="{py(t):.1f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{px(t):.1f}" y="{height - pad + 20:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{t:.1f}</text>'
        )
        parts.append(
            f'<text x="{pad - 8:.1f}" y="{py(t) + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{t:.1f}</text>'
        )
    parts.append(
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">overlap threshold</text>'
    )
    ordered = sorted(curves.items(), key=lambda kv: -kv[1].auc)
    for i, (label, curve) in enumerate(ordered):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        pts = " ".join(
            f"{px(t):.2f},{py(r):.2f}" for t, r in zip(curve.thresholds, curve.rates)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = pad + 18 + 18 * i
        parts.append(
            f'<line x1="{width - pad - 150}" y1="{ly - 4}" x2="{width - pad - 120}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - pad - 112}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{label} [AUC={curve.auc:.3f}]</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
