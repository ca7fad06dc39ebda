"""Online ensemble tracking-by-detection.

An ensemble of online linear classifiers with distinct memory horizons
votes on candidate boxes; uncertain members abstain, confident members
exchange the resulting labels co-training style, and each member retrains
on the most informative samples picked committee-style. High ensemble
disagreement flags occlusion. Baseline variants (plain voting, two-member
collaboration, an ablation with split features) share the same loop.
"""

from .classifier import LinearModel, MemberState, TrainingBuffer, label_single, score, update
from .ensemble import EnsembleConfig, Mode, Sample, TrackerOutput
from .errors import (
    ConfigError,
    DataError,
    DegenerateStateError,
    EvaluationError,
    FormatError,
    InitializationError,
    NoPositiveError,
    TrackerError,
)
from .features import Family, Frame
from .geometry import BBox, Transform, apply_transform, clamp_to_frame, iou
from .kernels import BACKEND
from .sampling import SamplerConfig, draw_samples
from .tracker import TrackerState, init_tracker, load_checkpoint, save_checkpoint, step

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BBox",
    "ConfigError",
    "DataError",
    "DegenerateStateError",
    "EnsembleConfig",
    "EvaluationError",
    "Family",
    "FormatError",
    "Frame",
    "InitializationError",
    "LinearModel",
    "MemberState",
    "Mode",
    "NoPositiveError",
    "Sample",
    "SamplerConfig",
    "TrackerError",
    "TrackerOutput",
    "TrackerState",
    "TrainingBuffer",
    "Transform",
    "apply_transform",
    "clamp_to_frame",
    "draw_samples",
    "init_tracker",
    "iou",
    "label_single",
    "load_checkpoint",
    "save_checkpoint",
    "score",
    "step",
    "update",
    "__version__",
]
