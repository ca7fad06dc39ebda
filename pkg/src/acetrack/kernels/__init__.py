"""Kernel backend selection.

The compiled extension is preferred; the numpy reference implementation is
the fallback. Set ACETRACK_BACKEND=python (or =native) to force a choice —
forcing "native" raises if the extension is missing.
"""

import os

from . import reference

_forced = os.environ.get("ACETRACK_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = reference
    BACKEND = "python"
else:
    try:
        from . import _native as _impl

        BACKEND = "native"
    except ImportError:
        if _forced == "native":
            raise
        _impl = reference
        BACKEND = "python"

extract_patches = _impl.extract_patches
grad_descriptors = _impl.grad_descriptors
color_descriptors = _impl.color_descriptors
hinge_sgd = _impl.hinge_sgd

PATCH = reference.PATCH
GRAD_DIM = reference.GRAD_DIM
COLOR_DIM = reference.COLOR_DIM
