"""Hot-kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
numpy fallback is used.  Set ``RECTREE_BACKEND=python`` or
``RECTREE_BACKEND=compiled`` to force a choice (forcing ``compiled`` when
the extension is missing raises).
"""

import os

_requested = os.environ.get("RECTREE_BACKEND", "").strip().lower()
if _requested not in ("", "python", "compiled"):
    raise RuntimeError(f"RECTREE_BACKEND must be 'python' or 'compiled', got {_requested!r}")

if _requested == "python":
    from . import _numpy as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _numpy as _impl

BACKEND = _impl.BACKEND_NAME
morton_encode = _impl.morton_encode
morton_decode = _impl.morton_decode
group_moments = _impl.group_moments
nearest_centers = _impl.nearest_centers

__all__ = [
    "BACKEND",
    "morton_encode",
    "morton_decode",
    "group_moments",
    "nearest_centers",
]
