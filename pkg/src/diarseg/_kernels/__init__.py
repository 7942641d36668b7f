"""Kernel backend selection.

The hot interval kernels exist twice: a compiled Cython extension
(``_ckernels``) and a numpy fallback (``_pykernels``).  The compiled
backend is used when it imported successfully; set ``DIARSEG_BACKEND=python``
or ``DIARSEG_BACKEND=c`` to force a choice (forcing ``c`` when the
extension is missing raises at import).
"""

from __future__ import annotations

import os

from . import _pykernels

_FORCED = os.environ.get("DIARSEG_BACKEND", "").strip().lower()

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

if _FORCED == "python":
    _impl = _pykernels
elif _FORCED == "c":
    if _ckernels is None:
        raise ImportError(
            "DIARSEG_BACKEND=c requested but the compiled extension is not built"
        )
    _impl = _ckernels
elif _FORCED:
    raise ImportError(f"unknown DIARSEG_BACKEND value: {_FORCED!r}")
else:
    _impl = _ckernels if _ckernels is not None else _pykernels

BACKEND = "c" if _impl is _ckernels else "python"

merge_sorted = _impl.merge_sorted
intersect = _impl.intersect
intersect_measure = _impl.intersect_measure
der_sweep = _impl.der_sweep


def available_backends() -> dict[str, object]:
    """Importable backends by name, for tests and benchmarks."""
    backends: dict[str, object] = {"python": _pykernels}
    if _ckernels is not None:
        backends["c"] = _ckernels
    return backends
