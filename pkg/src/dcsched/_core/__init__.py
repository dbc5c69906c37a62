"""Hot-path kernels behind the scheduler availability views.

Two interchangeable implementations exist: a Cython extension
(``dcsched._core._speedups``) and a pure-Python fallback
(``dcsched._core.pure``). Both produce bit-identical results; the compiled
one is only faster. The extension is picked at import time when present.
Set the environment variable ``DCSCHED_PURE=1`` to force the fallback.
"""
import os

from . import pure

if os.environ.get("DCSCHED_PURE"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

claim_next = _impl.claim_next
refresh_cluster = _impl.refresh_cluster


def _load_backends() -> dict:
    """All importable backends by name; used by tests and the benchmark."""
    backends = {"pure": pure}
    try:
        from . import _speedups
        backends["compiled"] = _speedups
    except ImportError:
        pass
    return backends
