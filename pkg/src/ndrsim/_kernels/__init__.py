"""Hot kernels, compiled when available.

The compiled module is used unless it failed to build or the environment
variable ``NDRSIM_PURE_PYTHON`` is set to a non-empty value other than ``0``.
``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels

_force_python = os.environ.get("NDRSIM_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure Python backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

tm_run = _impl.tm_run
answer_codes = _impl.answer_codes
contains_sum = _impl.contains_sum
contains_count = _impl.contains_count


def backends():
    """Return the importable kernel modules keyed by backend name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
