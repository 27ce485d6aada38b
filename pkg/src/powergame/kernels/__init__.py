"""Numerical kernel backend selection.

The compiled extension (``_native``, Cython) is preferred when available;
otherwise the pure-numpy fallback (``_pure``) is used.  Set the environment
variable ``POWERGAME_KERNELS`` to ``pure`` or ``native`` to force a backend
(``native`` raises if the extension is missing).
"""
import os

from . import _pure

_choice = os.environ.get("POWERGAME_KERNELS", "auto").lower()

if _choice == "pure":
    _impl = _pure
elif _choice == "native":
    from . import _native as _impl
elif _choice == "auto":
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _pure
else:
    raise ValueError(
        f"POWERGAME_KERNELS must be 'auto', 'pure' or 'native', got {_choice!r}")

BACKEND = _impl.BACKEND
mmse_quadforms = _impl.mmse_quadforms
mmse_quadform_single = _impl.mmse_quadform_single


def backend_name():
    """Name of the kernel backend in use ('native' or 'pure')."""
    return BACKEND
