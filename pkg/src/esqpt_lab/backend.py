"""Kernel backend selection.

The Sturm-sequence and inverse-iteration kernels exist twice: a numba
``@njit`` implementation (default) and a pure-numpy fallback.  The active
backend is chosen by the environment variable ``ESQPT_BACKEND``:

* ``ESQPT_BACKEND=numba``  - force the jitted kernels (error if numba is absent)
* ``ESQPT_BACKEND=numpy``  - force the pure-numpy kernels
* unset                    - numba if importable, else numpy

:func:`set_backend` switches at runtime (used by the benchmark and tests).
"""

from __future__ import annotations

import os

_BACKEND = None  # resolved lazily
_FORCED = None


def _resolve(name):
    if name == "numba":
        from . import _kernels_numba as mod
    elif name == "numpy":
        from . import _kernels_numpy as mod
    else:
        raise ValueError(f"unknown backend {name!r} (expected 'numba' or 'numpy')")
    return mod


def _default_name():
    env = os.environ.get("ESQPT_BACKEND", "").strip().lower()
    if env:
        return env
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


def set_backend(name):
    """Force the kernel backend ('numba' or 'numpy') for this process."""
    global _BACKEND, _FORCED
    _FORCED = name
    _BACKEND = _resolve(name)
    return _BACKEND


def backend_name():
    """Name of the active backend."""
    get_kernels()
    return "numba" if _BACKEND.__name__.endswith("numba") else "numpy"


def get_kernels():
    """Return the active kernel module, resolving it on first use."""
    global _BACKEND
    if _BACKEND is None:
        _BACKEND = _resolve(_FORCED or _default_name())
    return _BACKEND
