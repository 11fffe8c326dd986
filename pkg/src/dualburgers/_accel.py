"""Backend selection for the element kernels.

Set ``DUALBURGERS_NUMBA=0`` to force the pure-numpy path. The flag is read
at import time; :func:`set_backend` switches at runtime (used by the
benchmark and the backend-equivalence tests).
"""
from __future__ import annotations

import os
import warnings

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

_flag = os.environ.get("DUALBURGERS_NUMBA", "1").strip().lower()
_backend = "numba" if (HAVE_NUMBA and _flag not in ("0", "false", "no", "off")) else "numpy"


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        warnings.warn("numba unavailable, staying on numpy backend")
        return
    _backend = name
