"""Process-wide knobs: the dense-matrix memory cap and the kernel backend."""

from __future__ import annotations

import os
from contextlib import contextmanager
from contextvars import ContextVar

DEFAULT_CAP = 4096

_cap: ContextVar[int] = ContextVar("latticetherm_cap", default=DEFAULT_CAP)


def current_cap() -> int:
    return _cap.get()


@contextmanager
def cap_override(cap: int):
    """Temporarily raise (or lower) the Hilbert-dimension cap."""
    if cap < 1:
        raise ValueError("cap must be positive")
    token = _cap.set(int(cap))
    try:
        yield cap
    finally:
        _cap.reset(token)


def numba_disabled() -> bool:
    return os.environ.get("LATTICETHERM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


def thread_count(default: int = 1) -> int:
    raw = os.environ.get("LATTICETHERM_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return default
    return max(1, n)
