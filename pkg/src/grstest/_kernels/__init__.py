"""Hot kernels with a compiled core and a pure-numpy fallback.

The compiled extension (Cython) is preferred when it built successfully;
set ``GRSTEST_KERNELS=python`` to force the fallback. Both backends are
bit-for-bit identical (integer arithmetic throughout), which the test
suite asserts.
"""

from __future__ import annotations

import os

from grstest._kernels import _fallback

_FORCED = os.environ.get("GRSTEST_KERNELS", "").lower()

if _FORCED in ("", "c", "compiled", "auto"):
    try:
        from grstest._kernels import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        if _FORCED in ("c", "compiled"):
            raise
        _impl = _fallback
        BACKEND = "python"
elif _FORCED in ("py", "python", "numpy"):
    _impl = _fallback
    BACKEND = "python"
else:
    raise ValueError(f"unknown GRSTEST_KERNELS value {_FORCED!r}")

mix64 = _impl.mix64
rank_group_moments = _impl.rank_group_moments


def backend_name() -> str:
    return BACKEND
