"""Kernel selection: the compiled extension when importable, else the Python fallback.

Set ``SELMER_RATIOS_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load() -> ModuleType:
    if os.environ.get("SELMER_RATIOS_PURE", "") not in ("", "0"):
        return _kernels_py
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py
    return _kernels


SAT = 9_000_000_000_000_000_000  # int64 saturation value of the compiled kernel

_impl = _load()
BACKEND: str = _impl.BACKEND
grid_eval = _impl.grid_eval
python = _kernels_py


def enumerate_box(f4, f6, w0, w1, Amax, Bmax, amax, bmax, A_lo, A_hi, backend: ModuleType | None = None):
    """Run the box kernel and finish int64-overflow pairs exactly in Python."""
    mod = backend or _impl
    if mod is not _kernels_py:
        # the compiled kernel takes int64 bounds; SAT marks "possibly larger"
        a, b, A, B, overflow, wide = mod.enumerate_box(
            f4, f6, w0, w1, Amax, Bmax, min(amax, SAT), min(bmax, SAT), A_lo, A_hi
        )
    else:
        a, b, A, B, overflow, wide = mod.enumerate_box(f4, f6, w0, w1, Amax, Bmax, amax, bmax, A_lo, A_hi)
    extra = []
    for a_hi, a_lo, b_hi, b_lo, sA, sB in wide:
        ra, rb = (a_hi << 64) + a_lo, (b_hi << 64) + b_lo
        if abs(ra) <= amax and abs(rb) <= bmax:
            extra.append((ra, rb, sA, sB))
    if overflow:
        t4, t6 = _kernels_py._terms(f4), _kernels_py._terms(f6)
        for sA, sB in overflow:
            ra, rb = _kernels_py.image_pair(t4, t6, sA, sB)
            if abs(ra) <= amax and abs(rb) <= bmax:
                extra.append((ra, rb, sA, sB))
    if not extra:
        return a, b, A, B
    import numpy as np

    rows = list(zip(a.tolist(), b.tolist(), A.tolist(), B.tolist())) + extra
    rows.sort(key=lambda r: (r[2], r[3]))  # restore iteration order
    cols = list(zip(*rows))
    big = any(abs(x) >= 2**62 for x in cols[0] + cols[1])
    # past int64 the coefficients stay Python integers
    return tuple(np.array(c, dtype=object if big else np.int64) for c in cols)
