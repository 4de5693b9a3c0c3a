"""Kernel backend selection.

The compiled extension is preferred when present; the pure-numpy fallback is
used otherwise, or when ``CHAOSCAST_PURE=1`` is set.  Both expose the same
three functions with identical semantics.
"""

from __future__ import annotations

import os

if os.environ.get("CHAOSCAST_PURE", "0") not in ("", "0"):
    from . import _pykernels as kernels

    BACKEND = "pure"
else:
    try:
        from . import _ckernels as kernels  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _pykernels as kernels

        BACKEND = "pure"

lorenz63_trajectory = kernels.lorenz63_trajectory
lorenz96_trajectory = kernels.lorenz96_trajectory
skill_statistic_batch = kernels.skill_statistic_batch
