"""Kernel dispatch: numba-compiled twins by default, pure numpy on request.

Set ``PSDCUTS_DISABLE_NUMBA=1`` (or any of 1/true/yes) to force the plain
numpy path; the same happens automatically when numba is not importable.
"""

import os

_flag = os.environ.get("PSDCUTS_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag in ("1", "true", "yes", "on")

if not _disabled:
    try:
        from ._kernels_numba import (  # noqa: F401
            AT_LB, AT_UB, BASIC,
            DS_INFEASIBLE, DS_OPTIMAL, DS_PIVOT_LIMIT,
            dual_simplex, quad_form, sparsify1_starts, sparsify2_starts,
            violation_state,
        )
        USING_NUMBA = True
    except ImportError:
        _disabled = True

if _disabled:
    from ._kernels_numpy import (  # noqa: F401
        AT_LB, AT_UB, BASIC,
        DS_INFEASIBLE, DS_OPTIMAL, DS_PIVOT_LIMIT,
        dual_simplex, quad_form, sparsify1_starts, sparsify2_starts,
        violation_state,
    )
    USING_NUMBA = False
