"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``GROVERDD_PURE_PYTHON`` is set to a non-empty value,
the numpy fallback is used.  ``BACKEND`` names the active implementation.
"""

import os

from groverdd.qsim import _fallback

if os.environ.get("GROVERDD_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from groverdd.qsim import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

apply_superop_1q = _impl.apply_superop_1q
apply_superop_2q = _impl.apply_superop_2q
apply_diagonal = _impl.apply_diagonal
apply_depolarizing_2q = _impl.apply_depolarizing_2q
apply_cz = _impl.apply_cz

__all__ = ["BACKEND", "apply_superop_1q", "apply_superop_2q", "apply_diagonal", "apply_depolarizing_2q", "apply_cz"]
