"""Hot-kernel dispatch: compiled Cython core when built, numpy otherwise.

Set ``MKG_KERNELS=python`` to force the numpy fallback.  ``BACKEND`` names
the active implementation.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("MKG_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

propagate = _impl.propagate
current = _impl.current
mtilde = _impl.mtilde
pair_product = _impl.pair_product
# numpy's vectorized pow beats the scalar libm loop (see benchmarks/)
hsb_sumsq = _pykernels.hsb_sumsq

__all__ = ["BACKEND", "propagate", "current", "mtilde", "pair_product", "hsb_sumsq"]
