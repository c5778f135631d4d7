"""Backend selection for the tree kernels.

The compiled extension is preferred. Set ``NURD_PURE_PYTHON=1`` to force the
numpy fallback, e.g. when comparing the two.
"""

import logging
import os

log = logging.getLogger(__name__)

if os.environ.get("NURD_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import best_split, predict_tree

    BACKEND = "python"
else:
    try:
        from ._kernels import best_split, predict_tree

        BACKEND = "cython"
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable, using numpy fallback")
        from ._kernels_py import best_split, predict_tree

        BACKEND = "python"

__all__ = ["BACKEND", "best_split", "predict_tree"]
