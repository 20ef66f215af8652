"""Backend selection for the matching kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded. Setting ``SYNTH_PRIVAUDIT_PURE=1`` forces the
numpy path.
"""

import os

from . import _kernel_py

BACKEND = "python"
_impl = _kernel_py

if os.environ.get("SYNTH_PRIVAUDIT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel_c as _impl  # noqa: F811
    except ImportError:  # extension not built
        _impl = _kernel_py
    else:
        BACKEND = "cython"

match_flags = _impl.match_flags
subset_tp_fp = _impl.subset_tp_fp
min_hamming = _impl.min_hamming

__all__ = ["BACKEND", "match_flags", "subset_tp_fp", "min_hamming"]
