"""Select the SGD kernel at import time.

The compiled extension is preferred; set ``FAIRSEMI_PURE_PYTHON=1`` to force
the numpy fallback (used by the parity tests and the benchmark).
"""
import os

from . import _sgd_py

BACKEND = "python"
sgd_epoch = _sgd_py.sgd_epoch

if os.environ.get("FAIRSEMI_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._sgd import sgd_epoch  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass
