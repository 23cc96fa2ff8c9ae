"""Select the compiled pair kernel when available, else the numpy fallback.

Set ``BILIPAPPROX_PURE=1`` to force the fallback.
"""

import os

from . import _pairs_py

if os.environ.get("BILIPAPPROX_PURE"):
    _impl = _pairs_py
else:
    try:
        from . import _pairs as _impl
    except ImportError:  # extension not built
        _impl = _pairs_py

COMPILED = _impl is not _pairs_py
pair_min = _impl.pair_min
pair_min_python = _pairs_py.pair_min
