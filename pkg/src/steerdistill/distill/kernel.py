"""Selects the compiled tally kernel when available.

Set ``STEERDISTILL_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _tally_py

BACKEND = "python"
tally_block = _tally_py.tally_block

if not os.environ.get("STEERDISTILL_PURE_PYTHON"):
    try:
        from ._tally import tally_block  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

python_tally_block = _tally_py.tally_block
