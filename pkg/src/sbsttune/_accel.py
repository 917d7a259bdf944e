"""Selects the kernel backend at import time.

The compiled ``_ckernels`` extension is used when it was built; otherwise, or
when ``SBSTTUNE_PURE_PYTHON=1`` is set, the pure-Python ``_pykernels`` module
is used. Both produce bit-identical results.
"""

from __future__ import annotations

import logging
import os

from . import _pykernels

_logger = logging.getLogger(__name__)

if os.environ.get("SBSTTUNE_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _logger.debug("compiled kernels unavailable, using pure-Python fallback")
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
CompiledSubject = _impl.CompiledSubject
nondominated_ranks = _impl.nondominated_ranks
run_statements = _impl.run_statements
branch_distances = _impl.branch_distances
shift_refs = _impl.shift_refs
invalid_refs = _impl.invalid_refs
