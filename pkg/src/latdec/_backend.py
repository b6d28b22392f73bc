"""Import-time kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python twin when
the extension is missing or LATDEC_PURE_PYTHON=1 is set.  Functions the
extension does not provide (trace-capable paths, the randomized sampler)
always resolve to the Python twin.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

from . import _kernels_py

_FUNCTIONS = (
    "babai_kernel",
    "enum_kernel",
    "esd_protect_kernel",
    "rsd_kernel",
    "klein_sample_kernel",
    "lll_kernel",
)

if os.environ.get("LATDEC_PURE_PYTHON", "") not in ("", "0"):
    _ext = None
else:
    try:
        from . import _kernels as _ext  # type: ignore[attr-defined]
    except ImportError:
        _ext = None

kernels = SimpleNamespace(**{
    name: getattr(_ext, name, None) or getattr(_kernels_py, name)
    for name in _FUNCTIONS
})

backend_name: str = "cython" if _ext is not None else "python"


def kernel_backend() -> str:
    """Which kernel implementation is active: "cython" or "python"."""
    return backend_name
