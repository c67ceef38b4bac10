"""Select the coordinate-descent backend at import time.

The compiled extension is preferred. Setting ``DLSELECT_PURE_PYTHON=1``
forces the numpy fallback, which is also used when the extension was not
built.
"""
import os

from dlselect import _cd_py

try:
    from dlselect import _cd
except ImportError:  # extension not built
    _cd = None

KERNELS = {"python": _cd_py.cd_sweep}
if _cd is not None:
    KERNELS["cython"] = _cd.cd_sweep

if os.environ.get("DLSELECT_PURE_PYTHON") or _cd is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

cd_sweep = KERNELS[BACKEND]


def get_kernel(name=None):
    """Return the sweep function for ``name`` (default: the active backend)."""
    if name is None:
        return cd_sweep
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} unavailable; have {sorted(KERNELS)}") from None
