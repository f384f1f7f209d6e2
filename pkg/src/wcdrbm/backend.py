"""Selects the compiled kernel extension or the pure-numpy fallback.

Set WCDRBM_BACKEND=python to force the fallback, WCDRBM_BACKEND=compiled
to require the extension (raising if it is missing); the default "auto"
prefers the extension when it imports.
"""

from __future__ import annotations

import os

from . import _kernels_py

_choice = os.environ.get("WCDRBM_BACKEND", "auto").lower()

if _choice not in ("auto", "compiled", "python"):
    raise RuntimeError(f"WCDRBM_BACKEND must be auto, compiled or python, not {_choice!r}")

if _choice == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise RuntimeError(
                "WCDRBM_BACKEND=compiled but the wcdrbm._kernels extension is not built"
            )
        _impl = _kernels_py

BACKEND = "compiled" if _impl.COMPILED else "python"

MODE_CD = _impl.MODE_CD
MODE_WCD = _impl.MODE_WCD
MODE_PCD = _impl.MODE_PCD
MODE_WPCD = _impl.MODE_WPCD

gibbs_chunk = _impl.gibbs_chunk
update_step = _impl.update_step


def using_compiled() -> bool:
    return _impl.COMPILED
