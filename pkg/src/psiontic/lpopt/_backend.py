"""Pick the compiled pivot kernel when it is importable.

Set ``PSIONTIC_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernel_py

BACKEND = "python"
kernel = _kernel_py

if os.environ.get("PSIONTIC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        kernel = _compiled
        BACKEND = "cython"


def get_kernel(name: str | None = None):
    """Return a kernel module by name (``"python"`` or ``"cython"``), default the active one."""
    if name is None:
        return kernel
    if name == "python":
        return _kernel_py
    if name == "cython":
        from . import _kernel as _compiled  # type: ignore[attr-defined]

        return _compiled
    raise ValueError(f"unknown backend {name!r}")
