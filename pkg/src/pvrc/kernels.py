"""Backend selection for the per-query kernels.

The compiled extension is used when importable. Setting the environment
variable ``PVRC_PURE_PYTHON=1`` forces the NumPy fallback.
"""

import importlib
import os

from . import _kernels_py

BACKENDS = ("cython", "python")


def load_backend(name: str):
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        return importlib.import_module("pvrc._kernels")
    raise ValueError(f"unknown kernel backend {name!r}; choose from {BACKENDS}")


def available_backends() -> list[str]:
    names = []
    for name in BACKENDS:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


if os.environ.get("PVRC_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl, BACKEND = _kernels_py, "python"
else:
    try:
        _impl, BACKEND = load_backend("cython"), "cython"
    except ImportError:
        _impl, BACKEND = _kernels_py, "python"

sq_dists = _impl.sq_dists
class_min_sq_dists = _impl.class_min_sq_dists
pvrc_xi = _impl.pvrc_xi
