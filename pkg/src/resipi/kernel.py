"""Pick the compiled cycle kernel when it is built, else the interpreted one.

Set ``RESIPI_KERNEL=python`` to force the interpreted kernel, or
``RESIPI_KERNEL=cython`` to fail loudly when the extension is missing.
"""
from __future__ import annotations

import os

from . import _kernel as python_kernel

try:
    from . import _ckernel as compiled_kernel
except ImportError:  # extension not built
    compiled_kernel = None

_CHOICES = ("auto", "python", "cython")


def available() -> list:
    return ["python"] + (["cython"] if compiled_kernel is not None else [])


def get_kernel(name: str | None = None):
    """Kernel module by name; ``None`` reads RESIPI_KERNEL (default auto)."""
    name = (name or os.environ.get("RESIPI_KERNEL") or "auto").lower()
    if name not in _CHOICES:
        raise ValueError(f"unknown kernel {name!r}; pick one of {_CHOICES}")
    if name == "python":
        return python_kernel
    if compiled_kernel is None:
        if name == "cython":
            raise ImportError("compiled kernel resipi._ckernel is not built")
        return python_kernel
    return compiled_kernel


def bind(kernel, arrays: dict):
    """Build a ``Core`` over ``arrays``.

    The interpreted kernel gets ``memoryview`` wrappers: element access on
    them returns plain ints, several times faster than numpy scalars.
    """
    if kernel is python_kernel:
        arrays = {k: memoryview(v) for k, v in arrays.items()}
    return kernel.Core(arrays)


def name_of(kernel) -> str:
    return "cython" if kernel is not python_kernel else "python"
