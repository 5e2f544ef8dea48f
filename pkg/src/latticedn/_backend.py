"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``LATTICEDN_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _shoot_py

BACKEND = "python"
shoot_batch = _shoot_py.shoot_batch

if os.environ.get("LATTICEDN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._shoot import shoot_batch  # type: ignore[no-redef]  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass
