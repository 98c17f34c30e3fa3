"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback keeps the package
fully functional in pure-Python environments.  Set RADONLENS_PURE_PYTHON=1
to force the fallback (used by the backend-equivalence tests and the
kernel benchmark).
"""

import os

if os.environ.get("RADONLENS_PURE_PYTHON", "") == "1":
    from radonlens import _projkern_py as _impl
else:
    try:
        from radonlens import _projkern as _impl  # type: ignore[attr-defined]
    except ImportError:
        from radonlens import _projkern_py as _impl

joseph_forward = _impl.joseph_forward
joseph_adjoint = _impl.joseph_adjoint
backproject_linear = _impl.backproject_linear
warp_bilinear = _impl.warp_bilinear
splat_bilinear = _impl.splat_bilinear
splat_bspline3 = _impl.splat_bspline3


def backend_name() -> str:
    """Name of the active kernel implementation: "compiled" or "numpy"."""
    return _impl.BACKEND_NAME
