"""Backend selection for the fused sphere kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported.  Setting ``PROJVI_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("PROJVI_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

EL_I = _kernels_py.EL_I
EL_II = _kernels_py.EL_II
HTVI = _kernels_py.HTVI
RGD = _kernels_py.RGD
STATUS_MAX_ITER = _kernels_py.STATUS_MAX_ITER
STATUS_CONVERGED = _kernels_py.STATUS_CONVERGED
STATUS_DIVERGED = _kernels_py.STATUS_DIVERGED
STATUS_ANTIPODAL = _kernels_py.STATUS_ANTIPODAL

sphere_rayleigh_run = _impl.sphere_rayleigh_run
el_coefficients = _impl.el_coefficients
htvi_coefficients = _impl.htvi_coefficients


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
