"""Backend selection for the hot integration kernels.

The compiled Cython extension is preferred; the pure-numpy twin in
:mod:`ewlab._pykernels` is used when the extension is unavailable or when
EWLAB_FORCE_PYTHON is set.  Both expose the same three functions:
el_rk4, transfer_rk4 and profile_rk4.
"""

import os

if os.environ.get("EWLAB_FORCE_PYTHON"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernels as _impl

BACKEND: str = _impl.BACKEND
el_rk4 = _impl.el_rk4
transfer_rk4 = _impl.transfer_rk4
profile_rk4 = _impl.profile_rk4
