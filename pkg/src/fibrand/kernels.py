"""Kernel selection: compiled extension if importable, numpy fallback otherwise.

Set ``FIBRAND_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("FIBRAND_PURE_PYTHON"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        from . import _pykernels as _impl

BACKEND = _impl.BACKEND
perm_chain = _impl.perm_chain
mat_chain = _impl.mat_chain
cycle_type = _impl.cycle_type
group_convolve = _impl.group_convolve
right_shift_norms = _impl.right_shift_norms
