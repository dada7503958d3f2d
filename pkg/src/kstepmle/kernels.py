"""Kernel backend selection.

The compiled extension is used when importable; set KSTEPMLE_PURE_PYTHON=1
to force the pure-NumPy fallbacks (``kstepmle.kernels.BACKEND`` reports the
active choice). Both backends implement identical contracts.
"""

import os

if os.environ.get("KSTEPMLE_PURE_PYTHON"):
    from . import _pykernels as _impl

    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _pykernels as _impl

        BACKEND = "python"

suffix_logsumexp = _impl.suffix_logsumexp
rc_logpl = _impl.rc_logpl
pava = _impl.pava
cs_objective = _impl.cs_objective
cs_grad_curv = _impl.cs_grad_curv
