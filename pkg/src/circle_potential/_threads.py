"""Thread-count plumbing, imported before anything that pulls in numpy.

CIRCLE_POTENTIAL_THREADS caps the BLAS/OpenMP pools used by the linear
algebra underneath the solvers. The cap only works when set before the
first numpy import in the process, which is why this module must stay
the first import of the package; when numpy is already loaded (embedding
applications), the variable is a no-op for that process.
"""

import os

_BLAS_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


def _apply_thread_cap():
    raw = os.environ.get("CIRCLE_POTENTIAL_THREADS", "").strip()
    if not raw.isdigit() or int(raw) < 1:
        return
    for var in _BLAS_VARS:
        os.environ.setdefault(var, raw)


_apply_thread_cap()
