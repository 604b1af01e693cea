"""Numerical kernels used by every inner optimization loop.

Two interchangeable backends provide the same four primitives:

* ``sigma_max(m)``      -- largest singular value of a complex matrix
* ``top_triple(m)``     -- leading singular triple ``(sigma, u, v)``
* ``expm(a)``           -- matrix exponential of a small square matrix
* ``dexp_adjoint(a, g)``-- adjoint of the derivative of ``expm`` at ``a``

``_core`` is a compiled Cython extension calling LAPACK directly; ``_pure``
is the numpy/scipy fallback.  The compiled backend is preferred when it
imported successfully; set ``OPNORM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pure

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

if _core is not None and os.environ.get("OPNORM_PURE_PYTHON", "") != "1":
    _active = _core
else:
    _active = _pure

sigma_max = _active.sigma_max
top_triple = _active.top_triple
expm = _active.expm
dexp_adjoint = _active.dexp_adjoint


def backend_name():
    """Name of the backend selected at import time."""
    return "compiled" if _active is _core else "pure"


def available_backends():
    """Mapping of backend name to module, for benchmarks and tests."""
    out = {"pure": _pure}
    if _core is not None:
        out["compiled"] = _core
    return out
