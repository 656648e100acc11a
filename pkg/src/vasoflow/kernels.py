"""Backend selection for the element assembly kernels.

The compiled Cython extension is preferred when it imports cleanly; otherwise
the NumPy implementation is used. Set ``VASOFLOW_PURE_PYTHON=1`` to force the
NumPy backend (useful for benchmarking and debugging).
"""
import os

from . import _kernels_py

if os.environ.get("VASOFLOW_PURE_PYTHON", "") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        _impl = _kernels_py

element_matrices = _impl.element_matrices
element_vectors = _impl.element_vectors
BACKEND = _impl.BACKEND


def available_backends():
    """Return the importable kernel modules keyed by backend name."""
    impls = {_kernels_py.BACKEND: _kernels_py}
    try:
        from . import _kernels_cy
        impls[_kernels_cy.BACKEND] = _kernels_cy
    except ImportError:
        pass
    return impls
