"""Backend selection for the single-neuron kernels.

The compiled extension is used when it imports; otherwise, or when
``LIFNET_PURE_PYTHON=1`` is set, the pure-Python reference is used.
"""
import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("LIFNET_PURE_PYTHON", "") not in ("1", "true"):
    backend = compiled_backend
else:
    backend = python_backend

BACKEND = backend.BACKEND
MODE_NONE = _pykernels.MODE_NONE
MODE_HARD = _pykernels.MODE_HARD
MODE_MOLLIFIED = _pykernels.MODE_MOLLIFIED
TRUNCATION = _pykernels.TRUNCATION

integrate_neuron = backend.integrate_neuron
adjoint_neuron = backend.adjoint_neuron
gaussian_current = backend.gaussian_current
