"""Backend selection for the integration kernels.

The compiled module ``_ckernels`` is used when it was built; otherwise the
numpy module ``_pykernels`` is used. Set ``GREEN500KIT_PURE_PYTHON=1`` to
force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("GREEN500KIT_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

interp = _impl.interp
interval_energy = _impl.interval_energy
cumulative_energy = _impl.cumulative_energy
energy_at = _impl.energy_at
window_energies = _impl.window_energies


def available_backends() -> dict:
    """Map of backend name to module for every backend importable here."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
