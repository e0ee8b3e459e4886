"""Hot integration loops, compiled when the Cython extension is available.

The compiled backend (``_rk4core``) runs the classical four-stage loop in
C; the NumPy fallback (``_pyloop``) evaluates the same recursion through
precomputed step matrices. Both produce identical results up to floating
point reassociation. Set ``HYBRIDBT_FORCE_PY=1`` to force the fallback
(used by the benchmark and backend-equivalence tests).
"""

import os

if os.environ.get("HYBRIDBT_FORCE_PY"):
    from . import _pyloop as _impl

    BACKEND = "python"
else:
    try:
        from . import _rk4core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _pyloop as _impl

        BACKEND = "python"

rk4_lti = _impl.rk4_lti
affine_scan = _impl.affine_scan


def backend() -> str:
    """Name of the active backend: ``"compiled"`` or ``"python"``."""
    return BACKEND


def available_backends() -> dict:
    """All importable backend modules, keyed by name."""
    from . import _pyloop

    out = {"python": _pyloop}
    try:
        from . import _rk4core  # type: ignore[attr-defined]

        out["compiled"] = _rk4core
    except ImportError:
        pass
    return out
