"""Selection between the numba-compiled kernels and the pure numpy/Python path.

Set ``DEMPERS_BACKEND=numpy`` to force the fallback. Both paths run the same
floating point operations in the same order, so results are bit-identical;
only speed differs.
"""

import os

_requested = os.environ.get("DEMPERS_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(
        f"DEMPERS_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

try:
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _requested == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, otherwise an identity decorator.

    The compiled function is always produced if numba is importable, so the
    benchmark can compare both paths in one process regardless of the flag.
    """
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)
