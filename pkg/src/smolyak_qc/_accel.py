"""Numba switch.

Hot kernels are compiled with numba when it is importable and the
``SMOLYAK_QC_NUMBA`` environment variable is not set to a false value
(``0``, ``false``, ``no``, ``off``). Otherwise the pure-numpy versions run.
"""

import os

ENV_FLAG = "SMOLYAK_QC_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False


def _flag_enabled() -> bool:
    value = os.environ.get(ENV_FLAG, "1").strip().lower()
    return value not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _flag_enabled()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is available, identity otherwise."""
    bare = len(args) == 1 and callable(args[0])
    if not HAVE_NUMBA:
        return args[0] if bare else (lambda f: f)
    kwargs.setdefault("cache", True)
    if bare:
        return numba.njit(**kwargs)(args[0])
    return numba.njit(*args, **kwargs)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
