"""Backend selection for the hot loops.

The compiled extension ``_ckernels`` is used when it was built; otherwise the
pure-Python ``_pykernels`` module takes over with identical results.
"""

from __future__ import annotations

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

BACKEND = "cython" if _ckernels is not None else "python"
bump_ancestors = BACKENDS[BACKEND].bump_ancestors
mcmc_walk = BACKENDS[BACKEND].mcmc_walk


def use_backend(name: str) -> str:
    """Switch the active backend; returns the previous one."""
    global BACKEND, bump_ancestors, mcmc_walk
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable (have {sorted(BACKENDS)})")
    previous = BACKEND
    BACKEND = name
    bump_ancestors = BACKENDS[name].bump_ancestors
    mcmc_walk = BACKENDS[name].mcmc_walk
    return previous
