"""Pick the compiled kernels when importable, else the pure-Python ones.

Set ``PREDCACHE_PURE=1`` to force the fallback.
"""
import os

from predcache.policies import _pure

NAME = "pure"
kernels = _pure
if os.environ.get("PREDCACHE_PURE", "") not in ("1", "true", "yes"):
    try:
        from predcache.policies import _kernels as kernels  # noqa: F811

        NAME = "compiled"
    except ImportError:
        kernels = _pure


def next_arrivals(req):
    return kernels.next_arrivals(req)


def use(name: str):
    """Switch backend at runtime (``"pure"`` or ``"compiled"``); returns the previous name."""
    global kernels, NAME
    prev = NAME
    if name == "pure":
        kernels, NAME = _pure, "pure"
    elif name == "compiled":
        from predcache.policies import _kernels

        kernels, NAME = _kernels, "compiled"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def available() -> list[str]:
    try:
        from predcache.policies import _kernels  # noqa: F401
    except ImportError:
        return ["pure"]
    return ["pure", "compiled"]
