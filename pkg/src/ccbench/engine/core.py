"""Simulation-core selection: compiled extension when built, pure Python otherwise.

Both cores implement the identical tick algorithm (see ``_loop_py``) and are
required by the test suite to produce byte-identical results; the compiled
one simply gets through multi-gigabit traces an order of magnitude faster.
``CCBENCH_CORE=pure|compiled`` overrides the default.
"""

from __future__ import annotations

import os

from ccbench.engine import _loop_py

try:
    from ccbench.engine import _loop_cy
except ImportError:  # extension not built; pure core still works
    _loop_cy = None

CORES = {"pure": _loop_py}
if _loop_cy is not None:
    CORES["compiled"] = _loop_cy

DEFAULT_CORE = "compiled" if _loop_cy is not None else "pure"


def available_cores():
    return sorted(CORES)


def resolve_core(name: str = "auto"):
    """Return (core_name, module) for ``auto``, ``pure`` or ``compiled``."""
    if name == "auto":
        name = os.environ.get("CCBENCH_CORE", DEFAULT_CORE)
    if name == "auto":
        name = DEFAULT_CORE
    try:
        return name, CORES[name]
    except KeyError:
        raise ValueError(
            f"unknown core {name!r}; available: {available_cores()}"
        ) from None
